"""Inhomogeneous plane waves and their time-averaged energy flux.

A wave ``u = Re[a exp(-i omega t + i k.x)]`` with ``k = kR + i kI`` solves the
equation of motion when ``Q_ijrs(-i omega) k_j k_s a_r = rho omega^2 a_i``.
Its period-averaged flux (with ``Psi_l = -sigma_kl du_k/dt``) is

    <Psi_l> = (omega^2 / 2) exp(-2 kI.x) Im[conj(a_k) G~_klmn(-i omega) a_m k_n]
            = (omega / 2)   exp(-2 kI.x) Re[conj(a_k) Q_klmn(-i omega)  a_m k_n].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.signal

from .errors import AccuracyError, DomainError, SolverError
from .medium import RelaxationModel, christoffel, q_of_p, relaxation_at, voigt_to_tensor
from .planewave import PlaneWaveMode, modal_solve

RESIDUAL_GATE = 1e-8


@dataclass(frozen=True)
class InhomogeneousWave:
    omega: float
    kR: np.ndarray
    kI: np.ndarray
    amplitude: np.ndarray
    residual: float

    @property
    def k(self) -> np.ndarray:
        return self.kR + 1j * self.kI

    def accepted(self, rho: float, gate: float = RESIDUAL_GATE) -> bool:
        return self.residual <= gate * rho * self.omega**2


@dataclass(frozen=True)
class FluxResult:
    mean_flux: np.ndarray
    dot_kI: float
    angle_deg: float
    flux_q_form: np.ndarray
    kI: np.ndarray

    def at(self, x) -> np.ndarray:
        """Mean flux at position ``x``; decays as ``exp(-2 kI.x)``."""
        return np.exp(-2.0 * float(np.dot(self.kI, x))) * self.mean_flux


def christoffel_residual(model: RelaxationModel, omega: float, k, a) -> float:
    """``|| Q_ijrs(-i omega) k_j k_s a_r - rho omega^2 a_i ||``."""
    a = np.asarray(a, dtype=complex)
    G = christoffel(model, -1j * omega, k)
    return float(np.linalg.norm(G @ a - model.rho * omega**2 * a))


def wave_from_mode(model: RelaxationModel, mode: PlaneWaveMode) -> InhomogeneousWave:
    """Collinear wave ``k = i kappa n`` for a modal solution."""
    k = mode.wavevector
    a = mode.polarization / np.linalg.norm(mode.polarization)
    return InhomogeneousWave(mode.omega, k.real.copy(), k.imag.copy(), a,
                             christoffel_residual(model, mode.omega, k, a))


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("direction vectors must be unit length")
    return v


def _select_eig(G, target, track=None):
    w, V = np.linalg.eig(G)
    if track is None:
        j = int(np.argmin(np.abs(w - target)))
    else:
        V = V / np.linalg.norm(V, axis=0)
        j = int(np.argmax(np.abs(track.conj() @ V)))
    return w[j], V[:, j]


def inhomogeneous_solve(model: RelaxationModel, omega: float, n, m, seed,
                        max_iter: int = 100, tol: float = 1e-14,
                        track=None) -> InhomogeneousWave:
    """Find ``k = alpha n + i beta m`` with a non-trivial Christoffel null vector.

    Damped Newton on the two real equations ``(mu(k) - rho omega^2) / (rho omega^2) = 0``,
    where ``mu(k)`` is the eigenvalue of ``Q_ijrs k_j k_s`` closest to
    ``rho omega^2`` (or, when ``track`` is given, whose eigenvector overlaps
    most with ``track``); its roots are exactly the roots of
    ``det[Q k k - rho omega^2 I]``. The Jacobian is a central finite difference.
    """
    n, m = _unit(n), _unit(m)
    target = model.rho * omega**2
    Tq = voigt_to_tensor(q_of_p(model, -1j * omega))

    def gamma(x):
        k = x[0] * n + 1j * x[1] * m
        return np.einsum("ijrs,j,s->ir", Tq, k, k)

    def F(x):
        mu, _ = _select_eig(gamma(x), target, track)
        r = (mu - target) / target
        return np.array([r.real, r.imag])

    x = np.array(seed, dtype=float)
    fx = F(x)
    for _ in range(max_iter):
        if np.linalg.norm(fx) <= tol:
            break
        scale = max(np.abs(x).max(), 1e-12)
        h = 1e-7 * scale
        J = np.empty((2, 2))
        for c in range(2):
            e = np.zeros(2)
            e[c] = h
            J[:, c] = (F(x + e) - F(x - e)) / (2 * h)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Newton Jacobian: {exc}", float(np.linalg.norm(fx)))
        lam = 1.0
        for _ in range(40):
            x_new = x + lam * step
            f_new = F(x_new)
            if np.linalg.norm(f_new) < np.linalg.norm(fx):
                break
            lam *= 0.5
        else:
            break
        converged_step = np.linalg.norm(lam * step) <= 1e-15 * scale
        x, fx = x_new, f_new
        if converged_step:
            break

    k = x[0] * n + 1j * x[1] * m
    mu, a = _select_eig(gamma(x), target, track)
    a = a / np.linalg.norm(a)
    res = christoffel_residual(model, omega, k, a)
    if res > RESIDUAL_GATE * target:
        raise SolverError(
            f"Newton did not converge (residual {res:.3e}, |F| {np.linalg.norm(fx):.3e})",
            res,
        )
    if x[1] < -1e-10 * max(abs(x[0]), 1.0):
        raise DomainError(f"solution has beta = {x[1]:.3e} < 0 (growing wave)")
    return InhomogeneousWave(float(omega), (x[0] * n).astype(float),
                             (max(x[1], 0.0) * m).astype(float), a, res)


def attack_direction(n, angle_deg: float) -> np.ndarray:
    """Unit vector at ``angle_deg`` from ``n``, turned towards a fixed perpendicular."""
    n = np.asarray(n, dtype=float)
    ref = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    t = np.cross(ref, n)
    t /= np.linalg.norm(t)
    th = np.radians(angle_deg)
    m = np.cos(th) * n + np.sin(th) * t
    return m / np.linalg.norm(m)


def attack_angle_sweep(model: RelaxationModel, omega: float, n, mode_index: int,
                       angles_deg: Sequence[float], step_deg: float = 5.0) -> dict:
    """Continue one collinear mode through increasing attack angles.

    The solve starts from the modal solution (``kI`` parallel to ``n``) and
    walks in steps of at most ``step_deg``, seeding each Newton solve with the
    previous ``(alpha, beta)``. Returns ``{angle: wave}``; if the continuation
    breaks down, the failing angle and all larger ones map to the exception.
    """
    n = np.asarray(n, dtype=float)
    targets = sorted({float(a) for a in angles_deg})
    if targets and (targets[0] < 0 or targets[-1] >= 90):
        raise ValueError("attack angles must lie in [0, 90)")
    mode = modal_solve(model, n, omega)[mode_index]
    x = (omega * mode.inv_speed, mode.attenuation)
    out, prev = {}, 0.0
    path = []
    for a in targets:
        nsub = max(int(np.ceil((a - prev) / step_deg)), 1)
        path.extend(np.linspace(prev, a, nsub + 1)[1:] if a > prev else [a])
        prev = a
    failure, track = None, mode.polarization / np.linalg.norm(mode.polarization)
    for ang in path:
        if failure is not None:
            if ang in targets:
                out[ang] = failure
            continue
        if ang == 0.0:
            wave = wave_from_mode(model, mode)
        else:
            try:
                wave = inhomogeneous_solve(model, omega, n, attack_direction(n, ang), x,
                                           track=track)
            except (SolverError, DomainError) as exc:
                failure = exc
                if ang in targets:
                    out[ang] = exc
                continue
        x = (float(wave.kR @ n), float(np.linalg.norm(wave.kI)))
        track = wave.amplitude
        if ang in targets:
            out[ang] = wave
    return out


def solve_attack_angle(model: RelaxationModel, omega: float, n, mode_index: int,
                       angle_deg: float, step_deg: float = 5.0) -> InhomogeneousWave:
    """Single-angle version of :func:`attack_angle_sweep`; raises on failure."""
    res = attack_angle_sweep(model, omega, n, mode_index, [angle_deg], step_deg)[float(angle_deg)]
    if isinstance(res, Exception):
        raise res
    return res


def mean_flux(model: RelaxationModel, wave: InhomogeneousWave) -> FluxResult:
    """Period-averaged energy flux at ``x = 0``.

    Computed from ``G~(-i omega)`` and cross-checked against the ``Q`` form.
    """
    w = wave.omega
    Q = voigt_to_tensor(q_of_p(model, -1j * w))
    Gt = Q / (-1j * w)
    a, k = wave.amplitude, wave.k
    flux_g = 0.5 * w**2 * np.einsum("k,klmn,m,n->l", a.conj(), Gt, a, k).imag
    flux_q = 0.5 * w * np.einsum("k,klmn,m,n->l", a.conj(), Q, a, k).real
    dot = float(flux_g @ wave.kI)
    nf, nk = np.linalg.norm(flux_g), np.linalg.norm(wave.kI)
    if nf > 0 and nk > 0:
        angle = float(np.degrees(np.arccos(np.clip(dot / (nf * nk), -1.0, 1.0))))
    else:
        angle = float("nan")
    return FluxResult(flux_g, dot, angle, flux_q, np.asarray(wave.kI, dtype=float))


def _oracle_pass(model, wave, n_periods, n_samples, t_max):
    w = wave.omega
    T = 2 * np.pi / w
    h = T / n_samples
    N = n_periods * n_samples
    a, k = wave.amplitude, wave.k

    t = np.arange(N) * h
    ph = np.exp(-1j * w * t)
    v = (-1j * w * a[:, None] * ph[None, :]).real                 # du/dt, (3, N)
    grad_u = (1j * np.outer(a, k)[:, :, None] * ph).real          # du_m/dx_n, (3, 3, N)
    Tinf = voigt_to_tensor(model.ginf)
    sigma = np.einsum("klmn,mnt->klt", Tinf, grad_u)

    if model.terms:
        M = int(np.ceil(t_max / h))
        s = np.arange(M + 1) * h
        Gd = voigt_to_tensor(relaxation_at(model, s) - model.ginf).reshape(M + 1, 3, 3, 9)
        wts = np.full(M + 1, h)
        wts[0] = wts[-1] = 0.5 * h
        # velocity gradient sampled on (j - i) h for j in [0, N), i in [0, M]
        tau = np.arange(-M, N) * h
        D = (w * np.outer(a, k).reshape(9)[None, :] * np.exp(-1j * w * tau)[:, None]).real
        conv = np.empty((3, 3, N))
        for kk in range(3):
            for ll in range(3):
                g = wts[:, None] * Gd[:, kk, ll, :]
                c = scipy.signal.fftconvolve(g, D, axes=0)
                conv[kk, ll] = c[M:M + N].sum(axis=1)
        sigma = sigma + conv
    psi = -np.einsum("klt,kt->lt", sigma, v)
    return psi.mean(axis=1)


def flux_time_oracle(model: RelaxationModel, wave: InhomogeneousWave, n_periods: int = 1,
                     n_samples: int = 400, t_max: float | None = None,
                     richardson: bool = True) -> np.ndarray:
    """Mean flux at ``x = 0`` from the time-domain fields.

    The stress is the equilibrium part ``Ginf : grad u(t)`` plus the memory
    convolution ``int_0^t_max (G(s) - Ginf) : grad v(t - s) ds`` done with the
    composite trapezoid rule on step ``h = T / n_samples``; ``-sigma . v`` is
    then averaged over ``n_periods`` periods. The convolution error is
    ``O(h^2)``; with ``richardson=True`` the ``h`` and ``h/2`` results are
    combined to cancel it.
    """
    if n_samples < 8 or n_periods < 1:
        raise ValueError("need n_samples >= 8 and n_periods >= 1")
    if t_max is None:
        t_max = 40.0 / min(t.rate for t in model.terms) if model.terms else 0.0
    elif model.terms and t_max < 40.0 / min(t.rate for t in model.terms) - 1e-12:
        raise AccuracyError(f"t_max = {t_max} truncates the memory kernel (need >= 40 / min rate)")
    coarse = _oracle_pass(model, wave, n_periods, n_samples, t_max)
    if not richardson or not model.terms:
        return coarse
    fine = _oracle_pass(model, wave, n_periods, 2 * n_samples, t_max)
    return (4.0 * fine - coarse) / 3.0


@dataclass
class AcuteAngleReport:
    dots: np.ndarray
    tol: float
    passed: bool
    worst: float
    worst_index: int
    skipped: list = field(default_factory=list)

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"acute angle {status}: min <Psi>.kI = {self.worst:.3e} over "
                f"{len(self.dots)} waves (tol {self.tol:g})")


def acute_angle_check(model: RelaxationModel, waves: Sequence[InhomogeneousWave],
                      tol: float = 1e-10) -> AcuteAngleReport:
    """Check ``<Psi> . kI >= -tol`` on every accepted wave.

    Waves failing the residual gate are listed in ``skipped`` and not judged.
    """
    dots, skipped = [], []
    for i, wv in enumerate(waves):
        if not wv.accepted(model.rho):
            skipped.append(i)
            continue
        dots.append(mean_flux(model, wv).dot_kI)
    dots = np.array(dots)
    if len(dots) == 0:
        return AcuteAngleReport(dots, tol, True, float("inf"), -1, skipped)
    j = int(np.argmin(dots))
    return AcuteAngleReport(dots, tol, bool(dots[j] >= -tol), float(dots[j]), j, skipped)

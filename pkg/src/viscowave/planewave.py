"""Plane waves along a fixed normal: the wave operator K_n and its uses.

``K_n(p) = sqrt(rho) * p * Q_n(p)^{-1/2}`` is a matrix-valued CBF in ``p``.
On the imaginary axis ``p = -i omega`` it splits as

    K_n(-i omega) = -i omega C_n(omega) + A_n(omega)

into an inverse-phase-speed matrix ``C_n`` and an attenuation matrix ``A_n``,
both real symmetric and positive semi-definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bernstein import PickReport, upper_half_grid, verify_pick
from .linalg_core import matrix_exp, principal_inv_sqrt_eig, spectral_norm
from .medium import RelaxationModel, acoustic_tensor, contract_direction

#: |y| * ||omega C + A|| below this guarantees convergence of the Zassenhaus product
ZASSENHAUS_RADIUS = 0.596705
CLUSTER_RTOL = 1e-7
PSD_TOL = 1e-10


def k_matrix(model: RelaxationModel, n, p: complex) -> np.ndarray:
    """Wave operator ``K_n(p)`` (complex symmetric 3x3)."""
    p = complex(p)
    if p == 0:
        return np.zeros((3, 3), dtype=complex)
    if model.is_elastic:
        # Q_n is real and constant; keep K exactly proportional to p
        return np.sqrt(model.rho) * p * wavefront_matrix(model, n).astype(complex)
    K = np.sqrt(model.rho) * p * principal_inv_sqrt_eig(acoustic_tensor(model, n, p))
    return 0.5 * (K + K.T)


def wavefront_matrix(model: RelaxationModel, n) -> np.ndarray:
    """High-frequency limit ``B_n = (G0_n / rho)^{-1/2}`` (real symmetric)."""
    G0n = contract_direction(model.g0, np.asarray(n, dtype=float))
    w, V = np.linalg.eigh(0.5 * (G0n + G0n.T) / model.rho)
    return (V / np.sqrt(w)[None, :]) @ V.T


def pick_test_k(model: RelaxationModel, n, grid=None, tol: float = 1e-9) -> PickReport:
    grid = upper_half_grid() if grid is None else grid
    return verify_pick(lambda z: k_matrix(model, n, z), grid, tol)


# ---------------------------------------------------------------------------
# modal solutions


@dataclass
class PlaneWaveMode:
    """One root of the dispersion equation along ``n``.

    ``kappa`` is an eigenvalue of ``K_n(-i omega)``; the physical wave vector is
    ``k = i kappa n`` so the field decays as ``exp(-Re(kappa) n.x)``.
    """

    omega: float
    n: np.ndarray
    kappa: complex
    polarization: np.ndarray
    multiplicity: int
    eigenspace_dim: int
    residual: float
    # Rayleigh quotients v^H A_n v and v^H C_n v of the polarization
    rq_attenuation: float = float("nan")
    rq_inv_speed: float = float("nan")

    @property
    def attenuation(self) -> float:
        return float(self.kappa.real)

    @property
    def inv_speed(self) -> float:
        return float(-self.kappa.imag / self.omega)

    @property
    def phase_speed(self) -> float:
        return 1.0 / self.inv_speed

    @property
    def wavevector(self) -> np.ndarray:
        return 1j * self.kappa * np.asarray(self.n, dtype=float)


def _cluster_sizes(lam: np.ndarray) -> np.ndarray:
    scale = max(np.max(np.abs(lam)), 1e-300)
    return np.array([int(np.sum(np.abs(lam - l) <= CLUSTER_RTOL * scale)) for l in lam])


def modal_solve(model: RelaxationModel, n, omega: float) -> list[PlaneWaveMode]:
    """Three plane-wave modes along ``n`` at circular frequency ``omega``.

    Modes are sorted by ascending phase speed. Each ``kappa_j`` is an
    eigenvalue of ``K_n(-i omega)``, hence a square root of an eigenvalue
    of ``K_n^2`` with ``Re kappa >= 0``.
    """
    if omega == 0:
        raise ValueError("omega must be non-zero")
    n = np.asarray(n, dtype=float)
    K = k_matrix(model, n, -1j * omega)
    K2 = K @ K
    if model.is_elastic:
        w, V = np.linalg.eigh(wavefront_matrix(model, n))
        kap = np.array([complex(0.0, -omega * np.sqrt(model.rho) * x) for x in w])
    else:
        kap, V = np.linalg.eig(K)
    lam = kap**2
    sizes = _cluster_sizes(lam)
    A = K.real
    C = -K.imag / omega
    norm_k2 = np.linalg.norm(K2, 2)
    modes = []
    for j in range(3):
        v = V[:, j] / np.linalg.norm(V[:, j])
        # kappa and -kappa give the two propagation directions; keep Re >= 0
        kj = kap[j] if kap[j].real >= 0 else -kap[j]
        res = np.linalg.norm(K2 @ v - lam[j] * v) / max(norm_k2, 1e-300)
        sv = np.linalg.svd(K2 - lam[j] * np.eye(3), compute_uv=False)
        dim = int(np.sum(sv <= CLUSTER_RTOL * max(norm_k2, 1e-300)))
        modes.append(PlaneWaveMode(
            omega=float(omega), n=n, kappa=complex(kj), polarization=v,
            multiplicity=int(sizes[j]), eigenspace_dim=max(dim, 1), residual=float(res),
            rq_attenuation=float(np.real(v.conj() @ A @ v)),
            rq_inv_speed=float(np.real(v.conj() @ C @ v)),
        ))
    modes.sort(key=lambda m: m.phase_speed)
    return modes


# ---------------------------------------------------------------------------
# matrix plane waves


@dataclass(frozen=True)
class MatrixWaveDescriptor:
    omega: float
    n: np.ndarray
    Cmat: np.ndarray
    Amat: np.ndarray
    a0: float
    B_inf: np.ndarray

    @property
    def operator(self) -> np.ndarray:
        """``K_n(-i omega) = -i omega C + A``."""
        return -1j * self.omega * self.Cmat + self.Amat

    @property
    def c_eigs(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.Cmat)

    @property
    def a_eigs(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.Amat)


def matrix_wave(model: RelaxationModel, n, omega: float) -> MatrixWaveDescriptor:
    """Split ``K_n(-i omega)`` into inverse phase speed and attenuation matrices."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    n = np.asarray(n, dtype=float)
    K = k_matrix(model, n, -1j * omega)
    A = K.real
    C = -K.imag / omega
    A = 0.5 * (A + A.T)
    C = 0.5 * (C + C.T)
    return MatrixWaveDescriptor(float(omega), n, C, A, float(np.linalg.eigvalsh(A)[0]),
                                wavefront_matrix(model, n))


def propagator(desc: MatrixWaveDescriptor, y: float) -> np.ndarray:
    """``exp(-y K_n(-i omega))``; its norm is at most ``exp(-a0 y)``."""
    if y < 0:
        raise ValueError("propagation distance must be non-negative")
    return matrix_exp(-y * desc.operator)


def attenuation_bound(desc: MatrixWaveDescriptor, y: float) -> tuple[float, float]:
    """(spectral norm of the propagator, ``exp(-a0 y)``)."""
    return spectral_norm(propagator(desc, y)), float(np.exp(-desc.a0 * y))


@dataclass
class ZassenhausSplit:
    residual: float
    residual_reversed: float
    factors: tuple
    convergent: bool
    order: int

    @property
    def phi_residual(self) -> float:
        return self.residual


def zassenhaus_split(desc: MatrixWaveDescriptor, y: float, order: int = 1) -> ZassenhausSplit:
    """Disentangle ``exp(y(i omega C - A))`` into phase and attenuation factors.

    Order 1 uses ``exp(i omega y C) exp(-y A)`` (and the reversed product);
    order 2 appends the first commutator factor ``exp(-(y^2/2) [X, Y])`` with
    ``X = i omega C``, ``Y = -A`` (``+`` for the reversed product).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    w = desc.omega
    X = 1j * w * desc.Cmat
    Y = -desc.Amat.astype(complex)
    exact = matrix_exp(y * (X + Y))
    eX, eY = matrix_exp(y * X), matrix_exp(y * Y)
    fwd, rev = eX @ eY, eY @ eX
    if order == 2:
        comm = X @ Y - Y @ X
        fwd = fwd @ matrix_exp(-0.5 * y**2 * comm)
        rev = rev @ matrix_exp(0.5 * y**2 * comm)
    conv = abs(y) * spectral_norm(w * desc.Cmat + desc.Amat) <= ZASSENHAUS_RADIUS
    return ZassenhausSplit(spectral_norm(exact - fwd), spectral_norm(exact - rev),
                           (fwd, rev), bool(conv), order)


@dataclass
class QuasiElasticExpansion:
    """Amplitude expansions in the eigenbases of ``C_n`` and ``A_n``."""

    exact: np.ndarray
    c_basis: np.ndarray
    c_coeffs: np.ndarray
    c_inv_speeds: np.ndarray
    c_reconstruction: np.ndarray
    a_basis: np.ndarray
    a_coeffs: np.ndarray
    a_rates: np.ndarray
    a_reconstruction: np.ndarray
    degenerate_c: bool
    degenerate_a: bool
    zassenhaus_residual: float

    @property
    def c_error(self) -> float:
        return float(np.linalg.norm(self.exact - self.c_reconstruction))

    @property
    def a_error(self) -> float:
        return float(np.linalg.norm(self.exact - self.a_reconstruction))


def _degenerate(w: np.ndarray) -> bool:
    gaps = np.diff(np.sort(w))
    return bool(np.any(gaps <= CLUSTER_RTOL * max(np.max(np.abs(w)), 1e-300)))


def quasi_elastic_expand(desc: MatrixWaveDescriptor, amplitude, y: float) -> QuasiElasticExpansion:
    """Propagate ``amplitude`` through the factored forms.

    * C-basis (quasi-elastic modes): ``exp(-y A) sum_j exp(i omega y / c_j) v_j w_j``
    * A-basis: ``exp(i omega y C) sum_i exp(-y a_i) v_i w_i``

    Both equal ``exp(-y K) a`` up to the Zassenhaus factor.
    """
    a = np.asarray(amplitude, dtype=complex)
    if not np.any(a):
        raise ValueError("amplitude must be non-zero")
    w = desc.omega
    exact = propagator(desc, y) @ a

    cw, cV = np.linalg.eigh(desc.Cmat)
    cv = cV.T @ a
    c_rec = matrix_exp(-y * desc.Amat) @ (cV @ (np.exp(1j * w * y * cw) * cv))

    aw, aV = np.linalg.eigh(desc.Amat)
    av = aV.T @ a
    a_rec = matrix_exp(1j * w * y * desc.Cmat) @ (aV @ (np.exp(-y * aw) * av))

    z = zassenhaus_split(desc, y, 1)
    return QuasiElasticExpansion(exact, cV, cv, cw, c_rec, aV, av, aw, a_rec,
                                 _degenerate(cw), _degenerate(aw),
                                 max(z.residual, z.residual_reversed))


@dataclass
class ConstantEigvecReport:
    """Result of scanning ``K_n`` for frequency-independent eigenvectors."""

    omegas: np.ndarray
    candidates: np.ndarray
    drift: np.ndarray
    constant: np.ndarray
    pick: list = field(default_factory=list)
    inv_speed: np.ndarray = None
    attenuation: np.ndarray = None
    threshold: float = 1e-8

    @property
    def has_constant(self) -> bool:
        return bool(np.any(self.constant))

    def constant_vectors(self) -> np.ndarray:
        return self.candidates[:, self.constant]


def scalar_channel(model: RelaxationModel, n, v):
    """The scalar CBF ``kappa(p) = v^T K_n(p) v`` for a constant eigenvector ``v``."""
    v = np.asarray(v, dtype=float)
    return lambda p: complex(v @ k_matrix(model, n, p) @ v)


def constant_eigvec_check(model: RelaxationModel, n, omegas, threshold: float = 1e-8,
                          grid=None) -> ConstantEigvecReport:
    """Detect eigenvectors of ``K_n`` that do not depend on frequency.

    Candidates are the eigenvectors of ``C_n`` at the first frequency. The drift
    of a candidate is the largest eigen-residual ``||K v - (v.K v) v|| / ||K||``
    over all frequencies. Constant candidates get a scalar Pick test and the
    ``1/c``, ``a`` split of their eigenvalue.
    """
    omegas = np.asarray(omegas, dtype=float)
    if len(omegas) < 3:
        raise ValueError("need at least three frequencies")
    n = np.asarray(n, dtype=float)
    K0 = k_matrix(model, n, -1j * omegas[0])
    _, V = np.linalg.eigh(-K0.imag)
    drift = np.zeros(3)
    for w in omegas:
        K = k_matrix(model, n, -1j * w)
        nk = np.linalg.norm(K, 2)
        for j in range(3):
            v = V[:, j]
            Kv = K @ v
            drift[j] = max(drift[j], np.linalg.norm(Kv - (v @ Kv) * v) / nk)
    constant = drift < threshold
    report = ConstantEigvecReport(omegas, V, drift, constant, threshold=threshold)
    if report.has_constant:
        grid = upper_half_grid(10, 10) if grid is None else grid
        inv_c, att = [], []
        for j in np.flatnonzero(constant):
            f = scalar_channel(model, n, V[:, j])
            report.pick.append(verify_pick(f, grid, 1e-9))
            vals = np.array([f(-1j * w) for w in omegas])
            inv_c.append(-vals.imag / omegas)
            att.append(vals.real)
        report.inv_speed = np.array(inv_c)
        report.attenuation = np.array(att)
    return report

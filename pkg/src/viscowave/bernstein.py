"""Matrix-valued complete Bernstein and Stieltjes functions with discrete measures.

A matrix-valued CBF with a finitely supported measure has the form

    A(z) = B + z C + z * sum_k M_k / (z + s_k)

with ``B, C, M_k`` real symmetric positive semi-definite and ``s_k > 0``.
The matching Stieltjes form is ``B + C / z + sum_k M_k / (z + s_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.integrate

from .errors import AccuracyError, ConditioningError, DomainError
from .linalg_core import as_cmat, imag_part, is_psd, min_eigenvalue

Evaluator = Callable[[complex], np.ndarray]

#: reject evaluation points with |arg z - pi| below this
CUT_ANGLE_TOL = 1e-9
PSD_TOL = 1e-10


def _check_off_cut(z: complex) -> complex:
    z = complex(z)
    if z == 0:
        return z
    if abs(abs(np.angle(z)) - np.pi) < CUT_ANGLE_TOL:
        raise DomainError(f"z = {z} lies on the cut ]-inf, 0]")
    return z


def _as_matrix(value) -> np.ndarray:
    A = np.asarray(value, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    return A


def _sym_psd(name: str, M) -> np.ndarray:
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got {A.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise ValueError(f"{name} is not symmetric")
    if not is_psd(A, PSD_TOL):
        raise ValueError(f"{name} is not positive semi-definite")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class MvCbfRep:
    """Discrete-measure representation ``(B, C, [(s_k, M_k)])``."""

    B: np.ndarray
    C: np.ndarray
    nodes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        B = _sym_psd("B", self.B)
        C = _sym_psd("C", self.C)
        if B.shape != C.shape:
            raise ValueError("B and C must have the same shape")
        nodes = []
        prev = 0.0
        for s, M in self.nodes:
            s = float(s)
            if not s > prev:
                raise ValueError("node positions must be positive and strictly increasing")
            M = _sym_psd(f"M at s={s}", M)
            if M.shape != B.shape:
                raise ValueError("node weights must match the shape of B")
            nodes.append((s, M))
            prev = s
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "nodes", tuple(nodes))

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    def measure(self) -> list[tuple[float, float]]:
        """Scalar measure ``mu = sum_k trace(M_k) delta_{s_k}`` as (s, mass) pairs."""
        return [(s, float(np.trace(M))) for s, M in self.nodes]

    def mass(self, a: float, b: float) -> np.ndarray:
        """Matrix measure of the interval ]a, b]."""
        out = np.zeros_like(self.B)
        for s, M in self.nodes:
            if a < s <= b:
                out = out + M
        return out


# Same data, read through the Stieltjes representation.
StieltjesRep = MvCbfRep


@dataclass(frozen=True)
class ScalarCbfRep:
    """Scalar CBF ``f(x) = a + b x + sum_k rho_k x / (x + s_k)``."""

    a: float = 0.0
    b: float = 0.0
    nodes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be non-negative")
        nodes = tuple((float(s), float(r)) for s, r in self.nodes)
        for s, r in nodes:
            if s <= 0 or r < 0:
                raise ValueError("nodes need s_k > 0 and rho_k >= 0")
        object.__setattr__(self, "nodes", nodes)

    def __call__(self, x: complex) -> complex:
        x = _check_off_cut(x)
        return self.a + self.b * x + sum(r * x / (x + s) for s, r in self.nodes)


def eval_mvcbf(rep: MvCbfRep, z: complex) -> np.ndarray:
    """Evaluate ``B + z C + z sum_k M_k / (z + s_k)``.

    Real ``z >= 0`` gives a real symmetric matrix (returned with complex dtype).
    """
    z = _check_off_cut(z)
    A = rep.B + z * rep.C
    for s, M in rep.nodes:
        if z + s == 0:
            raise DomainError(f"z = {z} hits the pole at -{s}")
        A = A + (z / (z + s)) * M
    return np.asarray(A, dtype=complex)


def eval_stieltjes(rep: StieltjesRep, z: complex) -> np.ndarray:
    """Evaluate ``B + C / z + sum_k M_k / (z + s_k)``."""
    z = _check_off_cut(z)
    if z == 0:
        raise DomainError("Stieltjes representation is singular at z = 0")
    A = rep.B + rep.C / z
    for s, M in rep.nodes:
        A = A + M / (z + s)
    return np.asarray(A, dtype=complex)


@dataclass
class PickReport:
    """Per-point minimum eigenvalue of ``Im A(z) / sign(Im z)``."""

    points: np.ndarray = field(repr=False)
    min_eigs: np.ndarray = field(repr=False)
    tol: float
    passed: bool
    worst: float
    worst_point: complex

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"Pick test {status}: worst min eig {self.worst:.3e} at z={self.worst_point:.4g} "
                f"({len(self.points)} points, tol {self.tol:g})")


def upper_half_grid(n_radius: int = 20, n_angle: int = 20,
                    r_min: float = 1e-2, r_max: float = 1e4,
                    margin: float = 0.02) -> np.ndarray:
    """Polar grid in the open upper half-plane, hugging both half-axes."""
    r = np.logspace(np.log10(r_min), np.log10(r_max), n_radius)
    theta = np.linspace(margin, np.pi - margin, n_angle)
    return (r[:, None] * np.exp(1j * theta[None, :])).ravel()


def verify_pick(evaluator: Evaluator, grid: Sequence[complex], tol: float = 1e-9,
                sign: int = 1) -> PickReport:
    """Check ``sign * Im z * Im A(z) >= -tol`` on ``grid``.

    ``sign=-1`` tests the reversed (Stieltjes) inequality.
    """
    pts = np.asarray(grid, dtype=complex).ravel()
    if np.any(pts.imag == 0):
        raise ValueError("grid points must lie off the real axis")
    mins = np.empty(len(pts))
    for i, z in enumerate(pts):
        A = _as_matrix(evaluator(z))
        mins[i] = sign * np.sign(z.imag) * min_eigenvalue(imag_part(A))
    k = int(np.argmin(mins))
    return PickReport(pts, mins, tol, bool(mins[k] >= -tol), float(mins[k]), complex(pts[k]))


def cbf_of_matrix(f: ScalarCbfRep, B) -> np.ndarray:
    """``f(B) = a I + b B + sum_k rho_k B (s_k I + B)^{-1}``."""
    A = as_cmat(B)
    w = np.linalg.eigvals(A)
    if np.any((np.abs(w.imag) <= 1e-12 * (1 + np.abs(w))) & (w.real <= 1e-12)):
        raise DomainError("B has a non-positive real eigenvalue")
    eye = np.eye(A.shape[0])
    out = f.a * eye + f.b * A
    for s, r in f.nodes:
        M = s * eye + A
        if np.linalg.cond(M) > 1e14:
            raise DomainError(f"s I + B is singular at s = {s}")
        out = out + r * np.linalg.solve(M, A)
    return out


def sqrt_cbf(n_nodes: int) -> ScalarCbfRep:
    """Discretised ``sqrt(x)``.

    The density ``s^{-1/2} / pi`` is pushed through ``s = u^2/(1-u)^2`` and
    sampled with an ``n_nodes``-point Gauss-Legendre rule on ``u in (0, 1)``.
    """
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * (t + 1.0)
    w = 0.5 * w
    s = u**2 / (1.0 - u) ** 2
    rho = w * (2.0 / np.pi) / (1.0 - u) ** 2
    return ScalarCbfRep(0.0, 0.0, tuple(zip(s, rho)))


def invert_to_stieltjes(rep: MvCbfRep, max_cond: float = 1e12) -> Evaluator:
    """Evaluator for ``A(z)^{-1}``, a matrix-valued Stieltjes function."""

    def inverse(z):
        A = eval_mvcbf(rep, z)
        c = np.linalg.cond(A)
        if not np.isfinite(c) or c > max_cond:
            raise ConditioningError(f"A(z) is singular or ill-conditioned at z = {z} (cond {c:.3g})")
        return np.linalg.inv(A)

    return inverse


# ---------------------------------------------------------------------------
# measure recovery


@dataclass
class DensityRecovery:
    """Estimated matrix measure of an interval with its extrapolation trail."""

    mass_matrix: np.ndarray
    interval: tuple
    eps: np.ndarray
    estimates: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @property
    def mass(self) -> float:
        return float(np.trace(self.mass_matrix).real)


def _boundary_coefficients(evaluator: Evaluator):
    try:
        B = _as_matrix(evaluator(0.0)).real
    except (DomainError, ZeroDivisionError, FloatingPointError, np.linalg.LinAlgError):
        B = _as_matrix(evaluator(1e-12)).real
    c8 = _as_matrix(evaluator(1e8)).real / 1e8
    c7 = _as_matrix(evaluator(1e7)).real / 1e7
    # x^{-1} A(x) = C + D/x + o(1/x)
    C = (10.0 * c8 - c7) / 9.0
    return B, C


def recover_density(evaluator: Evaluator, interval, eps_sequence=(1e-2, 1e-3, 1e-4),
                    height: float | None = None, rtol: float = 1e-3) -> DensityRecovery:
    """Recover the matrix measure of ``]a, b]`` from boundary values of ``A``.

    Computes ``(1/pi) int_a^b Im[A0(-s + i eps) / (s - i eps)] ds`` with
    ``A0(z) = A(z) - B - z C`` for each ``eps`` and extrapolates linearly to
    ``eps = 0``. The segment integral is evaluated on a contour lifted into
    the upper half-plane (vertical legs at the endpoints, horizontal leg at
    ``height``); by analyticity this equals the segment integral and keeps
    the quadrature away from narrow Poisson peaks.

    An endpoint carrying a point mass is moved right by ``1e-6`` relative, and
    the ``eps`` sequence is scaled to stay two decades below that shift.
    """
    a, b = map(float, interval)
    if not 0 < a < b:
        raise ValueError("interval must satisfy 0 < a < b")
    eps = np.asarray(sorted(eps_sequence, reverse=True), dtype=float)
    if len(eps) < 2 or eps[-1] <= 0:
        raise ValueError("need at least two positive eps values")
    B, C = _boundary_coefficients(evaluator)
    H = height if height is not None else max(1.0, b - a)

    def h(z):
        return (_as_matrix(evaluator(z)) - B - z * C) / (-z)

    def detect_node(x):
        near = np.linalg.norm(h(complex(-x, 1e-7 * x)))
        far = np.linalg.norm(h(complex(-x, 1e-3 * x)))
        return near > 1e3 * max(far, 1e-300)

    # a node on an endpoint is moved inside ]a, b]; eps must then resolve the shift
    shift = 0.0
    if detect_node(a):
        shift = 1e-6 * a
        a += shift
    if detect_node(b):
        shift = 1e-6 * b
        b += shift
    if shift and eps[0] > 1e-2 * shift:
        eps = eps * (1e-2 * shift / eps[0])

    def leg(z0, z1):
        dz = z1 - z0
        val, _ = scipy.integrate.quad_vec(lambda t: h(z0 + t * dz) * dz, 0.0, 1.0,
                                          epsabs=1e-13, epsrel=1e-11, limit=2000)
        return val

    estimates = []
    for e in eps:
        p0, p1, p2, p3 = complex(-a, e), complex(-a, H), complex(-b, H), complex(-b, e)
        # int_a^b h(-s + i e) ds = -int_{p0 -> p3} h dz, deformed through p1, p2
        J = -(leg(p0, p1) + leg(p1, p2) + leg(p2, p3))
        estimates.append(imag_part(J) / np.pi)
    estimates = np.array(estimates)

    flat = estimates.reshape(len(eps), -1)
    coef = np.polyfit(eps, flat, 1)
    full = coef[1]
    tail = np.polyfit(eps[-2:], flat[-2:], 1)[1]
    scale = max(np.max(np.abs(full)), 1.0)
    if np.max(np.abs(full - tail)) > rtol * scale:
        raise AccuracyError(
            f"eps extrapolation not converged: {np.max(np.abs(full - tail)):.3e} spread"
        )
    mass = full.reshape(estimates.shape[1:])
    return DensityRecovery(0.5 * (mass + mass.conj().T), (a, b), eps, estimates, B, C)

"""Anisotropic viscoelastic media with Prony-series relaxation tensors.

Rank-4 tensors are stored as 6x6 Voigt matrices using the factor-free
(stress-like) map on both index pairs::

    11 -> 0, 22 -> 1, 33 -> 2, 23 -> 3, 13 -> 4, 12 -> 5

so ``G_ijkl = V[voigt(i, j), voigt(k, l)]`` with no factors of 2 or sqrt(2).

The relaxation modulus is ``G(t) = Ginf + sum_k G_k exp(-r_k t)`` and its
Laplace-domain modulus ``Q(p) = p G~(p) = Ginf + sum_k G_k p / (p + r_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
VOIGT_INDEX = np.array([[0, 5, 4],
                        [5, 1, 3],
                        [4, 3, 2]])


def voigt_to_tensor(V) -> np.ndarray:
    """Expand a 6x6 Voigt matrix (or a stack of them) to ``(..., 3, 3, 3, 3)``."""
    V = np.asarray(V)
    i = VOIGT_INDEX[:, :, None, None]
    j = VOIGT_INDEX[None, None, :, :]
    return V[..., i, j]


def tensor_to_voigt(T) -> np.ndarray:
    T = np.asarray(T)
    out = np.empty(T.shape[:-4] + (6, 6), dtype=T.dtype)
    for a, (i, j) in enumerate(VOIGT_PAIRS):
        for b, (k, l) in enumerate(VOIGT_PAIRS):
            out[..., a, b] = T[..., i, j, k, l]
    return out


def isotropic_voigt(lam: float, mu: float) -> np.ndarray:
    V = np.zeros((6, 6))
    V[:3, :3] = lam
    V[[0, 1, 2], [0, 1, 2]] = lam + 2 * mu
    V[[3, 4, 5], [3, 4, 5]] = mu
    return V


def rotate_voigt(V, R) -> np.ndarray:
    """Rotate a Voigt-stored tensor: ``G'_ijkl = R_ia R_jb R_kc R_ld G_abcd``."""
    T = voigt_to_tensor(V)
    Tr = np.einsum("ia,jb,kc,ld,abcd->ijkl", R, R, R, R, T, optimize=True)
    return tensor_to_voigt(Tr)


def _check_voigt(name, V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape != (6, 6):
        raise ValueError(f"{name} must be 6x6, got {V.shape}")
    if not np.all(np.isfinite(V)):
        raise ValueError(f"{name} has non-finite entries")
    if np.max(np.abs(V - V.T)) > 1e-12 * max(1.0, np.max(np.abs(V))):
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (V + V.T)


@dataclass(frozen=True)
class PronyTerm:
    rate: float
    modulus: np.ndarray

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"Prony rate must be positive, got {self.rate}")
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "modulus", _check_voigt("Prony modulus", self.modulus))


@dataclass(frozen=True)
class RelaxationModel:
    """Density plus Prony relaxation tensor.

    Construction only validates structure (shapes, symmetry, distinct positive
    rates). Physical admissibility is checked separately by
    :func:`check_strong_ellipticity`, :func:`prony_weights_psd` and the
    :mod:`viscowave.cpd` routines, so inadmissible models can still be built
    and diagnosed.
    """

    rho: float
    ginf: np.ndarray
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"density must be positive, got {self.rho}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "ginf", _check_voigt("equilibrium modulus", self.ginf))
        terms = tuple(t if isinstance(t, PronyTerm) else PronyTerm(*t) for t in self.terms)
        rates = [t.rate for t in terms]
        if len(set(rates)) != len(rates):
            raise ValueError("Prony rates must be distinct")
        object.__setattr__(self, "terms", terms)

    @property
    def g0(self) -> np.ndarray:
        """Instantaneous modulus ``G(0) = Ginf + sum_k G_k``."""
        return self.ginf + sum((t.modulus for t in self.terms), np.zeros((6, 6)))

    @property
    def is_elastic(self) -> bool:
        return not self.terms

    def rotated(self, R) -> "RelaxationModel":
        R = np.asarray(R, dtype=float)
        return RelaxationModel(
            self.rho,
            rotate_voigt(self.ginf, R),
            tuple(PronyTerm(t.rate, rotate_voigt(t.modulus, R)) for t in self.terms),
        )

    def to_dict(self) -> dict:
        return {
            "density": self.rho,
            "equilibrium_modulus_voigt": self.ginf.tolist(),
            "prony_terms": [
                {"rate": t.rate, "modulus_voigt": t.modulus.tolist()} for t in self.terms
            ],
        }


def q_of_p(model: RelaxationModel, p: complex) -> np.ndarray:
    """Laplace-domain modulus ``Q(p)`` in Voigt form (complex 6x6)."""
    p = complex(p)
    if p.imag == 0 and p.real < 0:
        raise DomainError(f"p = {p} lies on the cut ]-inf, 0]")
    Q = model.ginf.astype(complex)
    for t in model.terms:
        if p + t.rate == 0:
            raise DomainError(f"p = {p} hits the pole at -{t.rate}")
        Q = Q + (p / (p + t.rate)) * t.modulus
    return Q


def christoffel(model: RelaxationModel, p: complex, k) -> np.ndarray:
    """``Gamma_ir = Q_ijrs(p) k_j k_s`` for a (possibly complex) vector ``k``."""
    T = voigt_to_tensor(q_of_p(model, p))
    k = np.asarray(k, dtype=complex)
    return np.einsum("ijrs,j,s->ir", T, k, k)


def _unit(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector, |n| = {np.linalg.norm(n)}")
    return n


def acoustic_tensor(model: RelaxationModel, n, p: complex) -> np.ndarray:
    """Acoustic tensor ``Q_n(p)``; complex symmetric 3x3."""
    G = christoffel(model, p, _unit(n))
    return 0.5 * (G + G.T)


def contract_direction(V, n) -> np.ndarray:
    """Real 3x3 contraction ``V_ijrs n_j n_s`` of a Voigt-stored tensor."""
    T = voigt_to_tensor(np.asarray(V))
    return np.einsum("ijrs,j,s->ir", T, n, n)


def relaxation_at(model: RelaxationModel, t) -> np.ndarray:
    """``G(t)`` in Voigt form; vectorised over an array of times."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("relaxation modulus is defined for t >= 0")
    out = np.broadcast_to(model.ginf, t.shape + (6, 6)).copy()
    for term in model.terms:
        out += np.exp(-term.rate * t)[..., None, None] * term.modulus
    return out


def prony_weights_psd(model: RelaxationModel, tol: float = 1e-10) -> bool:
    return all(np.linalg.eigvalsh(t.modulus)[0] >= -tol for t in model.terms)


def icosphere(level: int = 2) -> np.ndarray:
    """Vertices of a subdivided icosahedron on the unit sphere.

    Level 0 has 12 vertices, level 1 has 42, level 2 has 162.
    """
    phi = (1 + 5**0.5) / 2
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts)


def sample_directions(count: int, level: int = 2) -> np.ndarray:
    """``count`` deterministic, roughly even picks from the icosphere lattice."""
    V = icosphere(level)
    idx = np.linspace(0, len(V) - 1, count).round().astype(int)
    return V[idx]


@dataclass
class EllipticityReport:
    min_eigenvalue: float
    worst_direction: np.ndarray
    n_directions: int

    @property
    def passed(self) -> bool:
        return self.min_eigenvalue > 0

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"strong ellipticity {status}: min eigenvalue {self.min_eigenvalue:.6g} "
                f"over {self.n_directions} directions")


def check_strong_ellipticity(model: RelaxationModel,
                             directions: Sequence | None = None) -> EllipticityReport:
    """Minimum eigenvalue of ``Ginf_n`` over a set of directions."""
    dirs = icosphere(2) if directions is None else np.asarray(directions, dtype=float)
    if len(dirs) == 0:
        raise ValueError("need at least one direction")
    T = voigt_to_tensor(model.ginf)
    worst, worst_n = np.inf, None
    for n in dirs:
        n = n / np.linalg.norm(n)
        lam = np.linalg.eigvalsh(np.einsum("ijrs,j,s->ir", T, n, n))[0]
        if lam < worst:
            worst, worst_n = lam, n
    return EllipticityReport(float(worst), worst_n, len(dirs))


# ---------------------------------------------------------------------------
# reference media


def isotropic_elastic(lam: float = 1.0, mu: float = 1.0, rho: float = 1.0) -> RelaxationModel:
    return RelaxationModel(rho, isotropic_voigt(lam, mu))


def reference_medium_a() -> RelaxationModel:
    """Isotropic standard linear solid: lambda = 1, mu(t) = 1 + 0.5 exp(-t), rho = 1."""
    return RelaxationModel(1.0, isotropic_voigt(1.0, 1.0),
                           (PronyTerm(1.0, isotropic_voigt(0.0, 0.5)),))


REFERENCE_B_SEED = 20240917
_B_SPECTRUM = np.diag([3.0, 2.5, 2.0, 1.5, 1.0, 0.8])


def _seeded_orthogonal(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((6, 6)))
    return Q * np.sign(np.diag(R))[None, :]


def _spd_from_basis(D) -> np.ndarray:
    M = D.T @ _B_SPECTRUM @ D
    return 0.5 * (M + M.T)


def reference_medium_b() -> RelaxationModel:
    """Triclinic medium with non-proportional relaxation.

    ``Ginf = D^T diag(3, 2.5, 2, 1.5, 1, 0.8) D`` and
    ``G_1 = 0.3 E^T diag(3, 2.5, 2, 1.5, 1, 0.8) E`` for two fixed seeded
    orthogonal matrices ``D``, ``E``; ``r_1 = 2``, ``rho = 1``. Using a second
    basis for ``G_1`` keeps ``C_n`` and ``A_n`` from commuting.
    """
    ginf = _spd_from_basis(_seeded_orthogonal(REFERENCE_B_SEED))
    g1 = 0.3 * _spd_from_basis(_seeded_orthogonal(REFERENCE_B_SEED + 1))
    return RelaxationModel(1.0, ginf, (PronyTerm(2.0, g1),))


def reference_medium_b_proportional() -> RelaxationModel:
    """Variant with ``G_1 = 0.3 Ginf``.

    Here ``Q(p)`` is a scalar multiple of ``Ginf``, so every direction has
    frequency-independent eigenvectors and ``C_n``, ``A_n`` commute.
    """
    ginf = _spd_from_basis(_seeded_orthogonal(REFERENCE_B_SEED))
    return RelaxationModel(1.0, ginf, (PronyTerm(2.0, 0.3 * ginf),))

"""Complete positive definiteness of relaxation functions.

A Prony relaxation function is CPD when for every fixed ``v`` the scalar
``v.G(t)v`` is non-negative, non-increasing and convex on ``t > 0``. In the
frequency domain this shows up as ``Re G~(-i omega) >= 0`` for real ``omega``.
For the Prony form
``Re G~(-i omega) = pi Ginf delta(omega) + sum_k G_k r_k / (r_k^2 + omega^2)``;
the point mass at zero is checked through ``Ginf >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg_core import min_eigenvalue
from .medium import RelaxationModel, relaxation_at

DEFAULT_TOL = 1e-10
CONVEX_TOL = 1e-12


@dataclass
class CpdReport:
    time_domain_pass: bool | None
    freq_domain_pass: bool | None
    worst_margin: float
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p is not False for p in (self.time_domain_pass, self.freq_domain_pass))

    def __str__(self):
        def s(p):
            return "n/a" if p is None else ("PASS" if p else "FAIL")
        return (f"CPD time {s(self.time_domain_pass)}, frequency {s(self.freq_domain_pass)}, "
                f"worst margin {self.worst_margin:.3e}")


def sphere_samples(count: int, dim: int = 6, seed: int = 42) -> np.ndarray:
    """Uniform random unit vectors, shape ``(count, dim)``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def default_time_grid(model: RelaxationModel, count: int = 200) -> np.ndarray:
    if model.terms:
        rates = np.array([t.rate for t in model.terms])
        lo, hi = 1e-3 / rates.max(), 40.0 / rates.min()
    else:
        lo, hi = 1e-3, 1e3
    return np.concatenate([[0.0], np.geomspace(lo, hi, count - 1)])


def probe_vectors(model: RelaxationModel, v_samples=200, seed: int = 42) -> np.ndarray:
    """Random unit Voigt vectors plus the eigenvectors of ``Ginf`` and each ``G_k``.

    The eigenvectors make an indefinite weight visible even when its negative
    eigenspace is too thin for random sampling to hit.
    """
    if np.isscalar(v_samples):
        V = sphere_samples(int(v_samples), seed=seed)
    else:
        V = np.atleast_2d(np.asarray(v_samples, dtype=float))
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
    extra = [np.linalg.eigh(model.ginf)[1].T]
    extra += [np.linalg.eigh(t.modulus)[1].T for t in model.terms]
    return np.vstack([V] + extra)


def check_cpd_time(model: RelaxationModel, v_samples=200, t_grid=None, seed: int = 42,
                   tol: float = DEFAULT_TOL) -> CpdReport:
    """Sampled positivity, monotonicity and convexity of ``v.G(t)v``.

    ``v_samples`` is a count of seeded random unit vectors in Voigt space or an
    explicit ``(m, 6)`` array. Convexity is judged on divided differences so
    that non-uniform grids are handled.
    """
    V = probe_vectors(model, v_samples, seed)
    t = default_time_grid(model) if t_grid is None else np.sort(np.asarray(t_grid, dtype=float))
    if t.size < 3:
        raise ValueError("t_grid needs at least 3 points")
    G = relaxation_at(model, t)                                    # (nt, 6, 6)
    g = np.einsum("vi,tij,vj->vt", V, G, V)
    scale = max(float(np.abs(model.g0).max()), 1.0)
    slopes = np.diff(g, axis=1) / np.diff(t)[None, :]
    slope_scale = scale + float(np.abs(slopes).max())

    margins = {
        "value": (g.min(axis=1) / scale, tol),
        "monotone": ((-np.diff(g, axis=1)).min(axis=1) / scale, tol),
        "convex": (np.diff(slopes, axis=1).min(axis=1) / slope_scale, CONVEX_TOL),
    }
    witnesses, worst = [], np.inf
    for name, (rel, lim) in margins.items():
        worst = min(worst, float(rel.min()))
        for idx in np.flatnonzero(rel < -lim):
            witnesses.append({"check": name, "v": V[idx].tolist(), "margin": float(rel[idx])})
    return CpdReport(not witnesses, None, worst, witnesses)


def re_gtilde(model: RelaxationModel, omega) -> np.ndarray:
    """Regular part of ``Re G~(-i omega)`` (the ``delta`` at zero is omitted)."""
    omega = np.asarray(omega, dtype=float)
    out = np.zeros(omega.shape + (6, 6))
    for term in model.terms:
        wt = term.rate / (term.rate**2 + omega**2)
        out += wt[..., None, None] * term.modulus
    return out


def check_cpd_freq(model: RelaxationModel, omega_grid=None, tol: float = DEFAULT_TOL) -> CpdReport:
    """``Re G~(-i omega) >= 0`` on ``omega_grid`` and ``Ginf >= 0``."""
    if omega_grid is None:
        omega_grid = np.geomspace(1e-3, 1e4, 60)
    # the regular part is even in omega
    omega_grid = np.abs(np.asarray(omega_grid, dtype=float))
    scale = max(float(np.abs(model.g0).max()), 1.0)
    witnesses = []
    ginf_min = min_eigenvalue(model.ginf) / scale
    worst = ginf_min
    if ginf_min < -tol:
        witnesses.append({"check": "ginf", "margin": ginf_min})
    R = re_gtilde(model, omega_grid)
    for w, M in zip(omega_grid, R):
        if not model.terms:
            break
        m = min_eigenvalue(M) / scale
        worst = min(worst, m)
        if m < -tol:
            witnesses.append({"check": "re_gtilde", "omega": float(w), "margin": m})
    return CpdReport(None, not witnesses, worst, witnesses)


def check_cpd(model: RelaxationModel, v_samples=200, t_grid=None, omega_grid=None,
              seed: int = 42, tol: float = DEFAULT_TOL) -> CpdReport:
    """Both checks in one report."""
    a = check_cpd_time(model, v_samples, t_grid, seed, tol)
    b = check_cpd_freq(model, omega_grid, tol)
    return CpdReport(a.time_domain_pass, b.freq_domain_pass,
                     min(a.worst_margin, b.worst_margin), a.witnesses + b.witnesses)

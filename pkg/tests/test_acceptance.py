"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the collected lines are repeated
in the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from conftest import random_upper_half_matrix
from viscowave import cli
from viscowave.bernstein import recover_density, upper_half_grid
from viscowave.cpd import check_cpd, check_cpd_freq, check_cpd_time
from viscowave.energyflux import (
    acute_angle_check,
    attack_angle_sweep,
    flux_time_oracle,
    mean_flux,
    wave_from_mode,
)
from viscowave.linalg_core import (
    imag_part,
    min_eigenvalue,
    principal_sqrt_eig,
    principal_sqrt_integral,
    spectral_norm,
)
from viscowave.medium import PronyTerm, RelaxationModel, sample_directions
from viscowave.planewave import (
    ZASSENHAUS_RADIUS,
    attenuation_bound,
    matrix_wave,
    modal_solve,
    pick_test_k,
    zassenhaus_split,
)

RESULTS = []
SEED = 42
DIRS = sample_directions(10)
E1 = np.array([1.0, 0.0, 0.0])


def report(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] #{number:<2d} {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def sqrt_samples():
    rng = np.random.default_rng(SEED)
    Bs = [random_upper_half_matrix(rng) for _ in range(1000)]
    t0 = time.perf_counter()
    eig = [principal_sqrt_eig(B) for B in Bs]
    integral = [principal_sqrt_integral(B) for B in Bs]
    elapsed = time.perf_counter() - t0
    return Bs, eig, integral, elapsed


def test_01_sqrt_oracle_equivalence(sqrt_samples):
    Bs, eig, integral, elapsed = sqrt_samples
    diff = max(np.linalg.norm(Y - Z, 2) for Y, Z in zip(eig, integral))
    resid = max(np.linalg.norm(Y @ Y - B, 2) / np.linalg.norm(B, 2) for B, Y in zip(Bs, eig))
    ok = diff <= 1e-8 and resid <= 1e-10 and elapsed < 10.0
    report(1, "square-root oracle equivalence", ok,
           f"max |integral - eig| = {diff:.2e} (<= 1e-8), max |Y^2 - B|/|B| = {resid:.2e} "
           f"(<= 1e-10), {len(Bs)} samples in {elapsed:.2f} s (< 10 s)")


def test_02_sqrt_preserves_upper_half(sqrt_samples):
    _, eig, integral, _ = sqrt_samples
    worst = min(min(min_eigenvalue(imag_part(Z)), min_eigenvalue(imag_part(Y)))
                for Y, Z in zip(eig, integral))
    report(2, "Im B^(1/2) >= 0", worst >= -1e-9,
           f"min eigenvalue of Im sqrt(B) = {worst:.3e} (>= -1e-9) over 1000 samples, both routes")


def test_03_pick_k(medium_a, medium_b):
    grid = upper_half_grid(20, 20)
    worst = np.inf
    for m in (medium_a, medium_b):
        for n in DIRS:
            worst = min(worst, pick_test_k(m, n, grid, 1e-9).worst)
    report(3, "Pick test for K_n", worst >= -1e-9,
           f"min eigenvalue of Im K_n(z)/sign(Im z) = {worst:.3e} (>= -1e-9), "
           f"media A and B, 10 directions, 20x20 grid")


def test_04_frequency_limits(medium_a):
    lo = np.array([m.phase_speed for m in modal_solve(medium_a, E1, 1e-2)])
    hi = np.array([m.phase_speed for m in modal_solve(medium_a, E1, 1e4)])
    lo_ref = np.array([1.0, 1.0, np.sqrt(3.0)])
    hi_ref = np.array([np.sqrt(1.5), np.sqrt(1.5), 2.0])
    err = max(np.max(np.abs(lo / lo_ref - 1)), np.max(np.abs(hi / hi_ref - 1)))
    report(4, "frequency limits of medium A", err <= 1e-2,
           f"speeds {np.round(lo, 6).tolist()} at 1e-2 and {np.round(hi, 6).tolist()} at 1e4, "
           f"max relative error {err:.2e} (<= 1e-2)")


def test_05_psd_order_monotonicity(medium_a, medium_b):
    omegas = np.geomspace(1e-2, 1e4, 30)
    worst_c = worst_a = worst_eig = np.inf
    for m in (medium_a, medium_b):
        for n in DIRS:
            descs = [matrix_wave(m, n, w) for w in omegas]
            for d1, d2 in zip(descs, descs[1:]):
                worst_c = min(worst_c, min_eigenvalue(d1.Cmat - d2.Cmat))
                worst_a = min(worst_a, min_eigenvalue(d2.Amat - d1.Amat))
                worst_eig = min(worst_eig, np.min(d1.c_eigs - d2.c_eigs))
    ok = worst_c >= -1e-9 and worst_a >= -1e-9 and worst_eig >= -1e-9
    report(5, "PSD-order monotonicity of C_n, A_n", ok,
           f"min eig C(w1)-C(w2) = {worst_c:.2e}, min eig A(w2)-A(w1) = {worst_a:.2e}, "
           f"min eigenvalue drop of C = {worst_eig:.2e} (all >= -1e-9), 30 frequencies")


def test_06_attenuation_bound(medium_a, medium_b):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(200):
        m = (medium_a, medium_b)[i % 2]
        w = 10 ** rng.uniform(-2, 4)
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        d = matrix_wave(m, n, w)
        y = rng.uniform(0.0, 10.0) / max(d.a0, 1e-2)
        norm, bound = attenuation_bound(d, y)
        worst = max(worst, norm / bound - 1.0)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 5.0
    report(6, "attenuation bound |exp(-yK)| <= exp(-a0 y)", ok,
           f"max |exp(-yK)| exp(a0 y) - 1 = {worst:.2e} (<= 1e-9), 200 samples in {elapsed:.2f} s (< 5 s)")


def test_07_zassenhaus_order(medium_b):
    n = DIRS[4]
    ratios = []
    for w in (0.1, 0.5, 1.0, 3.0, 10.0):
        d = matrix_wave(medium_b, n, w)
        scale = spectral_norm(w * d.Cmat + d.Amat)
        for frac in (0.05, 0.2, 1.0):
            y = frac * ZASSENHAUS_RADIUS / scale
            assert zassenhaus_split(d, y).convergent
            ratios.append(zassenhaus_split(d, y).residual / zassenhaus_split(d, y / 2).residual)
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    report(7, "Zassenhaus residual ratio", ok,
           f"residual(y)/residual(y/2) in [{min(ratios):.3f}, {max(ratios):.3f}] (within [3.5, 4.5]), "
           f"medium B, 5 frequencies, y |wC+A| <= {ZASSENHAUS_RADIUS}")


def test_08_flux_oracle(medium_a, medium_b):
    waves = []
    for m in (medium_a, medium_b):
        for w in np.geomspace(0.3, 3.0, 5):
            for j, n in enumerate(DIRS[:5]):
                angle = 30.0 if j % 2 else 0.0
                wave = attack_angle_sweep(m, w, n, j % 3, [angle])[angle]
                if not isinstance(wave, Exception) and wave.accepted(m.rho):
                    waves.append((m, wave))
    t0 = time.perf_counter()
    worst = 0.0
    for m, wave in waves:
        exact = mean_flux(m, wave).mean_flux
        got = flux_time_oracle(m, wave)
        worst = max(worst, np.linalg.norm(got - exact) / (np.linalg.norm(exact) + 1e-12))
    elapsed = time.perf_counter() - t0
    ok = len(waves) >= 50 and worst <= 1e-6 and elapsed < 30.0
    report(8, "flux formula vs time-domain oracle", ok,
           f"max relative difference {worst:.2e} (<= 1e-6) on {len(waves)} accepted waves "
           f"in {elapsed:.2f} s (< 30 s)")


def test_09_acute_angle(medium_a, medium_b):
    collinear, oblique, attempted = 0, 0, 0
    worst = np.inf
    for m in (medium_a, medium_b):
        assert check_cpd(m).passed
        waves = [wave_from_mode(m, mode) for w in np.geomspace(1e-2, 1e4, 10)
                 for n in DIRS for mode in modal_solve(m, n, w)]
        rep = acute_angle_check(m, waves)
        collinear += len(rep.dots)
        worst = min(worst, rep.worst)
        extra = []
        for w in (0.3, 1.0, 3.0):
            for n in DIRS[::3]:
                for j in range(3):
                    res = attack_angle_sweep(m, w, n, j, [15, 30, 45, 60])
                    attempted += len(res)
                    extra += [v for v in res.values() if not isinstance(v, Exception)]
        rep = acute_angle_check(m, extra)
        oblique += len(rep.dots)
        worst = min(worst, rep.worst)
    ok = collinear >= 500 and oblique >= 40 and worst >= -1e-10
    report(9, "acute angle between <Psi> and kI", ok,
           f"min <Psi>.kI = {worst:.3e} (>= -1e-10) on {collinear} collinear (>= 500) and "
           f"{oblique} non-collinear (>= 40; {attempted} attempted at 15/30/45/60 deg) waves")


def _generated_model(rng, admissible):
    A = rng.standard_normal((6, 6))
    ginf = A @ A.T + 0.5 * np.eye(6)
    terms = []
    for r in np.sort(rng.uniform(0.1, 10.0, rng.integers(1, 4))):
        B = rng.standard_normal((6, 6))
        Gk = B @ B.T
        if not admissible:
            Gk = Gk - rng.uniform(0.2, 1.0) * np.linalg.eigvalsh(Gk)[-1] * np.eye(6)
        terms.append(PronyTerm(r, Gk))
    return RelaxationModel(1.0, ginf, tuple(terms))


def test_10_cpd_implication(medium_a):
    rng = np.random.default_rng(SEED)
    violations, n_time_pass = 0, 0
    for i in range(20):
        m = _generated_model(rng, admissible=i % 2 == 0)
        t = check_cpd_time(m, seed=SEED).time_domain_pass
        f = check_cpd_freq(m).freq_domain_pass
        n_time_pass += t
        violations += t and not f
    neg = RelaxationModel(1.0, medium_a.ginf, (PronyTerm(1.0, -0.3 * medium_a.ginf),))
    neg_t = check_cpd_time(neg, seed=SEED).time_domain_pass
    neg_f = check_cpd_freq(neg).freq_domain_pass
    ok = violations == 0 and not neg_t and not neg_f
    report(10, "CPD time pass => frequency pass", ok,
           f"{violations} violations on 20 models ({n_time_pass} time-pass); "
           f"negative-weight model time={'pass' if neg_t else 'fail'}, freq={'pass' if neg_f else 'fail'}")


def test_11_measure_recovery():
    m1 = recover_density(lambda z: z / (z + 1), (0.5, 1.5)).mass
    m2 = recover_density(np.sqrt, (1.0, 2.0)).mass
    ref2 = 2 / np.pi * (np.sqrt(2) - 1)
    ok = abs(m1 - 1) <= 1e-3 and abs(m2 - ref2) <= 1e-4
    report(11, "measure recovery", ok,
           f"x/(x+1) on ]0.5,1.5]: {m1:.8f} (1, err {abs(m1 - 1):.1e} <= 1e-3); "
           f"sqrt(x) on ]1,2]: {m2:.8f} ({ref2:.8f}, err {abs(m2 - ref2):.1e} <= 1e-4)")


def test_12_cli_determinism(tmp_path, medium_b):
    medium = tmp_path / "b.json"
    medium.write_text(json.dumps(medium_b.to_dict()))
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"medium": "b.json", "seed": SEED,
                               "frequencies": {"min": 1e-2, "max": 1e4, "count": 7},
                               "directions": {"icosphere_level": 1}}))
    outs = []
    for i in range(2):
        out = tmp_path / f"sweep{i}.csv"
        assert cli.main(["sweep", "--config", str(cfg), "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    rows = outs[0].count(b"\n") - 1
    report(12, "CLI sweep determinism", ok,
           f"two runs byte-identical: {outs[0] == outs[1]} ({rows} rows, {len(outs[0])} bytes)")

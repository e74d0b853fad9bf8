"""Command-line front end.

Subcommands ``validate``, ``sweep``, ``flux`` and ``recover`` read a medium
(JSON) either directly or through a run configuration::

    {"medium": "medium.json" | {...},
     "frequencies": {"min": 0.01, "max": 1e4, "count": 7, "scale": "log"},
     "directions": {"icosphere_level": 1} | [[1, 0, 0], ...],
     "angles": [0, 15, 30, 45, 60],
     "tol": 1e-10, "seed": 42, "output": "out.csv"}

Exit codes: 0 all checks pass, 1 a physics check failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.integrate

from .bernstein import recover_density, upper_half_grid
from .cpd import check_cpd_freq, check_cpd_time
from .energyflux import attack_angle_sweep, attack_direction, mean_flux
from .errors import ViscowaveError
from .medium import (
    RelaxationModel,
    PronyTerm,
    check_strong_ellipticity,
    contract_direction,
    icosphere,
    sample_directions,
)
from .planewave import constant_eigvec_check, matrix_wave, modal_solve, pick_test_k, scalar_channel

EXIT_OK, EXIT_PHYSICS, EXIT_USAGE = 0, 1, 2

SWEEP_COLUMNS = ["omega", "nx", "ny", "nz", "mode", "re_kappa", "im_kappa", "phase_speed",
                 "attenuation", "a0", "c_eigs_1", "c_eigs_2", "c_eigs_3",
                 "a_eigs_1", "a_eigs_2", "a_eigs_3", "status"]
FLUX_COLUMNS = ["omega", "nx", "ny", "nz", "mx", "my", "mz", "attack_deg", "mode", "alpha",
                "beta", "flux_x", "flux_y", "flux_z", "dot_kI", "angle_deg", "residual", "status"]


class ConfigError(Exception):
    """Malformed or incomplete input; maps to exit code 2."""


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if x == 0.0:
        x = 0.0  # drop negative zero
    return "%.12e" % x


def _load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        ln = min(exc.lineno, len(lines))
        context = "".join(f"\n  {i:4d} | {lines[i - 1]}" for i in range(max(ln - 1, 1), ln + 1))
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}{context}\n         {' ' * (exc.colno - 1)}^"
        ) from None


def _matrix(obj, where) -> np.ndarray:
    try:
        M = np.asarray(obj, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a 6x6 numeric array") from None
    if M.shape != (6, 6):
        raise ConfigError(f"{where}: expected a 6x6 array, got shape {M.shape}")
    return M


def model_from_dict(d, source="medium") -> RelaxationModel:
    """Build a model from the JSON medium schema; raises :class:`ConfigError`."""
    if not isinstance(d, dict):
        raise ConfigError(f"{source}: medium must be a JSON object")
    for key in ("density", "equilibrium_modulus_voigt"):
        if key not in d:
            raise ConfigError(f"{source}: missing required field '{key}'")
    try:
        rho = float(d["density"])
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: 'density' must be a number") from None
    ginf = _matrix(d["equilibrium_modulus_voigt"], f"{source}: equilibrium_modulus_voigt")
    raw_terms = d.get("prony_terms", [])
    if not isinstance(raw_terms, list):
        raise ConfigError(f"{source}: 'prony_terms' must be a list")
    terms = []
    for i, t in enumerate(raw_terms):
        if not isinstance(t, dict) or "rate" not in t or "modulus_voigt" not in t:
            raise ConfigError(f"{source}: prony_terms[{i}] needs 'rate' and 'modulus_voigt'")
        try:
            rate = float(t["rate"])
        except (TypeError, ValueError):
            raise ConfigError(f"{source}: prony_terms[{i}].rate must be a number") from None
        terms.append((rate, _matrix(t["modulus_voigt"], f"{source}: prony_terms[{i}].modulus_voigt")))
    try:
        return RelaxationModel(rho, ginf, tuple(PronyTerm(r, M) for r, M in terms))
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_model(path) -> RelaxationModel:
    return model_from_dict(_load_json(path), str(path))


@dataclass
class SweepConfig:
    model: RelaxationModel
    omegas: np.ndarray
    directions: np.ndarray
    angles: list = field(default_factory=lambda: [0.0, 15.0, 30.0, 45.0, 60.0])
    output: str | None = None
    tol: float = 1e-10
    seed: int = 42


def frequency_grid(fmin: float, fmax: float, count: int, scale: str = "log") -> np.ndarray:
    if not (fmin > 0 and fmax > fmin):
        raise ConfigError(f"frequency grid needs 0 < min < max (got {fmin}, {fmax})")
    if count < 2:
        raise ConfigError("frequency count must be at least 2")
    if scale == "log":
        return np.geomspace(fmin, fmax, count)
    if scale == "linear":
        return np.linspace(fmin, fmax, count)
    raise ConfigError(f"unknown frequency scale '{scale}' (use 'log' or 'linear')")


def _directions(spec) -> np.ndarray:
    if isinstance(spec, dict):
        level = spec.get("icosphere_level", 0)
        if not isinstance(level, int) or not 0 <= level <= 2:
            raise ConfigError("icosphere_level must be 0, 1 or 2")
        if "count" in spec:
            return sample_directions(int(spec["count"]), level)
        return icosphere(level)
    try:
        D = np.atleast_2d(np.asarray(spec, dtype=float))
    except (TypeError, ValueError):
        raise ConfigError("directions must be a list of 3-vectors") from None
    if D.ndim != 2 or D.shape[1] != 3:
        raise ConfigError("directions must be a list of 3-vectors")
    norms = np.linalg.norm(D, axis=1)
    if np.any(norms == 0):
        raise ConfigError("zero direction vector")
    return D / norms[:, None]


def build_config(args) -> SweepConfig:
    """Merge a run configuration file with command-line overrides."""
    cfg = {}
    base = Path(".")
    if args.config:
        raw = _load_json(args.config)
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: top level must be a JSON object")
        base = Path(args.config).parent
        if "medium" in raw:
            cfg = raw
        else:
            cfg = {"medium": raw}
    if args.medium:
        cfg["medium"] = args.medium
        base = Path(".")
    if "medium" not in cfg:
        raise ConfigError("no medium given (use --config or --medium)")
    med = cfg["medium"]
    if isinstance(med, str):
        p = Path(med)
        model = load_model(p if p.is_absolute() or args.medium else base / p)
    else:
        model = model_from_dict(med, str(args.config))

    fr = dict(cfg.get("frequencies", {}))
    for key in ("min", "max", "count", "scale"):
        val = getattr(args, f"freq_{key}", None)
        if val is not None:
            fr[key] = val
    omegas = frequency_grid(float(fr.get("min", 1e-2)), float(fr.get("max", 1e4)),
                            int(fr.get("count", 7)), fr.get("scale", "log"))

    if args.icosphere_level is not None:
        dirs = _directions({"icosphere_level": args.icosphere_level})
    else:
        dirs = _directions(cfg.get("directions", {"icosphere_level": 0}))

    angles = cfg.get("angles", [0.0, 15.0, 30.0, 45.0, 60.0])
    if args.angles is not None:
        try:
            angles = [float(a) for a in args.angles.split(",") if a.strip()]
        except ValueError:
            raise ConfigError(f"--angles: expected comma-separated numbers, got '{args.angles}'") from None
    if any(not 0 <= a < 90 for a in angles):
        raise ConfigError("attack angles must lie in [0, 90)")
    return SweepConfig(
        model=model,
        omegas=omegas,
        directions=dirs,
        angles=sorted(float(a) for a in angles),
        output=args.output or cfg.get("output"),
        tol=float(args.tol if args.tol is not None else cfg.get("tol", 1e-10)),
        seed=int(args.seed if args.seed is not None else cfg.get("seed", 42)),
    )


def _write_csv(rows, columns, output) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    if output:
        Path(output).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())


def _parallel_map(fn, items, jobs):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# validate

def cmd_validate(cfg: SweepConfig, out=None) -> int:
    out = out or sys.stdout
    model = cfg.model
    ok = True

    def line(name, passed, detail):
        nonlocal ok
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}", file=out)

    ell = check_strong_ellipticity(model)
    line("strong ellipticity", ell.passed, f"min eigenvalue {ell.min_eigenvalue:.6e}")

    for name, rep in (("CPD (time)", check_cpd_time(model, 200, seed=cfg.seed, tol=cfg.tol)),
                      ("CPD (frequency)", check_cpd_freq(model, tol=cfg.tol))):
        passed = rep.time_domain_pass if rep.freq_domain_pass is None else rep.freq_domain_pass
        detail = f"worst margin {rep.worst_margin:.6e}"
        if rep.witnesses:
            wt = rep.witnesses[0]
            if "omega" in wt:
                where = f"omega={wt['omega']:.6e}"
            elif "v" in wt:
                where = "v=[" + ", ".join(f"{x:.4f}" for x in wt["v"]) + "]"
            else:
                where = "Ginf"
            detail += f"; witness {wt['check']} at {where}, margin {wt['margin']:.6e}"
        line(name, bool(passed), detail)

    grid = upper_half_grid(20, 20)
    worst, failure = math.inf, None
    for n in sample_directions(10):
        try:
            rep = pick_test_k(model, n, grid)
            worst = min(worst, rep.worst)
        except (ViscowaveError, ArithmeticError, ValueError) as exc:
            failure = f"{type(exc).__name__} at n={np.round(n, 4).tolist()}: {exc}"
            break
    if failure:
        line("Pick test K_n", False, failure)
    else:
        line("Pick test K_n", worst >= -1e-9, f"min eigenvalue {worst:.6e} over 10 directions")
    print("overall: " + ("PASS" if ok else "FAIL"), file=out)
    return EXIT_OK if ok else EXIT_PHYSICS


# sweep

def _sweep_cell(item):
    model, omega, n = item
    rows = []
    try:
        modes = modal_solve(model, n, omega)
        desc = matrix_wave(model, n, omega)
        c_eigs, a_eigs = desc.c_eigs, desc.a_eigs
        for j, m in enumerate(modes):
            rows.append({
                "omega": omega, "nx": n[0], "ny": n[1], "nz": n[2], "mode": j,
                "re_kappa": m.kappa.real, "im_kappa": m.kappa.imag,
                "phase_speed": m.phase_speed, "attenuation": m.attenuation, "a0": desc.a0,
                **{f"c_eigs_{i + 1}": c_eigs[i] for i in range(3)},
                **{f"a_eigs_{i + 1}": a_eigs[i] for i in range(3)},
                "status": "ok",
            })
    except (ViscowaveError, ArithmeticError, np.linalg.LinAlgError) as exc:
        msg = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
        for j in range(3):
            row = {c: math.nan for c in SWEEP_COLUMNS}
            row.update({"omega": omega, "nx": n[0], "ny": n[1], "nz": n[2], "mode": j, "status": msg})
            rows.append(row)
    return rows


def sweep_rows(cfg: SweepConfig, jobs: int = 1) -> list[dict]:
    """One row per (omega, direction, mode); omega outer, modes by phase speed."""
    items = [(cfg.model, float(w), n) for w in cfg.omegas for n in cfg.directions]
    return [r for rows in _parallel_map(_sweep_cell, items, jobs) for r in rows]


def cmd_sweep(cfg: SweepConfig, jobs: int = 1) -> int:
    rows = sweep_rows(cfg, jobs)
    _write_csv(rows, SWEEP_COLUMNS, cfg.output)
    bad = sum(r["status"] != "ok" for r in rows)
    if cfg.output:
        print(f"wrote {len(rows)} rows to {cfg.output} ({bad} failed)")
    return EXIT_OK if bad == 0 else EXIT_PHYSICS


# flux

def _flux_cell(item):
    model, omega, n, mode_index, angles = item
    rows = []
    base = {"omega": omega, "nx": n[0], "ny": n[1], "nz": n[2], "mode": mode_index}
    try:
        result = attack_angle_sweep(model, omega, n, mode_index, angles)
    except (ViscowaveError, ArithmeticError, np.linalg.LinAlgError) as exc:
        result = {a: exc for a in angles}
    for a in angles:
        m = attack_direction(n, a)
        row = {c: math.nan for c in FLUX_COLUMNS}
        row.update(base, mx=m[0], my=m[1], mz=m[2], attack_deg=a)
        wave = result[a]
        if isinstance(wave, Exception):
            row["status"] = f"not_converged: {wave}".replace("\n", " ")
        else:
            f = mean_flux(model, wave)
            row.update(alpha=float(wave.kR @ n), beta=float(np.linalg.norm(wave.kI)),
                       flux_x=f.mean_flux[0], flux_y=f.mean_flux[1], flux_z=f.mean_flux[2],
                       dot_kI=f.dot_kI, angle_deg=f.angle_deg, residual=wave.residual,
                       status="ok" if wave.accepted(model.rho) else "residual_gate")
        rows.append(row)
    return rows


def flux_rows(cfg: SweepConfig, jobs: int = 1) -> list[dict]:
    items = [(cfg.model, float(w), n, j, cfg.angles)
             for w in cfg.omegas for n in cfg.directions for j in range(3)]
    return [r for rows in _parallel_map(_flux_cell, items, jobs) for r in rows]


def cmd_flux(cfg: SweepConfig, jobs: int = 1) -> int:
    rows = flux_rows(cfg, jobs)
    _write_csv(rows, FLUX_COLUMNS, cfg.output)
    good = [r for r in rows if r["status"] == "ok"]
    skipped = len(rows) - len(good)
    stream = sys.stdout if cfg.output else sys.stderr
    if not good:
        print("summary: no converged waves", file=stream)
        return EXIT_PHYSICS
    worst = min(good, key=lambda r: r["dot_kI"])
    passed = worst["dot_kI"] >= -cfg.tol
    print(f"summary: {'PASS' if passed else 'FAIL'} worst dot_kI = {worst['dot_kI']:.6e} "
          f"(omega={worst['omega']:.6e}, mode={worst['mode']}, attack={worst['attack_deg']:g} deg); "
          f"{len(good)} waves, {skipped} not converged", file=stream)
    return EXIT_OK if passed else EXIT_PHYSICS


# recover

def channel_density(model: RelaxationModel, n, v):
    """Density of the representing measure of ``v.K_n(p)v`` from its real-axis values.

    For a constant eigenvector ``v`` the channel is ``sqrt(rho) p / sqrt(mu(p))``
    with the scalar Prony modulus ``mu = v.Q_n v``; the density at ``s > 0`` is
    ``sqrt(rho / -mu(-s)) / pi`` where ``mu(-s) < 0`` and zero elsewhere.
    """
    n = np.asarray(n, dtype=float)
    v = np.asarray(v, dtype=float)

    ginf = float(v @ contract_direction(model.ginf, n) @ v)
    weights = [(t.rate, float(v @ contract_direction(t.modulus, n) @ v)) for t in model.terms]

    def mu(s):
        # Q(p) = Ginf + sum G_k p / (p + r_k) at p = -s
        return ginf + sum(g * -s / (r - s) for r, g in weights)

    def density(s):
        m = mu(s)
        return math.sqrt(model.rho / -m) / math.pi if m < 0 else 0.0

    return density


def expected_channel_mass(model: RelaxationModel, n, v, interval) -> float:
    a, b = interval
    pts = [t.rate for t in model.terms if a < t.rate < b]
    val, _ = scipy.integrate.quad(channel_density(model, n, v), a, b, points=pts or None,
                                  limit=500, epsabs=1e-12, epsrel=1e-10)
    return float(val)


def cmd_recover(cfg: SweepConfig, channel: int, interval, direction=None, out=None) -> int:
    out = out or sys.stdout
    n = cfg.directions[0] if direction is None else _directions([direction])[0]
    omegas = np.geomspace(1e-2, 1e4, 13)
    rep = constant_eigvec_check(cfg.model, n, omegas)
    if not rep.has_constant:
        print(f"refused: along n={np.round(n, 6).tolist()} no polarization of K_n is independent "
              f"of frequency (smallest drift {rep.drift.min():.3e}). The scalar channel is only "
              "defined for a constant eigenvector, as for all modes in isotropic media or along "
              "symmetry axes.", file=out)
        return EXIT_PHYSICS
    vecs = rep.constant_vectors()
    if not 0 <= channel < vecs.shape[1]:
        raise ConfigError(f"--channel {channel} out of range (0..{vecs.shape[1] - 1} available)")
    v = vecs[:, channel]
    a, b = interval
    if not 0 < a < b:
        raise ConfigError("--interval needs 0 < a < b")
    f = scalar_channel(cfg.model, n, v)
    rec = recover_density(f, (a, b))
    expected = expected_channel_mass(cfg.model, n, v, (a, b))
    err = abs(rec.mass - expected)
    tol = max(1e-3 * max(abs(expected), 1.0), cfg.tol)
    print(f"channel {channel}: v=[{', '.join(f'{x:.6f}' for x in v)}], n={np.round(n, 6).tolist()}",
          file=out)
    print(f"interval ]{a:g}, {b:g}]: recovered mass {rec.mass:.10e}", file=out)
    print(f"analytic boundary-value mass {expected:.10e}, difference {err:.3e}", file=out)
    passed = err <= tol
    print("overall: " + ("PASS" if passed else "FAIL"), file=out)
    return EXIT_OK if passed else EXIT_PHYSICS


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="viscowave", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration or medium JSON file")
    common.add_argument("--medium", help="medium JSON file (overrides the config)")
    common.add_argument("--output", help="CSV output path (default stdout)")
    common.add_argument("--tol", type=float, help="pass tolerance (default 1e-10)")
    common.add_argument("--seed", type=int, help="seed for random sampling (default 42)")
    common.add_argument("--icosphere-level", type=int, choices=(0, 1, 2))
    common.add_argument("--angles", help="comma-separated attack angles in degrees")
    common.add_argument("--freq-min", type=float)
    common.add_argument("--freq-max", type=float)
    common.add_argument("--freq-count", type=int)
    common.add_argument("--freq-scale", choices=("log", "linear"))
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="admissibility checks")
    sub.add_parser("sweep", parents=[common], help="dispersion/attenuation CSV")
    sub.add_parser("flux", parents=[common], help="energy-flux CSV over attack angles")
    r = sub.add_parser("recover", parents=[common], help="measure recovery on a scalar channel")
    r.add_argument("--channel", type=int, default=0)
    r.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"), required=True)
    r.add_argument("--direction", type=float, nargs=3, metavar=("NX", "NY", "NZ"))
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = build_config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.jobs)
        if args.command == "flux":
            return cmd_flux(cfg, args.jobs)
        return cmd_recover(cfg, args.channel, tuple(args.interval), args.direction)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ViscowaveError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())

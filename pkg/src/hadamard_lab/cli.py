"""Command-line entry point: ``hadamard-lab <command> ...``.

Exit codes: 0 success or passing experiment, 1 failing experiment or
numerical failure, 2 usage, parse or domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import checks
from .barycentre import barycentre
from .config import CONVERGE_KEYS, FOLNER_KEYS, MAXIMAL_KEYS, ConfigError, ExperimentConfig, load
from .dynamics import tempered_report
from .ergodic import (EmpiricalSpec, convergence_experiment, empirical_barycentre, finite_valued_approximation,
                      maximal_experiment)
from .errors import CapacityError, ConvergenceError, DomainError, PrecisionError
from .geometry import dist
from .transport import FiniteMeasure, w2_distance

CSV_VERSION = "# hadamard-ergodic-lab v1"


class UsageError(Exception):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _read_measure(path: str) -> FiniteMeasure:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return FiniteMeasure.from_dict(data)


def _config(args, keys) -> ExperimentConfig:
    if not args.config:
        raise UsageError("--config is required for this command")
    cfg = load(args.config)
    cfg.require(keys)
    if args.seed is not None:
        cfg.data["seed"] = args.seed
    return cfg


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    root = Path(args.out) if args.out else Path(cfg["output_dir"])
    d = root / str(cfg["scenario"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="")


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_bary(args) -> int:
    mu = _read_measure(args.measure)
    sys.stdout.write(_dumps(barycentre(mu, args.tol, seed=args.seed or 0).to_dict()))
    return 0


def cmd_w2(args) -> int:
    mu, nu = _read_measure(args.first), _read_measure(args.second)
    res = w2_distance(mu, nu)
    c = res.coupling
    plan = [[int(i), int(j), float(c.matrix[i, j])] for i, j in zip(*np.nonzero(c.matrix > 1e-15))]
    sys.stdout.write(_dumps({"distance": res.distance,
                             "coupling": {"rows": c.row_measure.coords.tolist(),
                                          "cols": c.col_measure.coords.tolist(), "mass": plan}}))
    return 0


def cmd_folner(args) -> int:
    cfg = _config(args, FOLNER_KEYS)
    rep = tempered_report(cfg.folner(), int(cfg["tempered_horizon"]), float(cfg["shulman_bound"]))
    sys.stdout.write(_dumps(rep.to_dict()))
    return 0


def cmd_converge(args) -> int:
    cfg = _config(args, CONVERGE_KEYS)
    folner = cfg.folner()
    tempered = tempered_report(folner, int(cfg["tempered_horizon"]), float(cfg["shulman_bound"]))
    if not tempered.is_tempered:
        print(f"warning: Følner sequence not tempered for C={cfg['shulman_bound']} "
              f"(ratio {tempered.max_ratio:.4g} at n={tempered.argmax})", file=sys.stderr)
    obs = cfg.observable()
    seed = int(cfg["seed"])
    K = int(cfg["schedule_exponent"])
    omegas = obs.system.sample(seed, int(cfg["omega_samples"]))
    res = convergence_experiment(obs, folner, seed=seed, omegas=omegas, K=K,
                                 tolerance=float(cfg["tolerance"]), precision=float(cfg["reference_precision"]),
                                 threads=args.threads)
    passed = res.passed and tempered.is_tempered
    summary = {
        "scenario": cfg["scenario"], "seed": seed, "tolerance": float(cfg["tolerance"]), "pass": None,
        "fitted_c": None, "max_final_quarter_dist": res.max_final_quarter_dist,
        "tempered": tempered.is_tempered,
        "component_limits": {str(k): r.point.coords.tolist() for k, r in sorted(res.references.items())},
    }
    shift = cfg.get("invariance_shift")
    if shift is not None:
        inv = _invariance(obs, folner, res, omegas, int(shift), 2 ** K, seed)
        inv_tol = float(cfg.get("invariance_tolerance", 2 * float(cfg["tolerance"])))
        summary.update(invariance_shift=int(shift), invariance_tolerance=inv_tol, invariance_max_dist=inv)
        passed = passed and inv < inv_tol
    summary["pass"] = bool(passed)

    out = _out_dir(args, cfg)
    ndim = obs.target.ndim
    rows = [[r.omega_id, r.n, *map(repr, r.barycentre.coords.tolist()), repr(r.dist_to_reference),
             repr(round(r.wall_time * 1000, 3)) if args.timing else "0"] for r in res.records]
    header = ["omega_id", "n", *[f"coord{i}" for i in range(ndim)], "dist_to_reference", "wall_ms"]
    _write(out / "records.csv", _csv(header, rows))
    _write(out / "summary.json", _dumps(summary))
    print(f"{cfg['scenario']}: {'PASS' if passed else 'FAIL'} "
          f"(max final-quarter distance {res.max_final_quarter_dist:.3g}, tolerance {cfg['tolerance']})")
    return 0 if passed else 1


def _invariance(obs, folner, res, omegas, shift, n, seed) -> float:
    """Largest distance between the n-limit from omega and from T^shift omega."""
    system = obs.system
    final = {r.omega_id: r.barycentre for r in res.records if r.n == n}
    worst = 0.0
    for i, om in enumerate(omegas):
        moved = system.act([shift] + [0] * (system.group.dim - 1), om)
        b = empirical_barycentre(EmpiricalSpec(obs, folner, moved, n), seed=seed).point
        worst = max(worst, dist(b, final[i]))
    return worst


def cmd_maximal(args) -> int:
    cfg = _config(args, MAXIMAL_KEYS)
    m = cfg["maximal"]
    if not isinstance(m, dict):
        raise ConfigError("maximal", "expected a mapping")
    f = cfg.observable()
    hcfg = m.get("h", {"kind": "same"})
    if hcfg.get("kind") == "same":
        h = f
    elif hcfg.get("kind") == "approximation":
        if "target_d2" not in hcfg:
            raise ConfigError("maximal.h.target_d2", "missing field")
        h = finite_valued_approximation(f, float(hcfg["target_d2"]), coarsen=bool(hcfg.get("coarsen", False)))
    else:
        raise ConfigError("maximal.h.kind", f"unknown kind {hcfg.get('kind')!r}")
    seed = int(cfg["seed"])
    est = maximal_experiment(f, h, cfg.folner(), seed=seed, omega_count=int(m.get("omega_samples", 500)),
                             horizon=int(m.get("horizon", 1024)), alphas=m.get("alphas"),
                             audit_omegas=int(m.get("audit_omegas", 5)), audit_max_n=int(m.get("audit_max_n", 256)))
    bound = est.bound()
    dominated = bool(np.all(est.tail_probs <= bound + 1e-12))
    monotone = bool(np.all(np.diff(est.sups, axis=1) >= 0))
    clean = est.lemma_violations == 0 and est.coupling_violations == 0
    passed = dominated and monotone and clean
    report = {"scenario": cfg["scenario"], "seed": seed, "pass": passed, "dominated": dominated,
              "sups_nondecreasing": monotone, **est.to_dict()}
    out = _out_dir(args, cfg)
    _write(out / "maximal.json", _dumps(report))
    _write(out / "tails.csv", _csv(["alpha", "empirical_tail", "bound"],
                                   [[repr(a), repr(t), repr(b)] for a, t, b in
                                    zip(est.alphas.tolist(), est.tail_probs.tolist(), bound.tolist())]))
    print(f"{cfg['scenario']}: {'PASS' if passed else 'FAIL'} (d2 {est.d2:.4g}, fitted_c {est.fitted_c:.4g}, "
          f"{est.audit_cells} audited cells)")
    return 0 if passed else 1


def cmd_selftest(args) -> int:
    results = checks.run_suite(args.scale, args.seed or 0)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for experiment cells")
    common.add_argument("--out", default=None, help="output root directory (default: config output_dir)")
    common.add_argument("--config", default=None, help="experiment config path or shipped config name")

    p = argparse.ArgumentParser(prog="hadamard-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bary", parents=[common], help="barycentre of a measure file")
    s.add_argument("measure")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(fn=cmd_bary)

    s = sub.add_parser("w2", parents=[common], help="W2 distance and optimal coupling of two measure files")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(fn=cmd_w2)

    s = sub.add_parser("folner", parents=[common], help="temperedness report for a Følner family")
    s.set_defaults(fn=cmd_folner)

    s = sub.add_parser("converge", parents=[common], help="run a convergence experiment")
    s.add_argument("--timing", action="store_true", help="record wall times (outputs no longer reproducible)")
    s.set_defaults(fn=cmd_converge)

    s = sub.add_parser("maximal", parents=[common], help="run a maximal-inequality experiment")
    s.set_defaults(fn=cmd_maximal)

    s = sub.add_parser("selftest", parents=[common], help="run the property suites")
    s.add_argument("--scale", type=float, default=0.1, help="fraction of the full case counts")
    s.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CapacityError, ConvergenceError, PrecisionError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line runner.

    fnls-lab run <config> [--out-dir DIR] [--threads K] [--seed-override S]
    fnls-lab verify [--filter MODULE] [--out-dir DIR] [--threads K] [--seed-override S]

A run writes ``<name>.json`` (every computed quantity, each block tagged with
the operation that produced it, plus a reproducibility block) and zero or more
``<name>_<table>.csv`` files. Output is byte-identical for equal config and
seed regardless of the thread count: threads only split independent FFTs.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy
import scipy.fft

from . import __version__
from .config import ConfigError, ExperimentConfig, build_datum, load_config
from .grid import l2_norm, lp_norm

logger = logging.getLogger("fnls_lab")

__all__ = ["main", "run_config", "execute"]


def _clean(v):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return v


def _slope(xs, ys) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


# ---------------------------------------------------------------------------
# scenarios: each returns (results, tables); tables map name -> (header, rows)
# ---------------------------------------------------------------------------

def _scenario_exponents(cfg: ExperimentConfig):
    from .exponents import check_gamma_range, compute_exponents

    ex = compute_exponents(cfg.equation, cfg.numerics.p_or_s)
    res = {"exponents": {"source": "exponents.compute_exponents", **asdict(ex)}}
    if cfg.numerics.p_or_s is not None:
        rep = check_gamma_range(cfg.equation, cfg.numerics.p_or_s)
        res["gamma_range"] = {"source": "exponents.check_gamma_range", **asdict(rep)}
    return res, {}


def _window_constant(cfg, u0):
    from .solver import calibrate_constant

    if cfg.numerics.calibrate:
        return calibrate_constant(u0, cfg.equation), "solver.calibrate_constant"
    return cfg.numerics.C, "config"


def _scenario_evolve(cfg: ExperimentConfig):
    from .solver import evolve_split_step, l2_global_evolve

    num, spec = cfg.numerics, cfg.equation
    u0 = build_datum(cfg)
    g = u0.grid
    res = {"datum": {"source": "config.build_datum", "l2": l2_norm(u0.values, g)}}
    tables = {}
    split = pic = None
    if num.method in ("split", "both"):
        split = evolve_split_step(u0, spec, num.horizon, num.steps, num.snapshots)
        res["split_step"] = {
            "source": "solver.evolve_split_step", "steps": num.steps,
            "mass_drift": split.mass_drift(), "final_l2": l2_norm(split.values[-1], g),
        }
    if num.method in ("picard", "both"):
        C, csrc = _window_constant(cfg, u0)
        ev = l2_global_evolve(u0, spec, num.horizon, C, num.tol, num.max_iter,
                              subintervals=num.subintervals, stages=num.stages)
        pic = ev.trajectory
        res["picard"] = {
            "source": "solver.l2_global_evolve", "C": C, "C_source": csrc,
            "windows": ev.windows, "steps": ev.steps, "mass_drift": pic.mass_drift(),
            "final_l2": l2_norm(pic.values[-1], g),
            "contraction": [lg.as_dict() for lg in ev.logs],
        }
    if split is not None and pic is not None:
        gap = l2_norm(split.values[-1] - pic.values[-1], g) / l2_norm(pic.values[-1], g)
        res["agreement"] = {"source": "solver (split-step vs Picard at the horizon)", "relative_l2_gap": gap}
    for label, tr in (("split", split), ("picard", pic)):
        if tr is None:
            continue
        m = tr.masses()
        tables[f"{label}_mass"] = (
            ("time", "mass", "relative_drift"),
            [(t, mi, abs(mi - m[0]) / m[0]) for t, mi in zip(tr.times, m)],
        )
    return res, tables


def _scenario_norms(cfg: ExperimentConfig):
    from .modulation import ModNormSpec, build_partition, mod_norm

    u0 = build_datum(cfg)
    part = build_partition(u0.grid)
    res = {
        "lebesgue": {
            "source": "grid.lp_norm",
            **{f"L{p:g}": lp_norm(u0.values, u0.grid, p) for p in (1.0, 2.0, 4.0, math.inf)},
        },
        "modulation": {
            "source": "modulation.mod_norm", "kmax": part.kmax,
            **{f"M{p:g},{q:g}": mod_norm(u0, part, ModNormSpec(p, q)) for p, q in cfg.numerics.norm_pairs},
        },
    }
    return res, {}


def _scenario_split(cfg: ExperimentConfig):
    from .exponents import target_exponent
    from .highlow import split_data
    from .modulation import build_partition

    u0 = build_datum(cfg)
    part = build_partition(u0.grid)
    p, r = cfg.numerics.p_or_s, target_exponent(cfg.equation)
    rows = []
    for N in cfg.numerics.N_list:
        s = split_data(u0, p, r, N, part)
        rows.append((N, s.cutoff, s.measured_v_norm, s.measured_w_norm, s.source_norm / N))
    Ns = [row[0] for row in rows]
    res = {
        "split": {
            "source": "highlow.split_data", "p": p, "r": r, "gamma": (0.5 - 1 / p) / (1 / p - 1 / r),
            "slope_v_l2": _slope(Ns, [row[2] for row in rows]),
            "slope_w_mod": _slope(Ns, [row[3] for row in rows]),
        }
    }
    return res, {"split": (("N", "cutoff", "v_l2", "w_mod", "target_w_mod"), rows)}


def _scenario_interaction(cfg: ExperimentConfig):
    from .exponents import compute_exponents, target_exponent
    from .highlow import solve_interaction, split_data
    from .modulation import build_partition
    from .solver import l2_global_evolve

    num, spec = cfg.numerics, cfg.equation
    u0 = build_datum(cfg)
    s = split_data(u0, num.p_or_s, target_exponent(spec), num.N, build_partition(u0.grid))
    rows = []
    for T in num.T_list:
        ve = l2_global_evolve(s.v, spec, T, num.C, num.tol, num.max_iter,
                              subintervals=num.subintervals, stages=num.stages, keep_nodes=True)
        w = solve_interaction(ve.trajectory, s.w, spec, T, num.tol, num.max_iter)
        rows.append((T, w.sup_norm, w.final_norm, w.log.iterations, w.log.max_ratio))
    ex = compute_exponents(spec, num.p_or_s)
    res = {
        "interaction": {
            "source": "highlow.solve_interaction", "N": num.N,
            "predicted_exponent": ex.increment_exponent,
            "slope_sup_l2": _slope([r[0] for r in rows], [r[1] for r in rows]),
        }
    }
    return res, {"interaction": (("T", "w_sup_l2", "w_final_l2", "iterations", "max_ratio"), rows)}


def _scenario_bourgain(cfg: ExperimentConfig):
    from .highlow import CSV_COLUMNS, bourgain_iterate

    num = cfg.numerics
    u0 = build_datum(cfg)
    led = bourgain_iterate(u0, cfg.equation, num.p_or_s, num.N, num.horizon, num.C, num.K_max,
                           tol=num.tol, subintervals=num.subintervals, stages=num.stages)
    d = led.to_dict()
    res = {
        "ledger": {"source": "highlow.bourgain_iterate", **d["summary"]},
        "split": {"source": "highlow.split_data", **d["split"]},
        "exponents": {"source": "exponents.compute_exponents", **d["exponents"]},
        "notes": {"source": "highlow.bourgain_iterate", "items": d["notes"]},
    }
    rows = [tuple(r[c] for c in CSV_COLUMNS) for r in d["rows"]]
    return res, {"ledger": (CSV_COLUMNS, rows)}


def _scenario_strichartz(cfg: ExperimentConfig):
    from .analysis import strichartz_constant
    from .families import random_radial

    num = cfg.numerics
    fam = random_radial(cfg.grid, num.family_size, seed=cfg.seed)
    recs = []
    for pair in num.pairs:
        st = strichartz_constant(fam, cfg.equation.beta, pair, num.horizon, num.snapshots)
        recs.append({"source": "analysis.strichartz_constant", **st.record(), "stable": st.stable})
    rows = [(r["pair"][0], r["pair"][1], r["max_ratio"], r["refinement_drift"]) for r in recs]
    return {"strichartz": recs}, {"strichartz": (("q", "r", "max_ratio", "refinement_drift"), rows)}


def _scenario_verify(cfg: ExperimentConfig):
    from .verify import run_suite

    out = run_suite(cfg.numerics.filter, cfg.seed)
    res = {
        "verify": {
            "source": "verify.run_suite", "filter": cfg.numerics.filter,
            "passed": all(c.passed for c in out), "checks": [c.as_dict() for c in out],
        }
    }
    return res, {}


SCENARIO_RUNNERS = {
    "exponents": _scenario_exponents,
    "evolve": _scenario_evolve,
    "norms": _scenario_norms,
    "split": _scenario_split,
    "interaction": _scenario_interaction,
    "bourgain": _scenario_bourgain,
    "strichartz": _scenario_strichartz,
    "verify": _scenario_verify,
}


def _reproducibility(cfg: ExperimentConfig) -> dict:
    return {
        "config_sha256": cfg.digest(),
        "seed": cfg.seed,
        "rng": "numpy PCG64",
        "grid": asdict(cfg.grid) if cfg.grid else None,
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def execute(cfg: ExperimentConfig, threads: int = 1) -> tuple[dict, dict]:
    """Run a scenario in-process; returns (document, tables)."""
    with scipy.fft.set_workers(max(1, int(threads))):
        res, tables = SCENARIO_RUNNERS[cfg.scenario](cfg)
    doc = {
        "scenario": cfg.scenario,
        "name": cfg.name,
        "status": "ok",
        "warnings": list(cfg.warnings),
        "results": res,
        "config": cfg.canonical(),
        "reproducibility": _reproducibility(cfg),
    }
    return _clean(doc), tables


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_csv_value(v) for v in row])
    return buf.getvalue()


def _csv_value(v):
    v = _clean(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def write_outputs(doc: dict, tables: dict, out_dir: Path, name: str) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    p = out_dir / f"{name}.json"
    p.write_text(_dump(doc), encoding="utf-8")
    paths.append(p)
    for tname in sorted(tables):
        header, rows = tables[tname]
        p = out_dir / f"{name}_{tname}.csv"
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv_text(header, rows))
        paths.append(p)
    return paths


def _error_record(exc: BaseException, scenario: str | None) -> dict:
    return {"status": "error", "error": {"type": type(exc).__name__, "message": str(exc), "scenario": scenario}}


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("FNLS_LAB_THREADS")
    return int(env) if env else 1


def run_config(cfg: ExperimentConfig, out_dir: Path, threads: int = 1) -> int:
    try:
        doc, tables = execute(cfg, threads)
    except Exception as exc:
        logger.error("%s failed: %s", cfg.scenario, exc)
        rec = _error_record(exc, cfg.scenario)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{cfg.name}.error.json").write_text(_dump(rec), encoding="utf-8")
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        return 1
    paths = write_outputs(doc, tables, out_dir, cfg.name)
    for p in paths:
        print(p)
    if cfg.scenario == "verify":
        return 0 if doc["results"]["verify"]["passed"] else 1
    return 0


def _verify_config(filter_: str | None, seed: int) -> ExperimentConfig:
    from .config import Numerics

    return ExperimentConfig("verify", "verify", seed, None, None, {}, Numerics(filter=filter_))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fnls-lab", description=__doc__.split("\n\n")[0].strip())
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", type=Path, default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="FFT worker threads (env FNLS_LAB_THREADS)")
        p.add_argument("--seed-override", type=int, default=None, help="replace the configured seed")
        p.add_argument("-v", "--verbose", action="store_true")

    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config", type=Path)
    common(r)
    v = sub.add_parser("verify", help="run the property suite")
    v.add_argument("--filter", default=None, help="restrict to one module")
    common(v)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = _threads(args.threads)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
        else:
            cfg = _verify_config(args.filter, 0)
        if args.seed_override is not None:
            cfg = cfg.with_seed(args.seed_override)
        if args.command == "verify":
            from .verify import MODULES

            if args.filter is not None and args.filter not in MODULES:
                raise ConfigError(f"unknown module filter {args.filter!r}; expected one of {MODULES}")
    except ConfigError as exc:
        rec = _error_record(exc, None)
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        if args.out_dir is not None:
            args.out_dir.mkdir(parents=True, exist_ok=True)
            (args.out_dir / "config.error.json").write_text(_dump(rec), encoding="utf-8")
        return 2
    out_dir = args.out_dir if args.out_dir is not None else Path(cfg.output_dir)
    return run_config(cfg, out_dir, threads)


if __name__ == "__main__":
    sys.exit(main())

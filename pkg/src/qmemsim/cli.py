"""Command-line front end.

    qmemsim run      --config cfg.json [--seed N] [--trials N] [--threads N] [--out DIR] [--mode M]
    qmemsim sweep    --config cfg.json [same flags]
    qmemsim exercise --theta T --axis {x,y} --beta B
    qmemsim scaling  [--n-max 8] [--eps 0.02] [--steps 5000] [--trials 10000] [--seed 0] [--out DIR]

Exit codes: 0 success (whatever the physics says), 2 configuration error,
3 capacity error, 4 I/O error. ``QK_OUT_DIR`` is used when neither ``--out``
nor the config's ``out_dir`` is given.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .analysis import (
    compare_corrected_uncorrected,
    dephasing_scaling_experiment,
    fit_run,
    probability_vs_amplitude_exercise,
)
from .protocol import MODES, RNG_NAME, ConfigError, RunConfig, RunResult, run_experiment
from .statevec import CapacityError

log = logging.getLogger("qmemsim")

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4
EXTRA_KEYS = ("out_dir", "sweep", "threads")
DEFAULT_OUT = "qmemsim_out"


def load_config(path: str | Path) -> tuple[RunConfig, dict]:
    """Parse a config file into a RunConfig plus the non-run keys."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be an object")
    extras = {k: doc.pop(k) for k in EXTRA_KEYS if k in doc}
    if "sweep" in extras:
        sweep = extras["sweep"]
        if not isinstance(sweep, dict):
            raise ConfigError("sweep", "must be an object")
        for key in sweep:
            if key != "eps_grid":
                raise ConfigError(f"sweep.{key}", "unknown key")
        grid = sweep.get("eps_grid")
        if not isinstance(grid, list) or not grid or \
                not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in grid):
            raise ConfigError("sweep.eps_grid", "must be a non-empty list of numbers")
    try:
        config = RunConfig.from_dict(doc)
    except TypeError as exc:
        raise ConfigError("<document>", str(exc)) from None
    return config, extras


def apply_overrides(config: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "mode", None) is not None:
        changes["mode"] = args.mode
    return replace(config, **changes) if changes else config


def output_dir(args, extras: dict) -> Path:
    out = args.out or extras.get("out_dir") or os.environ.get("QK_OUT_DIR") or DEFAULT_OUT
    return Path(out)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def write_results(result: RunResult, out: Path) -> dict:
    """trace.csv, events.csv and summary.json for one run."""
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "round", "fidelity", "accepted_syndrome", "elapsed_steps"])
        for t in result.trials:
            for r, (f, s, e) in enumerate(zip(t.fidelity, t.syndromes, t.elapsed)):
                w.writerow([t.trial, r, repr(f), s, e])
    with open(out / "events.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "round", "event", "detail"])
        for t in result.trials:
            for r, kind, detail in t.events:
                w.writerow([t.trial, r, kind, detail])
    try:
        fit = fit_run(result).to_dict()
    except ValueError as exc:
        fit = {"rate": None, "rate_stderr": None, "model": "none_detected", "window": None,
               "note": str(exc)}
    audits = [t.audit for t in result.trials]
    summary = {
        "version": __version__,
        "rng": RNG_NAME,
        "seed": result.config.master_seed,
        "config": result.config.to_dict(),
        "mean_fidelity": [float(x) for x in result.mean_fidelity()],
        "std_fidelity": [float(x) for x in result.std_fidelity()],
        "stderr_fidelity": [float(x) for x in result.stderr_fidelity()],
        "mean_elapsed_steps": [float(x) for x in result.mean_elapsed()],
        "fit": fit,
        "crash_histogram": result.crash_histogram(),
        "event_counts": result.event_counts(),
        "mean_ancillas_per_trial": sum(a["ancillas_drawn"] for a in audits) / len(audits),
        "audit_totals": {k: sum(a[k] for a in audits)
                         for k in ("gates", "jittered_gates", "measurements",
                                   "imperfect_measurements", "kick_mismatches")},
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _threads(args, extras) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    if "threads" in extras:
        return max(1, int(extras["threads"]))
    return os.cpu_count() or 1


def cmd_run(args) -> int:
    config, extras = load_config(args.config)
    config = apply_overrides(config, args)
    out = output_dir(args, extras)
    result = run_experiment(config, _threads(args, extras))
    summary = write_results(result, out)
    mean = summary["mean_fidelity"]
    print(f"{config.code} {config.mode}: {config.trials} trials, {len(mean) - 1} rounds, "
          f"final mean fidelity {mean[-1]:.6f}, fit {summary['fit']['model']} "
          f"rate {summary['fit']['rate']}")
    print(f"results written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config, extras = load_config(args.config)
    if "sweep" not in extras:
        raise ConfigError("sweep", "missing; a sweep needs sweep.eps_grid")
    config = apply_overrides(config, args)
    out = output_dir(args, extras)
    out.mkdir(parents=True, exist_ok=True)
    threads = _threads(args, extras)
    rows, failures = [], []
    for i, eps in enumerate(extras["sweep"]["eps_grid"]):
        try:
            (row,) = compare_corrected_uncorrected(config, [eps], threads, keep_results=True)
        except (ValueError, CapacityError) as exc:
            log.warning("grid point %s (eps=%r) failed: %s", i, eps, exc)
            failures.append((i, eps, f"{type(exc).__name__}: {exc}"))
            rows.append((i, eps, None))
            continue
        point = out / f"eps_{i:03d}"
        write_results(row.corrected_result, point / "corrected")
        write_results(row.uncorrected_result, point / "uncorrected")
        rows.append((i, eps, row))
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "eps_step", "corrected_rate", "corrected_rate_stderr", "corrected_model",
                    "uncorrected_rate", "uncorrected_rate_stderr", "uncorrected_model", "gain",
                    "status"])
        for i, eps, row in rows:
            if row is None:
                w.writerow([i, repr(float(eps)), "", "", "", "", "", "", "", "failed"])
                continue
            c, u = row.corrected, row.uncorrected
            w.writerow([i, repr(row.eps_step), _fmt(c.rate), _fmt(c.rate_stderr), c.model,
                        _fmt(u.rate), _fmt(u.rate_stderr), u.model, _fmt(row.gain), "ok"])
    with open(out / "sweep_events.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "eps_step", "error"])
        for i, eps, msg in failures:
            w.writerow([i, repr(float(eps)), msg])
    for i, eps, row in rows:
        if row is None:
            print(f"eps={eps}: failed")
        else:
            gain = "undefined" if row.gain is None else f"{row.gain:.4g}"
            print(f"eps={row.eps_step}: corrected {row.corrected.rate} ({row.corrected.model}), "
                  f"uncorrected {row.uncorrected.rate} ({row.uncorrected.model}), gain {gain}")
    return EXIT_OK


def cmd_exercise(args) -> int:
    p_mix, p_amp, diff = probability_vs_amplitude_exercise(args.theta, args.axis, args.beta)
    print(f"{'theta':>10} {'axis':>4} {'beta':>10} {'p_mixture':>14} {'p_amplitude':>14} {'difference':>14}")
    print(f"{args.theta:>10.6g} {args.axis:>4} {args.beta:>10.6g} {p_mix:>14.10f} {p_amp:>14.10f} {diff:>14.10f}")
    return EXIT_OK


def cmd_scaling(args) -> int:
    if not 1 <= args.n_max <= 22:
        raise CapacityError(f"n-max {args.n_max} outside [1, 22]")
    res = dephasing_scaling_experiment(args.n_max, args.eps, args.steps, args.trials, args.seed)
    print(f"{'N':>4} {'rate':>14} {'rate_stderr':>14}")
    for n, r, e in res.rows():
        print(f"{n:>4} {_fmt(r) or 'none':>14} {_fmt(e) or 'none':>14}")
    print("slope: " + ("undefined" if res.slope is None else f"{res.slope:.6g}")
          + f"  (single-qubit reference eps^2/2 = {args.eps ** 2 / 2:.6g})")
    if args.out or os.environ.get("QK_OUT_DIR"):
        out = Path(args.out or os.environ["QK_OUT_DIR"])
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "scaling.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["N", "rate", "rate_stderr"])
            for n, r, e in res.rows():
                w.writerow([n, _fmt(r), _fmt(e)])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmemsim", description="Noisy logical-qubit memory simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="master seed override")
        sp.add_argument("--trials", type=int, help="trial count override")
        sp.add_argument("--threads", type=int, help="worker processes (default: all cores)")
        sp.add_argument("--out", help="output directory (fallback: $QK_OUT_DIR)")
        sp.add_argument("--mode", choices=MODES, help="run mode override")

    run_flags(sub.add_parser("run", help="one memory experiment"))
    run_flags(sub.add_parser("sweep", help="corrected vs uncorrected over an eps grid"))

    ex = sub.add_parser("exercise", help="probability vs amplitude comparison")
    ex.add_argument("--theta", type=float, required=True)
    ex.add_argument("--axis", choices=("x", "y"), required=True)
    ex.add_argument("--beta", type=float, required=True)

    sc = sub.add_parser("scaling", help="GHZ dephasing rate versus qubit count")
    sc.add_argument("--n-max", type=int, default=8)
    sc.add_argument("--eps", type=float, default=0.02)
    sc.add_argument("--steps", type=int, default=5000)
    sc.add_argument("--trials", type=int, default=10000)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--out")
    return p


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "exercise": cmd_exercise, "scaling": cmd_scaling}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

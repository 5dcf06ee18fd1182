"""Command-line entry point: ``sgqt run`` and ``sgqt fit``.

Exit status: 0 on success, 2 for usage or configuration errors, 1 for
failures while running.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from sgqt import __version__
from sgqt.errors import ConfigError, FitError, ParameterError, SGQTError
from sgqt.experiments import (
    ExperimentConfig,
    InitMode,
    Scenario,
    default_window,
    fit_power_law,
    preset,
    run_trials,
    scaling_report,
    summarize,
)
from sgqt.measurement import INFINITE
from sgqt.spsa import GainSchedule

log = logging.getLogger("sgqt")

USAGE_ERRORS = (ConfigError, FitError, ParameterError)


class UsageError(SGQTError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _shots(text: str):
    if text.lower() in ("inf", "infinite"):
        return INFINITE
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be a positive integer or 'inf', got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("shots must be positive")
    return value


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be 'LO,HI', got {text!r}")
    return lo, hi


def _gains(text: str) -> GainSchedule:
    try:
        return GainSchedule.parse(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _init(text: str) -> InitMode:
    try:
        return InitMode.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgqt", description="Self-guided quantum tomography simulator")
    parser.add_argument("--version", action="version", version=f"sgqt {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario ensemble and write CSV/JSON outputs")
    r.add_argument("--scenario", choices=[s.value for s in Scenario])
    r.add_argument("--config", type=Path, help="JSON config (or a previous manifest.json)")
    r.add_argument("--qubits", type=_int_list)
    r.add_argument("--shots", type=_shots)
    r.add_argument("--iterations", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--gains", type=_gains, help="a,A,b or a,A,b,s,t")
    r.add_argument("--init", type=_init, help="haar or perturbed:STD")
    r.add_argument("--depolarizing", type=float)
    r.add_argument("--meas-noise", type=float)
    r.add_argument("--window", type=_window, help="gamma fit window LO,HI (default: last decade)")
    r.add_argument("--out", type=Path, default=Path("sgqt-out"))
    r.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    r.add_argument("--svg", action="store_true", help="also write a log-log plot")
    r.add_argument("--save-trajectories", action="store_true")
    r.add_argument("--allow-large", action="store_true", help="permit qubit counts above the desk-scale cap")

    f = sub.add_parser("fit", help="fit a power law to a saved CSV")
    f.add_argument("csv", type=Path)
    f.add_argument("--window", type=_window)
    f.add_argument("--x", default="k", help="abscissa column (default k)")
    f.add_argument("--column", help="ordinate column (default median, else infidelity)")
    f.add_argument("--floor", type=float, default=0.0, help="subtract before fitting")
    f.add_argument("--growth", action="store_true", help="report +slope (eta) instead of -slope (gamma)")
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Flags override the config file, which overrides the scenario preset."""
    file_data = {}
    if args.config is not None:
        try:
            file_data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_data, dict):
            raise ConfigError("config file must hold a JSON object")
        if "config" in file_data and "tool_version" in file_data:
            file_data = file_data["config"]
    if args.scenario is not None:
        file_data["scenario"] = args.scenario
    if "scenario" not in file_data:
        raise UsageError("give --scenario or a config file with a scenario")
    overrides = {
        "n_qubits": args.qubits,
        "iterations_k": args.iterations,
        "n_trials": args.trials,
        "gains": args.gains,
        "init_mode": args.init,
        "depolarizing_p": args.depolarizing,
        "measurement_noise_std": args.meas_noise,
    }
    if args.allow_large:
        overrides["allow_large"] = True
    data = dict(file_data)
    data.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "shots_given", args.shots is not None):
        data["shots_N"] = args.shots
    if args.seed is not None:
        data["base_seed"] = args.seed
    elif "base_seed" not in file_data and os.environ.get("SGQT_SEED"):
        try:
            data["base_seed"] = int(os.environ["SGQT_SEED"])
        except ValueError as exc:
            raise ConfigError(f"SGQT_SEED must be an integer, got {os.environ['SGQT_SEED']!r}") from exc
    base = preset(data["scenario"])
    return ExperimentConfig.from_dict(data, base)


def _fmt_fit(label: str, fit) -> str:
    lo, hi = fit.fit_window
    return f"{label}={fit.exponent:.4f} +/- {fit.stderr:.4f} window=[{lo:g},{hi:g}] points={fit.n_points}"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_command(args) -> int:
    cfg = resolve_config(args)
    out: Path = args.out
    log.info("running %s for n=%s (%d trials, k=%d)", cfg.scenario.value, cfg.n_qubits, cfg.n_trials,
             cfg.iterations_k)
    outputs = []
    summaries = {}
    for n in cfg.n_qubits:
        trajectories = run_trials(cfg, n, threads=max(1, args.threads))
        summaries[n] = summarize(trajectories, cfg, n)
        name = f"summary_n{n}.csv"
        _write(out / name, summaries[n].to_csv())
        outputs.append(name)
        if args.save_trajectories:
            for i, t in enumerate(trajectories):
                tname = f"trajectories/n{n}_trial{i:04d}.csv"
                _write(out / tname, t.to_csv())
                outputs.append(tname)

    window = args.window or default_window(cfg.iterations_k)
    try:
        report = scaling_report(summaries, window)
    except FitError as exc:
        report = None
        print(f"fit skipped: {exc}")

    results = {}
    for n, s in summaries.items():
        entry = {
            "initial_median": s.initial_median,
            "final_median": float(s.median[-1]),
            "total_shots": s.total_shots,
            "trial_min_infidelity": s.trial_min,
            "floor": 0.0,
            "below_floor_iterations": 0,
        }
        if report is not None:
            r = report.rescaled[n]
            entry["floor"] = r.floor
            entry["below_floor_iterations"] = 0 if r.below_floor is None else int(r.below_floor.sum())
            entry["gamma"] = report.gamma[n].to_dict()
            print(_fmt_fit(f"n={n} gamma", report.gamma[n]))
        results[str(n)] = entry
    summary = {
        "scenario": cfg.scenario.value,
        "tool_version": __version__,
        "config": cfg.to_dict(),
        "results": results,
        "eta": None if report is None or report.eta is None else {**report.eta.to_dict(), "k": report.eta_k},
    }
    if report is not None and report.eta is not None:
        print(_fmt_fit(f"eta(k={report.eta_k})", report.eta))
    _write(out / "summary.json", _dumps(summary))
    outputs.append("summary.json")

    if args.svg:
        from sgqt.plot import loglog_svg

        series = {f"n={n}": (s.k, s.median) for n, s in (report.rescaled if report else summaries).items()}
        _write(out / "plot.svg", loglog_svg(series, xlabel="iteration k", ylabel="median infidelity"))
        outputs.append("plot.svg")

    manifest = {
        "tool_version": __version__,
        "scenario": cfg.scenario.value,
        "base_seed": cfg.base_seed,
        "config": cfg.to_dict(),
        "outputs": outputs,
    }
    _write(out / "manifest.json", _dumps(manifest))
    print(f"wrote {len(outputs) + 1} files to {out}")
    return 0


def fit_command(args) -> int:
    try:
        with open(args.csv, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise UsageError(f"cannot read {args.csv}: {exc}") from exc
    column = args.column or ("median" if "median" in fields else "infidelity")
    missing = [c for c in (args.x, column) if c not in fields]
    if missing:
        raise UsageError(f"{args.csv} lacks column(s) {missing}; has {fields}")
    try:
        xs = np.array([float(r[args.x]) for r in rows])
        ys = np.array([float(r[column]) for r in rows]) - args.floor
    except ValueError as exc:
        raise UsageError(f"non-numeric data in {args.csv}: {exc}") from exc
    window = args.window
    if window is None and not args.growth and xs.size:
        window = default_window(int(xs.max()))
    fit = fit_power_law(xs, ys, window, decay=not args.growth)
    print(_fmt_fit("eta" if args.growth else "gamma", fit))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        args.shots_given = any(a == "--shots" or a.startswith("--shots=") for a in argv)
    try:
        return run_command(args) if args.command == "run" else fit_command(args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"sgqt: error: {exc}", file=sys.stderr)
        return 2
    except (SGQTError, OSError, ValueError) as exc:
        print(f"sgqt: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

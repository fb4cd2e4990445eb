"""``clockspec`` command line: run an experiment from a JSON config and write its reports.

Exit codes: 0 success with every gate passed, 1 gate failure (reports are
still written), 2 configuration or usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import spectrum, stats
from .errors import ConfigError, DomainError, NumericError
from .prufer import trajectory_csv

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

EXPERIMENTS = {
    "clock": stats.run_clock_experiment,
    "theta": stats.run_theta_experiment,
    "holder": stats.run_holder_experiment,
    "moments": stats.run_moment_experiment,
    "laplace": stats.run_clock_laplace_experiment,
}
SUBCOMMANDS = [*EXPERIMENTS, "spectrum", "phase-dump", "corr", "dynsys-check"]

DEFAULT_MODEL = {"alpha": 0.75}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config with model/experiment/run sections")
    common.add_argument("--seed", type=int, help="override run.seed (unsigned 64-bit)")
    common.add_argument("--workers", type=int, help="worker threads (default: CPU count)")
    common.add_argument("--out", type=Path, help="output directory (fallback: $CLOCKSPEC_OUT, then .)")
    common.add_argument("--quiet", action="store_true", help="no summary on stdout")
    parser = argparse.ArgumentParser(prog="clockspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    helps = {
        "clock": "rescaled eigenvalue gaps along the n ladder",
        "theta": "relative phase Theta(c) - c along the n ladder",
        "holder": "Hoelder slope of J in kappa",
        "moments": "second moments of J and R over dyadic blocks",
        "laplace": "Laplace functional vs the clock prediction",
        "spectrum": "dump one eigenvalue window per n (k,kappa_k,atom)",
        "phase-dump": "dump the Pruefer trajectory and the relative-phase curve",
        "corr": "amplitude autocorrelation and fitted decay rate",
        "dynsys-check": "exactness checks for the symbolic systems",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def load_config(path: Path | None, seed: int | None) -> tuple[stats.ExperimentConfig, dict]:
    if path is None:
        doc = {"model": dict(DEFAULT_MODEL)}
    else:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
    run = dict(doc.get("run", {}))
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        run["seed"] = seed
    doc = {**doc, "run": run}
    return stats.config_from_dict(doc), run


def resolve_out(flag: Path | None, run: dict) -> Path:
    out = flag or run.get("out") or os.environ.get("CLOCKSPEC_OUT") or "."
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _dump_spectrum(cfg: stats.ExperimentConfig, out: Path) -> list[Path]:
    paths, windows = [], []
    stem = f"spectrum_{cfg.hash()}"
    for n in cfg.n_values:
        pf = stats._phase(cfg, cfg.model, n, 0)
        w = spectrum.eigenvalue_window(pf, cfg.kappa0, cfg.c_max, method=cfg.root_method)
        p = out / f"{stem}_n{n}.csv"
        p.write_text(w.to_csv(), newline="\n")
        paths.append(p)
        windows.append({"n": n, "theta0": w.theta0, "frac_phase": spectrum.frac_pi(w.theta0),
                        "labels": w.labels.tolist(), "anomalies": w.anomalies})
    doc = {"kind": "spectrum", "windows": windows, "config": cfg.to_dict(),
           "provenance": {"seed": cfg.seed, "config_hash": cfg.hash()}}
    p = out / f"{stem}.json"
    p.write_text(json.dumps(stats._jsonable(doc), indent=2, sort_keys=True) + "\n", newline="\n")
    return [p, *paths]


def _dump_phase(cfg: stats.ExperimentConfig, out: Path) -> list[Path]:
    paths = []
    stem = f"phase_{cfg.hash()}"
    cs = stats.c_grid(cfg)
    for n in cfg.n_values:
        pf = stats._phase(cfg, cfg.model, n, 0)
        p = out / f"{stem}_n{n}.csv"
        p.write_text(trajectory_csv(pf.trajectory(cfg.kappa0)), newline="\n")
        q = out / f"theta_{cfg.hash()}_n{n}.csv"
        q.write_text(spectrum.curve_csv(cs, spectrum.relative_phase(pf, cfg.kappa0, cs)), newline="\n")
        paths += [p, q]
    return paths


def _print_report(report: stats.ExperimentReport, paths) -> None:
    for g in report.gates:
        status = "PASS" if g.passed else "FAIL"
        val = g.value if not isinstance(g.value, list) else "[" + ", ".join(
            f"{v:.4g}" if isinstance(v, float) else str(v) for v in g.value) + "]"
        if isinstance(val, float):
            val = f"{val:.6g}"
        se = f" +- {g.stderr:.3g}" if isinstance(g.stderr, float) else ""
        print(f"{status}  {report.kind}.{g.name}: {val}{se} (tolerance {g.tolerance})")
    for p in paths:
        print(f"wrote {p}")


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        cfg, run_section = load_config(args.config, args.seed)
        workers = args.workers or run_section.get("workers") or os.cpu_count() or 1
        if workers < 1:
            raise ConfigError("--workers must be >= 1")
        out = resolve_out(args.out, run_section)
        if args.command in ("spectrum", "phase-dump"):
            dump = _dump_spectrum if args.command == "spectrum" else _dump_phase
            paths = dump(cfg, out)
            if not args.quiet:
                for p in paths:
                    print(f"wrote {p}")
            return EXIT_OK
        if args.command == "corr":
            report = stats.run_correlation_experiment(cfg)
        elif args.command == "dynsys-check":
            report = stats.run_dynsys_check(cfg)
        else:
            report = EXPERIMENTS[args.command](cfg, workers=workers)
        paths = report.write(out)
    except (ConfigError, DomainError) as exc:
        print(f"clockspec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"clockspec: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.quiet:
        _print_report(report, paths)
    return EXIT_OK if report.passed else EXIT_GATE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

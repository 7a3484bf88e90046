# bloch-hhg command line

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from bloch_hhg import output
from bloch_hhg.config import RunConfig, ensure_directories, parse_config, settings
from bloch_hhg.errors import BlochHHGError
from bloch_hhg.physics.observables import power_spectrum
from bloch_hhg.pipeline import RunSummary, run_pipeline

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML or JSON run configuration")
    common.add_argument("--out-dir", type=Path, help="Directory for result files")
    common.add_argument(
        "--threads",
        type=int,
        help=f"Worker threads (default: BLOCH_HHG_THREADS or {settings.threads})",
    )
    common.add_argument("--plot", action="store_true", help="Also write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true", help="INFO logging")

    parser = argparse.ArgumentParser(
        prog="bloch-hhg",
        description="High-harmonic currents of a 1D model crystal in velocity "
        "and length gauge.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bands", parents=[common], help="Band structure to bands.csv")
    sub.add_parser(
        "matels",
        parents=[common],
        help="Momentum-matrix and overlap summaries to matels.csv / overlaps.csv",
    )
    sub.add_parser("run", parents=[common], help="Full simulation, all artifacts")
    sub.add_parser(
        "gauge-check",
        parents=[common],
        help="Full simulation, gauge_report.csv with per-time gauge diagnostics",
    )
    spectrum = sub.add_parser(
        "spectrum",
        parents=[common],
        help="Harmonic spectrum from currents.csv in the output directory "
        "(runs the simulation when it is missing)",
    )
    spectrum.add_argument(
        "--gauge", choices=["velocity", "length"], help="Which total current"
    )
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    config = parse_config(args.config) if args.config else RunConfig()
    run_updates: dict = {}
    if args.out_dir is not None:
        run_updates["output_dir"] = str(args.out_dir)
    if args.threads is not None:
        if args.threads < 1:
            raise BlochHHGError(f"--threads must be positive, got {args.threads}")
        run_updates["threads"] = args.threads
    output_updates: dict = {}
    if args.plot:
        output_updates["svg"] = True
    if getattr(args, "gauge", None):
        output_updates["spectrum_gauge"] = args.gauge
    return config.model_copy(
        update={
            "run": config.run.model_copy(update=run_updates),
            "output": config.output.model_copy(update=output_updates),
        }
    )


def _report(summary: RunSummary) -> int:
    for check in summary.checks:
        status = "pass" if check.passed else "FAIL"
        print(
            f"{status:4s}  {check.name:22s} {check.value:.3e}  "
            f"(limit {check.limit:.3e})"
        )
    if summary.passed:
        return EXIT_OK
    for check in summary.failed():
        print(f"check {check.name} failed: {check.reason}", file=sys.stderr)
    return EXIT_CHECKS_FAILED


def _spectrum_from_csv(config: RunConfig, path: Path) -> int:
    columns = output.read_currents(path)
    current = columns["J_v" if config.output.spectrum_gauge == "velocity" else "J_l"]
    spectrum = power_spectrum(
        columns["t_m"],
        current,
        config.pulse.to_spec().omega,
        window=config.output.window,
    )
    out = ensure_directories(config)
    output.write_spectrum(out / "spectrum.csv", spectrum)
    if config.output.svg:
        output.plot_spectrum(out / "spectrum.svg", spectrum)
    print(f"spectrum from {path}: Parseval defect {spectrum.parseval_defect:.3e}")
    return EXIT_OK


def dispatch(args: argparse.Namespace) -> int:
    config = load_config(args)
    svg = {"svg"} if config.output.svg else set()
    if args.command == "bands":
        summary = run_pipeline(config, stage="bands", write={"bands"})
    elif args.command == "matels":
        summary = run_pipeline(config, stage="matels", write={"matels"})
    elif args.command == "gauge-check":
        summary = run_pipeline(config, write={"gauge_report"})
    elif args.command == "spectrum":
        currents = config.output_path / "currents.csv"
        if currents.exists():
            return _spectrum_from_csv(config, currents)
        summary = run_pipeline(config, write={"spectrum", "currents"} | svg)
    else:
        summary = run_pipeline(config)
    return _report(summary)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if (args.verbose or settings.debug) else logging.WARNING,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        return dispatch(args)
    except BlochHHGError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""``skidkit`` command line: simulate, analyze, report.

Exit codes: 0 on success, 2 for usage or data errors, 3 when an internal
consistency check fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from skidkit.errors import SkidkitError
from skidkit.kinematics import DiffConfig
from skidkit.pipeline import AnalysisConfig, analyze_file, build_report, plot_subject
from skidkit.report import ExperimentReport, emit_plots, emit_tables
from skidkit.simulator import SimulationSpec, write_experiment
from skidkit.units import STANDARD_GRAVITY, kmh_to_ms

EXIT_OK = 0
EXIT_DATA = 2
EXIT_INTERNAL = 3

_OUT_FORMATS = {"csv": ("csv",), "json": ("json",), "both": ("csv", "json")}


def _ma_window(text: str) -> tuple[int | None, float | None]:
    """``"12"`` is a window in samples, ``"0.25s"`` one in seconds."""
    text = text.strip().lower()
    try:
        if text.endswith("s"):
            seconds = float(text[:-1])
            if not seconds > 0:
                raise ValueError
            return None, seconds
        samples = int(text)
        if samples < 1:
            raise ValueError
        return samples, None
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive sample count or seconds like 0.25s, got {text!r}")


def _odd_window(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        n = 0
    if n < 5 or n % 2 == 0:
        raise argparse.ArgumentTypeError(f"diff window must be an odd integer >= 5, got {text!r}")
    return n


def _collect_inputs(paths: list[str]) -> list[Path]:
    files = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files += sorted(q for q in p.iterdir() if q.suffix.lower() == ".csv")
        else:
            files.append(p)  # missing files surface as errors when read
    return files


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skidkit", description="Braking-test friction analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a seeded synthetic experiment")
    sim.add_argument("--tests", type=int, default=10)
    sim.add_argument("--mu", type=float, default=0.8)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--v0-kmh", type=float, default=40.0)
    sim.add_argument("--abs-ripple", type=float, default=0.0, help="ripple amplitude, m/s²")
    sim.add_argument("--out", type=Path, required=True)

    ana = sub.add_parser("analyze", help="analyze device logs and write the report")
    ana.add_argument("inputs", nargs="+", help="CSV files or directories of CSV files")
    ana.add_argument("--format", choices=("accel", "phone", "tracker"), help="skip format sniffing")
    ana.add_argument("--device", choices=("accel", "phone", "tracker"), help="override the device label")
    ana.add_argument("--reference", default="accel")
    ana.add_argument("--axis", choices=("x", "y", "z"), default="x")
    ana.add_argument("--g", type=float, default=STANDARD_GRAVITY)
    ana.add_argument("--alpha", type=float, default=0.05)
    ana.add_argument("--ma-window", type=_ma_window, help="samples (e.g. 25) or seconds (e.g. 0.25s)")
    ana.add_argument("--sz-start", type=float)
    ana.add_argument("--sz-end", type=float)
    ana.add_argument("--diff-window", type=_odd_window, default=DiffConfig().window)
    ana.add_argument("--out", type=Path, required=True)
    ana.add_argument("--out-format", choices=tuple(_OUT_FORMATS), default="both")

    rep = sub.add_parser("report", help="re-render tables and plots from report.json")
    rep.add_argument("report_json", type=Path)
    rep.add_argument("--out", type=Path, required=True)
    rep.add_argument("--out-format", choices=tuple(_OUT_FORMATS), default="both")
    return parser


def cmd_simulate(args) -> int:
    spec = SimulationSpec(mu_true=args.mu, seed=args.seed, v0=kmh_to_ms(args.v0_kmh), abs_ripple_amp=args.abs_ripple)
    spec.validate()
    paths = write_experiment(spec, args.tests, args.out)
    for p in sorted(paths):
        print(p.relative_to(args.out))
    return EXIT_OK


def _analysis_config(args) -> AnalysisConfig:
    if (args.sz_start is None) != (args.sz_end is None):
        raise SkidkitError("--sz-start and --sz-end must be given together")
    override = None if args.sz_start is None else (args.sz_start, args.sz_end)
    samples, seconds = args.ma_window or (None, None)
    try:
        return AnalysisConfig(
            reference=args.reference,
            axis=args.axis,
            g=args.g,
            alpha=args.alpha,
            ma_window=samples,
            ma_window_s=seconds,
            sz_override=override,
            diff=DiffConfig(window=args.diff_window),
        )
    except ValueError as exc:
        raise SkidkitError(str(exc)) from exc


def cmd_analyze(args) -> int:
    cfg = _analysis_config(args)
    files = _collect_inputs(args.inputs)
    if not files:
        raise SkidkitError("no input files found")
    # analyze everything before writing anything: no partial reports
    tests = [analyze_file(f, cfg, fmt=args.format, device=args.device) for f in files]
    report = build_report(tests, cfg)
    written = emit_tables(report, args.out, _OUT_FORMATS[args.out_format])
    subject = plot_subject(tests, cfg.reference)
    written += emit_plots(subject.trace, subject.seg, report, args.out)
    for p in written:
        print(p.relative_to(args.out))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        text = args.report_json.read_text(encoding="utf-8")
    except OSError as exc:
        raise SkidkitError(f"{args.report_json}: {exc.strerror or exc}") from exc
    try:
        report = ExperimentReport.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise SkidkitError(f"{args.report_json}: not a skidkit report ({exc})") from exc
    written = emit_tables(report, args.out, _OUT_FORMATS[args.out_format])
    written += emit_plots(None, None, report, args.out)
    for p in written:
        print(p.relative_to(args.out))
    return EXIT_OK


_COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SkidkitError, OSError) as exc:
        print(f"skidkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AssertionError as exc:
        print(f"skidkit: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

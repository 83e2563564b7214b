"""Command-line entry point: validate, analyze, report, synth, all."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import build_config, dump_config, load_config_file, parse_segments
from .errors import AnalyticsError, SpecError
from .pipeline import RunConfig, analyze, validate
from .report import write_report
from .report.tables import CONFIG_USED, emit_tables

log = logging.getLogger("lo_analytics")

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_FATAL = 2


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("lo-analytics %(levelname)s %(message)s"))
    root = logging.getLogger("lo_analytics")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.propagate = False


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with run settings; flags override it")
    p.add_argument("--course", help="course structure JSON")
    p.add_argument("--events", help="event log file, directory or glob (.ndjson, .ndjson.gz)")
    p.add_argument("--tags", help="activity tag CSV")
    p.add_argument("--lo-registry", dest="lo_registry", help="learning objective CSV")
    p.add_argument("--grades", help="subsection grade CSV")
    p.add_argument("--final-grades", dest="final_grades", help="final grade CSV")
    p.add_argument("--week-overrides", dest="week_overrides", help="chapter_id,week CSV")
    p.add_argument("--exclude-learners", dest="exclude_learners", help="learner ids to drop, one per line")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--break-seconds", dest="break_seconds", type=float)
    p.add_argument("--pass-threshold", dest="pass_threshold", type=float)
    p.add_argument("--terminal-dwell", dest="terminal_dwell", choices=["zero", "cap"])
    p.add_argument("--segments", help="comma list drawn from all,passed,not_passed")
    p.add_argument("--correlation", choices=["pearson", "spearman"])
    p.add_argument("--spearman", action="store_const", const="spearman", dest="correlation",
                   help="shorthand for --correlation spearman")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)


def _run_config(args) -> RunConfig:
    file_values = load_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in ("course", "events", "tags", "lo_registry", "grades",
                                           "final_grades", "week_overrides", "exclude_learners",
                                           "out", "break_seconds", "pass_threshold",
                                           "terminal_dwell", "correlation", "seed", "threads")}
    if args.segments is not None:
        flags["segments"] = parse_segments(args.segments)
    return build_config(file_values, flags)


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_validate(args) -> int:
    config = _run_config(args)
    diagnostics, findings = validate(config)
    out = Path(config.out)
    _write_json(out / "diagnostics.json", diagnostics)
    cov = diagnostics["coverage"]
    log.info("event=validate findings=%d untagged_leaves=%d los_without_activities=%d "
             "los_without_assessment=%d duplicates=%d out_of_order=%d zero_possible=%d",
             findings, len(cov["untagged_leaves"]), len(cov["los_without_activities"]),
             len(cov["los_without_assessment"]), diagnostics["ingest"]["duplicates"],
             diagnostics["ingest"]["out_of_order"], diagnostics["grades"]["zero_possible_dropped"])
    for leaf in cov["untagged_leaves"]:
        print(f"untagged leaf: {leaf}")
    for code in cov["los_without_activities"]:
        print(f"LO without activities: {code}")
    for code in cov["los_without_assessment"]:
        print(f"LO without assessment: {code}")
    return EXIT_FINDINGS if findings else EXIT_OK


def _analyze(config: RunConfig) -> list[dict]:
    results = analyze(config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / CONFIG_USED).write_text(dump_config(config, out), encoding="utf-8")
    manifest = emit_tables(results, out)
    if results.cohort_size == 0:
        log.warning("event=analyze status=empty reason=no usable events")
    c = results.correlation
    if c is not None:
        log.info("event=correlation method=%s r=%.6f p=%.3g n=%d", c.method, c.r, c.p, c.n)
    log.info("event=analyze out=%s files=%d", out, len(manifest))
    return manifest


def cmd_analyze(args) -> int:
    _analyze(_run_config(args))
    return EXIT_OK


def cmd_report(args) -> int:
    out = args.out
    if out is None and args.config:
        out = load_config_file(args.config).get("out")
    index = write_report(out or RunConfig.out)
    log.info("event=report path=%s", index)
    return EXIT_OK


def cmd_all(args) -> int:
    config = _run_config(args)
    _analyze(config)
    index = write_report(config.out)
    log.info("event=report path=%s", index)
    return EXIT_OK


def cmd_synth(args) -> int:
    # imported here so the other subcommands do not pay for numpy
    from .synthgen import DEFECT_VARIANTS, CohortSpec, write_fixture

    data: dict = {}
    if args.spec:
        data.update(load_spec_file(args.spec))
    for key in ("n_learners", "planted_rho", "seed", "events_per_learner", "activities_total",
                "lo_count", "weeks"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.compress:
        data["compress"] = True
    if args.defect:
        data.update(DEFECT_VARIANTS[args.defect])
    spec = CohortSpec.from_mapping(data)
    spec.validate()
    out = Path(args.out or "fixture")
    truth = write_fixture(spec, out)
    print(f"realized_r = {truth['realized_r']!r}")
    manifest = json.loads((out / "synth_manifest.json").read_text(encoding="utf-8"))
    for entry in manifest:
        print(f"{entry['sha256']}  {entry['path']}")
    log.info("event=synth out=%s learners=%d leaves=%d event_lines=%d", out, spec.n_learners,
             truth["leaves"], truth.get("event_lines", 0))
    return EXIT_OK


def load_spec_file(path: str | Path) -> dict:
    from .config import tomllib

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text) if str(path).endswith(".json") else tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"{path}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lo-analytics",
        description="Learning-objective engagement and performance analytics for online courses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, text in (
        ("validate", cmd_validate, "parse all inputs and report coverage findings"),
        ("analyze", cmd_analyze, "run the pipeline and write result tables"),
        ("all", cmd_all, "analyze, then report"),
    ):
        p = sub.add_parser(name, help=text)
        _add_run_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="render charts and index.html from existing tables")
    p.add_argument("--out", help="directory holding the result tables (default: out)")
    p.add_argument("--config", help="TOML run config; only its out setting is used")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write a synthetic fixture with ground truth")
    p.add_argument("--spec", help="TOML or JSON cohort spec")
    p.add_argument("--out", help="fixture directory (default: fixture)")
    p.add_argument("--n-learners", dest="n_learners", type=int)
    p.add_argument("--planted-rho", dest="planted_rho", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--events-per-learner", dest="events_per_learner", type=int)
    p.add_argument("--activities", dest="activities_total", type=int)
    p.add_argument("--lo-count", dest="lo_count", type=int)
    p.add_argument("--weeks", type=int)
    p.add_argument("--defect", choices=sorted(k for k in _defect_names() if k != "clean"))
    p.add_argument("--compress", action="store_true", help="write events.ndjson.gz")
    p.set_defaults(func=cmd_synth)
    return parser


def _defect_names():
    from .synthgen import DEFECT_VARIANTS

    return DEFECT_VARIANTS


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except SpecError as exc:
        log.error("event=error kind=SpecError msg=%s", exc)
        return EXIT_FINDINGS if args.command == "synth" else EXIT_FATAL
    except (AnalyticsError, OSError, ValueError) as exc:
        log.error("event=error kind=%s msg=%s", type(exc).__name__, exc)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())

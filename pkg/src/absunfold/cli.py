"""Command-line driver: analyze one program, export the unfolding as a DOT
graph, or run a corpus directory against expected verdicts.

Exit codes: 0 safe (no warnings), 1 warnings found, 2 usage or parse
error, 3 a cap was exceeded and the result is incomplete.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .domains import IntervalInstance
from .indep import build_independence
from .lang import Assert, ParseError, desugar_mutexes, parse_program
from .oracle import check_sound_cover, enumerate_reach_abstract, enumerate_reach_concrete
from .pes import PES
from .unfolder import (
    UnfoldOptions, UnfoldResult, Unfolder, check_respects_independence,
)

EXIT_SAFE = 0
EXIT_WARNINGS = 1
EXIT_USAGE = 2
EXIT_INCOMPLETE = 3


@dataclass(frozen=True)
class RunConfig:
    path: str
    mode: str = "heap"
    widening_level: int = 15
    cutoffs: bool = True
    tla: bool = True
    dot_output: Optional[str] = None
    oracle: bool = False
    output_format: str = "text"
    max_events: int = 20000
    max_configs: int = 200000
    max_states: int = 200000

    def options(self) -> UnfoldOptions:
        return UnfoldOptions(
            use_tla=self.tla,
            use_cutoffs=self.cutoffs,
            widening_level=self.widening_level,
            event_cap=self.max_events,
            config_cap=self.max_configs,
        )


@dataclass
class AnalysisReport:
    name: str
    threads: int
    asserts: int
    events: int
    cutoffs: int
    warnings: tuple[str, ...]
    warning_positions: dict[str, tuple[int, int]]
    wall_time: float
    truncated: bool
    cutoffs_downgraded: bool
    oracle_summary: Optional[dict] = None

    @property
    def exit_code(self) -> int:
        if self.truncated:
            return EXIT_INCOMPLETE
        return EXIT_WARNINGS if self.warnings else EXIT_SAFE


def analyze(cfg: RunConfig) -> tuple[AnalysisReport, UnfoldResult]:
    text = Path(cfg.path).read_text(encoding="utf-8")
    program = desugar_mutexes(parse_program(text))
    instance = IntervalInstance.of(program)
    relation = build_independence(program, cfg.mode)
    opts = cfg.options()

    downgraded = False
    if opts.use_cutoffs and not relation.weak_certified:
        samples = sorted(
            enumerate_reach_abstract(instance, relation, opts, depth=3,
                                     max_elements=2000),
            key=repr)
        if check_respects_independence(instance, relation, opts, samples):
            opts = replace(opts, use_cutoffs=False)
            downgraded = True
        else:
            relation = replace(relation, weak_certified=True)

    result = Unfolder(instance, relation, opts).unfold()

    oracle_summary = None
    if cfg.oracle:
        rr = enumerate_reach_concrete(program, max_states=cfg.max_states)
        oracle_summary = rr.summary()
        if not rr.truncated:
            cover = check_sound_cover(result, rr)
            oracle_summary["covered"] = cover.ok
            oracle_summary["uncovered_states"] = len(cover.uncovered_states)
            oracle_summary["missed_asserts"] = cover.missed_asserts

    positions = {}
    for a in program.asserts():
        positions[a.assert_id] = (a.line, a.col)
    report = AnalysisReport(
        name=Path(cfg.path).name,
        threads=program.n_threads,
        asserts=len(program.asserts()),
        events=result.stats.events,
        cutoffs=result.stats.cutoffs,
        warnings=tuple(sorted(result.warnings)),
        warning_positions=positions,
        wall_time=result.stats.wall_time,
        truncated=result.stats.truncated,
        cutoffs_downgraded=downgraded,
    )
    if cfg.dot_output:
        export_dot(result.pes, cfg.dot_output)
    return report, result


def render_text(r: AnalysisReport) -> str:
    lines = [
        f"{r.name}: P={r.threads} A={r.asserts} t(s)={r.wall_time:.2f} "
        f"E={r.events} E_cut={r.cutoffs} W={len(r.warnings)}"
    ]
    for aid in r.warnings:
        line, col = r.warning_positions.get(aid, (0, 0))
        lines.append(f"warning: {aid} at line {line}, col {col}")
    if r.cutoffs_downgraded:
        lines.append("note: cutoffs disabled (independence not respected by tla)")
    if r.truncated:
        lines.append("note: caps exceeded, result incomplete")
    if r.oracle_summary is not None:
        lines.append(f"oracle: {r.oracle_summary}")
    return "\n".join(lines)


def render_machine(r: AnalysisReport) -> str:
    # no timestamps or wall time: identical inputs give identical bytes
    rows = [
        ("program", r.name),
        ("threads", r.threads),
        ("asserts", r.asserts),
        ("events", r.events),
        ("cutoffs", r.cutoffs),
        ("warnings", len(r.warnings)),
        ("truncated", int(r.truncated)),
    ]
    for aid in r.warnings:
        line, col = r.warning_positions.get(aid, (0, 0))
        rows.append((f"warning.{aid}", f"{line}:{col}"))
    if r.oracle_summary is not None:
        rows.append(("oracle.states", r.oracle_summary.get("states", 0)))
        rows.append(("oracle.violated",
                     ",".join(r.oracle_summary.get("violated_asserts", []))))
    return "\n".join(f"{k}={v}" for k, v in rows)


# ---------------------------------------------------------------------------
# DOT export
# ---------------------------------------------------------------------------

def export_dot(pes: PES, path: str) -> None:
    """Deterministic DOT rendering: boxes per event, solid arcs for
    immediate causality, dashed lines for direct conflicts, cutoffs
    shaded."""
    lines = ["digraph unfolding {", "  node [shape=box];"]
    for ev in pes.events:
        label = f"{ev.eid}: {ev.label.edge.describe()}"
        attrs = [f'label="{label}"']
        if ev.cutoff:
            attrs.append('style="filled,dashed"')
            attrs.append("fillcolor=lightgray")
        lines.append(f"  e{ev.eid} [{', '.join(attrs)}];")
    for ev in pes.events:
        for c in sorted(ev.immediate_causes):
            lines.append(f"  e{c} -> e{ev.eid};")
    drawn = set()
    for ev in pes.events:
        for c in sorted(ev.direct_conflicts):
            pair = (min(ev.eid, c), max(ev.eid, c))
            if pair in drawn:
                continue
            drawn.add(pair)
            lines.append(
                f"  e{pair[0]} -> e{pair[1]} [dir=none, style=dashed, constraint=false];")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Corpus runner
# ---------------------------------------------------------------------------

@dataclass
class Expectation:
    verdict: str  # 'safe' | 'unsafe'
    warnings: Optional[int] = None  # exact expected count when fixed


def read_expectation(path: Path) -> Expectation:
    verdict = ""
    warnings: Optional[int] = None
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "verdict":
            verdict = value
        elif key == "warnings":
            warnings = int(value)
    if verdict not in ("safe", "unsafe"):
        raise ValueError(f"{path}: verdict must be 'safe' or 'unsafe'")
    return Expectation(verdict, warnings)


def run_corpus(directory: str, cfg: RunConfig) -> tuple[list[dict], int]:
    """Analyze every .cp file in the directory against its .expect sidecar.

    Returns per-program rows and the process exit code (nonzero when any
    row fails)."""
    root = Path(directory)
    rows = []
    any_fail = False
    for prog_path in sorted(root.glob("*.cp")):
        expect_path = prog_path.with_suffix(".expect")
        row: dict = {"name": prog_path.name}
        try:
            expect = read_expectation(expect_path) if expect_path.exists() else None
            report, _ = analyze(replace(cfg, path=str(prog_path)))
            w = len(report.warnings)
            row.update(threads=report.threads, asserts=report.asserts,
                       events=report.events, cutoffs=report.cutoffs,
                       warnings=w, time=report.wall_time,
                       truncated=report.truncated)
            if report.truncated:
                row["status"] = "FAIL"
                row["reason"] = "incomplete (caps exceeded)"
            elif expect is None:
                row["status"] = "SKIP"
                row["reason"] = "no expectation sidecar"
            else:
                ok = (w == 0) if expect.verdict == "safe" else (w >= 1)
                if expect.warnings is not None:
                    ok = ok and w == expect.warnings
                row["status"] = "PASS" if ok else "FAIL"
                if not ok:
                    row["reason"] = f"expected {expect.verdict}, got W={w}"
        except (ParseError, OSError, ValueError) as exc:
            row["status"] = "FAIL"
            row["reason"] = str(exc)
        if row["status"] == "FAIL":
            any_fail = True
        rows.append(row)
    return rows, (EXIT_WARNINGS if any_fail else EXIT_SAFE)


def render_corpus_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "machine":
        out = []
        for row in rows:
            for k in sorted(row):
                if k == "time":
                    continue
                out.append(f"{row['name']}.{k}={row[k]}")
        return "\n".join(out)
    header = f"{'name':30} {'P':>3} {'A':>3} {'t(s)':>7} {'E':>6} {'E_cut':>6} {'W':>3}  status"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['name']:30} {row.get('threads', '-'):>3} {row.get('asserts', '-'):>3} "
            f"{row.get('time', 0.0):>7.2f} {row.get('events', '-'):>6} "
            f"{row.get('cutoffs', '-'):>6} {row.get('warnings', '-'):>3}  "
            f"{row['status']}{'  (' + row['reason'] + ')' if 'reason' in row else ''}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=("sync", "heap"), default="heap")
    parser.add_argument("--widening-level", type=int, default=15, metavar="N")
    parser.add_argument("--no-cutoffs", action="store_true")
    parser.add_argument("--no-tla", action="store_true")
    parser.add_argument("--dot", metavar="PATH", default=None)
    parser.add_argument("--oracle", action="store_true",
                        help="also run the exhaustive concrete oracle")
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    parser.add_argument("--max-events", type=int, default=20000, metavar="N")
    parser.add_argument("--max-configs", type=int, default=200000, metavar="N")
    parser.add_argument("--max-states", type=int, default=200000, metavar="N")


def _config_from(args: argparse.Namespace, path: str) -> RunConfig:
    return RunConfig(
        path=path,
        mode=args.mode,
        widening_level=args.widening_level,
        cutoffs=not args.no_cutoffs,
        tla=not args.no_tla,
        dot_output=args.dot,
        oracle=args.oracle,
        output_format=args.format,
        max_events=args.max_events,
        max_configs=args.max_configs,
        max_states=args.max_states,
    )


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="absunfold",
        description="Interval analyzer for concurrent programs based on "
                    "event-structure unfoldings")
    sub = parser.add_subparsers(dest="command", required=True)
    p_an = sub.add_parser("analyze", help="analyze one program")
    p_an.add_argument("input")
    _add_common(p_an)
    p_co = sub.add_parser("corpus", help="run a directory of programs")
    p_co.add_argument("directory")
    _add_common(p_co)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_SAFE

    if args.command == "analyze":
        cfg = _config_from(args, args.input)
        try:
            report, _ = analyze(cfg)
        except FileNotFoundError:
            print(f"error: no such file: {cfg.path}", file=sys.stderr)
            return EXIT_USAGE
        except ParseError as exc:
            print(f"error: {cfg.path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(render_text(report) if cfg.output_format == "text"
              else render_machine(report))
        return report.exit_code

    cfg = _config_from(args, "")
    if not Path(args.directory).is_dir():
        print(f"error: no such directory: {args.directory}", file=sys.stderr)
        return EXIT_USAGE
    rows, code = run_corpus(args.directory, cfg)
    print(render_corpus_rows(rows, cfg.output_format))
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Exit codes for ``run``: 0 success, 2 parse or usage error, 3 fuel exhausted
(the instant does not terminate), 4 internal invariant failure, 5 replayed
schedule diverged. ``check`` and ``trace-diff`` exit 0 on a positive
verdict, 1 on a negative one and 2 on a tool error.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .analysis import (
    CapExceeded,
    InputStrategy,
    InternalDisagreement,
    bounded_traces,
    check_determinism,
    check_equivalence,
    dynamic_reactivity_probe,
    name_list,
    static_reactivity_check,
)
from .core import INTERFACE, signal
from .renaming import SearchBudgetExceeded
from .scheduler import ReplayDivergence, format_log, make_scheduler, parse_log
from .semantics import DEFAULT_FUEL, EvaluationError, FuelExhausted, Machine, instant
from .syntax import ParseError, SurfaceProgram, desugar, parse, pretty_print

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_FUEL, EXIT_INTERNAL, EXIT_REPLAY = 0, 1, 2, 3, 4, 5


@dataclass
class RunConfig:
    program_path: str
    input_script: list[frozenset] | str  # or "exhaustive"
    max_instants: int = 1
    fuel: int = DEFAULT_FUEL
    sched: str = "rr"
    seed: int = 0
    replay: Optional[list[int]] = None
    output_format: str = "text"
    log_schedule: Optional[str] = None

    def __post_init__(self) -> None:
        if self.max_instants < 1:
            raise ValueError("max_instants must be at least 1")
        if self.fuel < 1:
            raise ValueError("fuel must be at least 1")


# --- text formats -------------------------------------------------------------------


def parse_input_script(text: str) -> list[frozenset]:
    """One line per instant, comma-separated names; an empty line is an empty set."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [frozenset(signal(p.strip(), INTERFACE) for p in line.split(",") if p.strip()) for line in lines]


def format_set(names) -> str:
    return "{" + ",".join(name_list(names)) + "}"


def trace_line(k: int, inputs, outputs) -> str:
    return f"instant {k}: in={format_set(inputs)} out={format_set(outputs)}"


def load_program(path: str) -> SurfaceProgram:
    text = Path(path).read_text(encoding="utf-8")
    return parse(text, path)


def _emit_json(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# --- commands -----------------------------------------------------------------------


def cmd_run(cfg: RunConfig) -> int:
    try:
        sp = load_program(cfg.program_path)
    except (ParseError, OSError) as exc:
        print(exc.diagnostic() if isinstance(exc, ParseError) else str(exc), file=sys.stderr)
        return EXIT_USAGE
    p, interface = desugar(sp), sp.interface_set()
    lookup = {s.display: s for s in interface}

    if cfg.input_script == "exhaustive":
        try:
            traces = bounded_traces(p, interface, cfg.max_instants, cfg.fuel)
        except CapExceeded as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except FuelExhausted as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FUEL
        ordered = sorted(traces, key=str)
        if cfg.output_format == "json":
            _emit_json({"traces": [[{"in": name_list(i), "out": name_list(o)} for i, o in t.steps] for t in ordered]})
        else:
            for t in ordered:
                print(t)
        return EXIT_OK

    script = list(cfg.input_script)
    instants = max(cfg.max_instants, len(script))
    for k, inputs in enumerate(script):
        unknown = [s.display for s in inputs if s.display not in lookup]
        if unknown:
            print(f"error: instant {k + 1}: inputs {sorted(unknown)} are not interface signals", file=sys.stderr)
            return EXIT_USAGE
    sched = make_scheduler(cfg.sched, cfg.seed, cfg.replay)
    m = Machine(interface, p)
    steps, picks = [], []
    status, code, message = "ok", EXIT_OK, ""
    for k in range(instants):
        inputs = frozenset(lookup[s.display] for s in script[k]) if k < len(script) else frozenset()
        try:
            outcome = instant(m, inputs, sched, cfg.fuel)
        except FuelExhausted as exc:
            status, code = "fuel_exhausted", EXIT_FUEL
            message = f"instant {k + 1}: {exc}; residual of the diverging thread: {_short(exc.residual)}"
            break
        except ReplayDivergence as exc:
            status, code, message = "replay_divergence", EXIT_REPLAY, f"instant {k + 1}: {exc}"
            break
        except EvaluationError as exc:
            status, code, message = "internal_error", EXIT_INTERNAL, f"instant {k + 1}: {exc}"
            break
        outputs = frozenset(s for s in interface if outcome.env[s])
        steps.append((inputs, outputs))
        picks.extend(outcome.picks)
        m = Machine(interface, outcome.program, m.instant_index + 1, m.session)
    if cfg.replay is not None and code == EXIT_OK and len(picks) != len(cfg.replay):
        status, code = "replay_divergence", EXIT_REPLAY
        message = f"replay log has {len(cfg.replay)} picks but the run made {len(picks)}"

    if cfg.log_schedule:
        Path(cfg.log_schedule).write_text(format_log(picks), encoding="utf-8")
    if cfg.output_format == "json":
        _emit_json(
            {
                "trace": [{"instant": k + 1, "in": name_list(i), "out": name_list(o)} for k, (i, o) in enumerate(steps)],
                "status": status,
                "message": message,
            }
        )
    else:
        for k, (i, o) in enumerate(steps):
            print(trace_line(k + 1, i, o))
    if message:
        print(f"error: {message}", file=sys.stderr)
    return code


def _short(t, limit: int = 200) -> str:
    text = pretty_print(t)
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _report(fmt: str, verdict: str, record: dict, details: Sequence[str] = ()) -> None:
    if fmt == "json":
        _emit_json(record)
    else:
        print(verdict)
        for line in details:
            print(f"  {line}")


def cmd_check(args: argparse.Namespace) -> int:
    try:
        programs = [load_program(path) for path in args.programs]
    except (ParseError, OSError) as exc:
        print(exc.diagnostic() if isinstance(exc, ParseError) else str(exc), file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.kind == "determinism":
            return _check_determinism(args, programs[0])
        if args.kind == "reactivity":
            return _check_reactivity(args, programs[0])
        return _check_equivalence(args, programs)
    except (FuelExhausted, CapExceeded, SearchBudgetExceeded, InternalDisagreement, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _read_inputs(path: Optional[str]) -> list[frozenset]:
    if not path:
        return []
    return parse_input_script(Path(path).read_text(encoding="utf-8"))


def _resolve(inputs: list[frozenset], interface: frozenset) -> list[frozenset]:
    lookup = {s.display: s for s in interface}
    out = []
    for k, names in enumerate(inputs):
        unknown = sorted(s.display for s in names if s.display not in lookup)
        if unknown:
            raise CapExceeded(f"instant {k + 1}: inputs {unknown} are not interface signals")
        out.append(frozenset(lookup[s.display] for s in names))
    return out


def _check_determinism(args, sp: SurfaceProgram) -> int:
    interface = sp.interface_set()
    inputs = _resolve(_read_inputs(args.inputs), interface)
    verdict = check_determinism(desugar(sp), interface, inputs, args.seeds, args.instants, args.fuel)
    _report(args.format, str(verdict), verdict.record(), [verdict.reason] if verdict.reason else [])
    return EXIT_OK if verdict.passed else EXIT_NEGATIVE


def _check_reactivity(args, sp: SurfaceProgram) -> int:
    interface = sp.interface_set()
    static = static_reactivity_check(sp)
    script = _resolve(_read_inputs(args.inputs), interface) if args.inputs else None
    strategy = InputStrategy(seed=args.seed, script=script)
    dynamic = dynamic_reactivity_probe(desugar(sp), interface, args.instants, args.fuel, strategy)
    negative = static.verdict != "statically_safe" or dynamic.verdict == "diverged_at" or dynamic.watch_growth
    details = [f"static: {static}"]
    if static.message:
        details.append(f"static: {static.message}")
    if dynamic.diverging_inputs is not None:
        details.append(f"diverging inputs: {format_set(dynamic.diverging_inputs)}")
    if dynamic.watch_depth_trend:
        details.append("watch depth: " + " ".join(str(d) for _, d in dynamic.watch_depth_trend))
    if dynamic.watch_growth:
        details.append("warning: watch nesting grows at every instant")
    if dynamic.message and dynamic.verdict == "diverged_at":
        details.append(dynamic.message)
    record = dynamic.record() | {"static": static.record(), "negative": negative}
    _report(args.format, str(dynamic), record, details)
    return EXIT_NEGATIVE if negative else EXIT_OK


def _check_equivalence(args, programs: list[SurfaceProgram]) -> int:
    if len(programs) != 2:
        print("error: equivalence needs exactly two programs", file=sys.stderr)
        return EXIT_USAGE
    a, b = programs
    if {s.display for s in a.interface} != {s.display for s in b.interface}:
        print("error: the two programs declare different interfaces", file=sys.stderr)
        return EXIT_USAGE
    verdict = check_equivalence(desugar(a), desugar(b), a.interface_set(), args.depth, args.fuel)
    details = []
    if not verdict.equivalent:
        t1, t2 = verdict.distinguishing()
        details = [f"{args.programs[0]}: {t1}", f"{args.programs[1]}: {t2}"]
    _report(args.format, str(verdict), verdict.record(), details)
    return EXIT_OK if verdict.equivalent else EXIT_NEGATIVE


def cmd_trace_diff(args) -> int:
    try:
        left = Path(args.left).read_text(encoding="utf-8").splitlines()
        right = Path(args.right).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    for k in range(max(len(left), len(right))):
        a = left[k] if k < len(left) else "<missing>"
        b = right[k] if k < len(right) else "<missing>"
        if a != b:
            print(f"line {k + 1} differs:\n  {args.left}: {a}\n  {args.right}: {b}")
            return EXIT_NEGATIVE
    print("traces identical")
    return EXIT_OK


# --- corpus -------------------------------------------------------------------------


def corpus_dir():
    return resources.files("reactive_kernel") / "corpus"


def corpus_entries() -> list[str]:
    return sorted(p.name[:-3] for p in corpus_dir().iterdir() if p.name.endswith(".rk"))


def corpus_expected_exit(name: str) -> int:
    first = (corpus_dir() / f"{name}.rk").read_text(encoding="utf-8").splitlines()[0]
    if first.startswith("// expect-exit:"):
        return int(first.split(":", 1)[1])
    return EXIT_OK


def cmd_corpus(args) -> int:
    names = corpus_entries()
    if args.action == "list":
        for name in names:
            print(name)
        return EXIT_OK
    selected = args.names or names
    failures = 0
    for name in selected:
        if name not in names:
            print(f"{name}: not in corpus", file=sys.stderr)
            failures += 1
            continue
        ok, detail = run_corpus_entry(name)
        print(f"{name}: {'ok' if ok else 'FAIL'}{detail}")
        failures += not ok
    return EXIT_NEGATIVE if failures else EXIT_OK


def run_corpus_entry(name: str) -> tuple[bool, str]:
    """Run one corpus program on its input script and compare with the golden trace."""
    base = corpus_dir()
    with resources.as_file(base / f"{name}.rk") as path:
        script_file = base / f"{name}.in"
        script = parse_input_script(script_file.read_text(encoding="utf-8")) if script_file.is_file() else [frozenset()]
        cfg = RunConfig(str(path), script, max_instants=len(script))
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = cmd_run(cfg)
    expected_code = corpus_expected_exit(name)
    golden = (base / f"{name}.out").read_text(encoding="utf-8")
    if code != expected_code:
        return False, f" (exit {code}, expected {expected_code})"
    if out.getvalue() != golden:
        return False, " (trace differs from golden)"
    return True, ""


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reactive-kernel", description="Run and analyse reactive kernel programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instants_default=None):
        p.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="rule applications allowed per instant")
        p.add_argument("--instants", type=int, default=instants_default, help="number of instants")
        p.add_argument("--format", choices=("text", "json", "structured"), default="text")

    run = sub.add_parser("run", help="run a program and print its trace")
    run.add_argument("program")
    run.add_argument("--inputs", help="input script file, or 'exhaustive'")
    run.add_argument("--sched", choices=("rr", "rand"), default="rr")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--replay", metavar="FILE", help="replay a schedule log")
    run.add_argument("--log-schedule", metavar="FILE", help="write the schedule log")
    common(run)

    check = sub.add_parser("check", help="run a property checker")
    check.add_argument("kind", choices=("determinism", "reactivity", "equivalence"))
    check.add_argument("programs", nargs="+")
    check.add_argument("--inputs", help="input script file")
    check.add_argument("--seeds", type=int, default=10, help="schedules tried by the determinism check")
    check.add_argument("--seed", type=int, default=0, help="seed for sampled reactivity inputs")
    check.add_argument("--depth", type=int, default=4, help="instants explored by the equivalence check")
    common(check, instants_default=None)

    diff = sub.add_parser("trace-diff", help="compare two trace files")
    diff.add_argument("left")
    diff.add_argument("right")

    corpus = sub.add_parser("corpus", help="list or run the bundled example programs")
    corpus.add_argument("action", choices=("list", "run"))
    corpus.add_argument("names", nargs="*")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "format", None) == "structured":
        args.format = "json"
    if args.command == "run":
        try:
            if args.inputs == "exhaustive":
                script: list[frozenset] | str = "exhaustive"
            else:
                script = _read_inputs(args.inputs)
            replay = parse_log(Path(args.replay).read_text(encoding="utf-8")) if args.replay else None
            instants = args.instants if args.instants is not None else max(1, len(script) if script != "exhaustive" else 1)
            cfg = RunConfig(
                args.program, script, instants, args.fuel, args.sched, args.seed, replay, args.format, args.log_schedule
            )
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return cmd_run(cfg)
    if args.command == "check":
        if args.instants is None:
            args.instants = 5 if args.kind == "determinism" else 20
        if args.kind != "equivalence" and len(args.programs) != 1:
            print(f"error: {args.kind} check takes one program", file=sys.stderr)
            return EXIT_USAGE
        return cmd_check(args)
    if args.command == "trace-diff":
        return cmd_trace_diff(args)
    return cmd_corpus(args)


if __name__ == "__main__":
    sys.exit(main())

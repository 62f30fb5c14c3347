"""Property checkers: determinism, reactivity, trace and bisimulation equivalence."""

from __future__ import annotations

import itertools
import random
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Optional

from .core import Program, SignalName, watch_depth
from .renaming import DEFAULT_BUDGET, StateRegistry, equal_up_to_renaming
from .scheduler import RoundRobin, SeededRandom
from .semantics import DEFAULT_FUEL, FuelExhausted, Machine, instant, io_step
from .syntax import (
    Await,
    Call,
    Emit,
    Exit,
    Local,
    Loop,
    Nil,
    Now,
    Pause,
    Present,
    Seq,
    Spawn,
    SurfaceProgram,
    Trap,
    Watch,
    When,
    Yield,
    iter_surface,
)

InputSet = frozenset  # of SignalName


def name_list(names: Iterable[SignalName]) -> list[str]:
    return sorted(str(s) for s in names)


def all_inputs(interface: Iterable[SignalName]) -> list[frozenset[SignalName]]:
    """Every subset of the interface, smallest first, then by sorted names."""
    names = sorted(interface, key=SignalName.sort_key)
    subsets = [frozenset(c) for k in range(len(names) + 1) for c in itertools.combinations(names, k)]
    return subsets


# --- determinism ----------------------------------------------------------------


@dataclass(frozen=True)
class DeterminismVerdict:
    passed: bool
    seeds: tuple[int, ...]
    instants: int
    failed_instant: Optional[int] = None
    reason: str = ""

    @property
    def kind(self) -> str:
        return "deterministic" if self.passed else "nondeterministic"

    def __str__(self) -> str:
        if self.passed:
            return f"deterministic_up_to({self.instants})"
        return f"nondeterministic_at({self.failed_instant}): {self.reason}"

    def record(self) -> dict:
        return {
            "verdict": self.kind,
            "instant": self.failed_instant if not self.passed else self.instants,
            "seeds": list(self.seeds),
            "reason": self.reason,
        }


def check_determinism(
    p: Program,
    interface: Iterable[SignalName],
    input_sequence: Sequence[Iterable[SignalName]] = (),
    n_schedules: int = 10,
    depth: int = 5,
    fuel: int = DEFAULT_FUEL,
    first_seed: int = 0,
) -> DeterminismVerdict:
    """Run ``depth`` instants under ``n_schedules`` random schedules and compare.

    Missing entries of ``input_sequence`` count as empty input sets. Outputs
    must agree exactly and programs up to renaming after every instant.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    interface = frozenset(interface)
    inputs = [frozenset(input_sequence[k]) if k < len(input_sequence) else frozenset() for k in range(depth)]
    seeds = tuple(range(first_seed, first_seed + max(1, n_schedules)))
    runs = []
    for seed in seeds:
        sched = SeededRandom(seed)
        m = Machine(interface, p)
        history = []
        for k in range(depth):
            outputs, m = io_step(m, inputs[k], sched, fuel)
            history.append((outputs, m.program))
        runs.append(history)

    reference = runs[0]
    for seed, run in zip(seeds[1:], runs[1:]):
        for k in range(depth):
            out0, prog0 = reference[k]
            out1, prog1 = run[k]
            if out0 != out1:
                return DeterminismVerdict(
                    False, seeds, depth, k + 1,
                    f"seed {seeds[0]} output {name_list(out0)} vs seed {seed} output {name_list(out1)}",
                )
            if equal_up_to_renaming(prog0, prog1, interface) is None:
                return DeterminismVerdict(
                    False, seeds, depth, k + 1,
                    f"programs after seeds {seeds[0]} and {seed} are not equal up to renaming",
                )
    return DeterminismVerdict(True, seeds, depth)


# --- reactivity -------------------------------------------------------------------


@dataclass
class ReactivityReport:
    """Outcome of a static or dynamic reactivity analysis.

    ``verdict`` is one of ``statically_safe``, ``potentially_nonreactive``,
    ``diverged_at`` or ``ok_up_to``.
    """

    verdict: str
    instant: Optional[int] = None
    cycle: tuple[str, ...] = ()
    diverging_inputs: Optional[frozenset] = None
    watch_depth_trend: list[tuple[int, int]] = field(default_factory=list)
    fuel_trend: list[tuple[int, int]] = field(default_factory=list)
    message: str = ""

    @property
    def watch_growth(self) -> bool:
        """Watch nesting grew at every instant of the run."""
        depths = [d for _, d in self.watch_depth_trend]
        return len(depths) >= 2 and all(b > a for a, b in zip(depths, depths[1:]))

    @property
    def ok(self) -> bool:
        return self.verdict in ("statically_safe", "ok_up_to")

    def __str__(self) -> str:
        if self.verdict == "potentially_nonreactive":
            return f"potentially_nonreactive({', '.join(self.cycle)})"
        if self.verdict in ("diverged_at", "ok_up_to"):
            return f"{self.verdict}({self.instant})"
        return self.verdict

    def record(self) -> dict:
        return {
            "verdict": self.verdict,
            "instant": self.instant,
            "witness": list(self.cycle),
            "inputs": name_list(self.diverging_inputs) if self.diverging_inputs is not None else None,
            "watch_depth_trend": [list(x) for x in self.watch_depth_trend],
            "watch_growth": self.watch_growth,
            "message": self.message,
        }


def _instant_reach(t) -> tuple[frozenset[str], bool]:
    """Definitions and loops reachable from the start of ``t`` within one instant,
    and whether every path through ``t`` crosses a pause first."""
    if isinstance(t, (Pause, Exit)):
        return frozenset(), True
    if isinstance(t, Loop):
        return frozenset((t.label,)), True
    if isinstance(t, Call):
        return frozenset((t.name,)), False
    if isinstance(t, Seq):
        first, pauses = _instant_reach(t.first)
        if pauses:
            return first, True
        second, pauses = _instant_reach(t.second)
        return first | second, pauses
    if isinstance(t, (Local, When, Watch, Now, Trap)):
        return _instant_reach(t.body)
    if isinstance(t, Spawn):
        return _instant_reach(t.body)[0], False
    if isinstance(t, Present):
        # the else branch only starts at the next instant
        return _instant_reach(t.then)[0], False
    if isinstance(t, (Nil, Emit, Await, Yield)):
        return frozenset(), False
    raise TypeError(f"unknown surface term {t!r}")


def _loops(t) -> Iterable[Loop]:
    return (n for n in iter_surface(t) if isinstance(n, Loop))


def call_graph(sp: SurfaceProgram) -> dict[str, frozenset[str]]:
    """Edges ``X -> Y`` when ``Y`` can start within the same instant as ``X``'s body."""
    graph: dict[str, frozenset[str]] = {}
    bodies = [d.body for d in sp.definitions] + list(sp.roots)
    for d in sp.definitions:
        graph[d.name] = _instant_reach(d.body)[0]
    for body in bodies:
        for loop in _loops(body):
            reach, pauses = _instant_reach(loop.body)
            graph[loop.label] = reach if pauses else reach | {loop.label}
    return graph


def _find_cycle(graph: dict[str, frozenset[str]]) -> Optional[list[str]]:
    white, grey, black = 0, 1, 2
    colour = {n: white for n in graph}
    for root in sorted(graph):
        if colour[root] != white:
            continue
        path = [root]
        iters = [iter(sorted(graph[root]))]
        colour[root] = grey
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                colour[path.pop()] = black
                iters.pop()
                continue
            if nxt not in colour:
                continue
            if colour[nxt] == grey:
                return path[path.index(nxt):]
            if colour[nxt] == white:
                colour[nxt] = grey
                path.append(nxt)
                iters.append(iter(sorted(graph[nxt])))
    return None


def static_reactivity_check(sp: SurfaceProgram) -> ReactivityReport:
    """Conservative check that every recursion crosses a ``pause``.

    ``await``, ``when`` and ``present`` are not counted as instant breaks,
    since they need not suspend.
    """
    cycle = _find_cycle(call_graph(sp))
    if cycle is None:
        return ReactivityReport("statically_safe")
    return ReactivityReport(
        "potentially_nonreactive",
        cycle=tuple(cycle),
        message="recursion without an intervening pause: " + " -> ".join(cycle + cycle[:1]),
    )


@dataclass
class InputStrategy:
    """How the dynamic probe chooses inputs.

    At each instant every candidate input set is tried from the current state;
    the run then advances along ``script[k]`` if a script is given, else along
    a seeded random candidate. Candidates are all subsets of the interface when
    it has at most ``max_exhaustive`` signals, else ``samples`` random subsets.
    """

    max_exhaustive: int = 4
    samples: int = 8
    seed: int = 0
    script: Optional[Sequence[Iterable[SignalName]]] = None

    def candidates(self, interface: frozenset, rng: random.Random) -> list[frozenset]:
        if len(interface) <= self.max_exhaustive:
            return all_inputs(interface)
        names = sorted(interface, key=SignalName.sort_key)
        picks = {frozenset(), frozenset(names)}
        while len(picks) < self.samples + 2:
            picks.add(frozenset(s for s in names if rng.random() < 0.5))
        return sorted(picks, key=lambda xs: (len(xs), name_list(xs)))


def dynamic_reactivity_probe(
    p: Program,
    interface: Iterable[SignalName],
    instants: int = 10,
    fuel_per_instant: int = DEFAULT_FUEL,
    input_strategy: Optional[InputStrategy] = None,
) -> ReactivityReport:
    """Drive the program for ``instants`` steps, watching for divergence and stack growth."""
    interface = frozenset(interface)
    strategy = input_strategy or InputStrategy()
    rng = random.Random(strategy.seed)
    m = Machine(interface, p)
    depth_trend: list[tuple[int, int]] = []
    fuel_trend: list[tuple[int, int]] = []
    for k in range(1, instants + 1):
        candidates = strategy.candidates(interface, rng)
        if strategy.script is not None and k - 1 < len(strategy.script):
            chosen = frozenset(strategy.script[k - 1])
            if chosen not in candidates:
                candidates.append(chosen)
        else:
            chosen = candidates[rng.randrange(len(candidates))]
        advanced = None
        for inputs in candidates:
            try:
                outcome = instant(m, inputs, RoundRobin(), fuel_per_instant)
            except FuelExhausted as exc:
                return ReactivityReport(
                    "diverged_at",
                    instant=k,
                    diverging_inputs=inputs,
                    watch_depth_trend=depth_trend,
                    fuel_trend=fuel_trend,
                    message=str(exc),
                )
            if inputs == chosen:
                advanced = Machine(interface, outcome.program, k, m.session)
                spent = outcome.fuel_spent
        m = advanced
        depth_trend.append((k, max((watch_depth(t) for t in m.program.threads), default=0)))
        fuel_trend.append((k, spent))
    report = ReactivityReport("ok_up_to", instant=instants, watch_depth_trend=depth_trend, fuel_trend=fuel_trend)
    if report.watch_growth:
        report.message = "watch nesting grows at every instant"
    return report


# --- traces and equivalence --------------------------------------------------------


class CapExceeded(RuntimeError):
    pass


class InternalDisagreement(RuntimeError):
    pass


@dataclass(frozen=True)
class Trace:
    steps: tuple[tuple[frozenset, frozenset], ...]

    @property
    def inputs(self) -> tuple[frozenset, ...]:
        return tuple(i for i, _ in self.steps)

    @property
    def outputs(self) -> tuple[frozenset, ...]:
        return tuple(o for _, o in self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return "".join(f"({{{','.join(name_list(i))}}}/{{{','.join(name_list(o))}}})" for i, o in self.steps)


def _check_caps(interface: frozenset, depth: int, max_interface: int, max_traces: int) -> None:
    if len(interface) > max_interface:
        raise CapExceeded(f"interface has {len(interface)} signals; at most {max_interface} can be enumerated")
    if (2 ** len(interface)) ** depth > max_traces:
        raise CapExceeded(f"{2 ** len(interface)}^{depth} traces exceed the cap of {max_traces}")


def bounded_traces(
    p: Program,
    interface: Iterable[SignalName],
    depth: int,
    fuel: int = DEFAULT_FUEL,
    max_interface: int = 6,
    max_traces: int = 1_000_000,
) -> set[Trace]:
    """All length-``depth`` traces, enumerating every input set at every instant.

    One schedule (round-robin) is enough since programs are deterministic.
    """
    interface = frozenset(interface)
    _check_caps(interface, depth, max_interface, max_traces)
    inputs = all_inputs(interface)
    traces: set[Trace] = set()
    frontier = [((), Machine(interface, p))]
    for _ in range(depth):
        nxt = []
        for prefix, m in frontier:
            for i in inputs:
                o, m2 = io_step(m, i, RoundRobin(), fuel)
                nxt.append((prefix + ((i, o),), m2))
        frontier = nxt
    for prefix, _ in frontier:
        traces.add(Trace(prefix))
    return traces


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    depth: int
    inputs: tuple[frozenset, ...] = ()
    outputs1: tuple[frozenset, ...] = ()
    outputs2: tuple[frozenset, ...] = ()
    method: str = ""

    @property
    def kind(self) -> str:
        return "equivalent_up_to" if self.equivalent else "distinguished_by"

    def distinguishing(self) -> tuple[Trace, Trace]:
        return Trace(tuple(zip(self.inputs, self.outputs1))), Trace(tuple(zip(self.inputs, self.outputs2)))

    def __str__(self) -> str:
        if self.equivalent:
            return f"equivalent_up_to({self.depth})"
        t1, t2 = self.distinguishing()
        return f"distinguished_by({t1} vs {t2})"

    def record(self) -> dict:
        out = {"verdict": self.kind, "instant": self.depth if self.equivalent else len(self.inputs)}
        if not self.equivalent:
            out["trace"] = [
                {"in": name_list(i), "out1": name_list(a), "out2": name_list(b)}
                for i, a, b in zip(self.inputs, self.outputs1, self.outputs2)
            ]
        return out


def trace_equivalence(
    p1: Program, p2: Program, interface: Iterable[SignalName], depth: int, fuel: int = DEFAULT_FUEL
) -> EquivalenceVerdict:
    """Compare bounded trace sets; on difference report a shortest distinguishing input sequence."""
    interface = frozenset(interface)
    t1 = bounded_traces(p1, interface, depth, fuel)
    t2 = bounded_traces(p2, interface, depth, fuel)
    if t1 == t2:
        return EquivalenceVerdict(True, depth, method="traces")
    order = {i: n for n, i in enumerate(all_inputs(interface))}
    by_inputs1 = {t.inputs: t.outputs for t in t1}
    by_inputs2 = {t.inputs: t.outputs for t in t2}
    best = None
    for ins, outs1 in by_inputs1.items():
        outs2 = by_inputs2[ins]
        k = next((j for j in range(depth) if outs1[j] != outs2[j]), None)
        if k is None:
            continue
        key = (k, tuple(order[i] for i in ins[: k + 1]))
        if best is None or key < best[0]:
            best = (key, ins[: k + 1], outs1[: k + 1], outs2[: k + 1])
    _, ins, o1, o2 = best
    return EquivalenceVerdict(False, depth, ins, o1, o2, method="traces")


def bisimulation_equivalence(
    p1: Program,
    p2: Program,
    interface: Iterable[SignalName],
    depth: int,
    fuel: int = DEFAULT_FUEL,
    budget: int = DEFAULT_BUDGET,
) -> EquivalenceVerdict:
    """Synchronised breadth-first exploration of state pairs up to ``depth`` instants.

    States are identified up to renaming, so pairs already seen at a smaller
    depth are not explored again.
    """
    interface = frozenset(interface)
    _check_caps(interface, depth, 6, 1_000_000)
    inputs = all_inputs(interface)
    reg1, reg2 = StateRegistry(interface, budget), StateRegistry(interface, budget)
    m1, m2 = Machine(interface, p1), Machine(interface, p2)
    seen = {(reg1.intern(p1), reg2.intern(p2))}
    queue = deque([(m1, m2, (), (), ())])
    while queue:
        a, b, ins, outs1, outs2 = queue.popleft()
        if len(ins) == depth:
            continue
        for i in inputs:
            o1, a2 = io_step(a, i, RoundRobin(), fuel)
            o2, b2 = io_step(b, i, RoundRobin(), fuel)
            path = (ins + (i,), outs1 + (o1,), outs2 + (o2,))
            if o1 != o2:
                return EquivalenceVerdict(False, depth, *path, method="bisimulation")
            key = (reg1.intern(a2.program), reg2.intern(b2.program))
            if key in seen:
                continue
            seen.add(key)
            queue.append((a2, b2, *path))
    return EquivalenceVerdict(True, depth, method="bisimulation")


def check_equivalence(
    p1: Program, p2: Program, interface: Iterable[SignalName], depth: int, fuel: int = DEFAULT_FUEL
) -> EquivalenceVerdict:
    """Bounded trace equivalence and bounded bisimilarity, cross-checked.

    Raises :class:`InternalDisagreement` if the two disagree on the verdict
    or on the length of the shortest distinguishing input sequence.
    """
    by_traces = trace_equivalence(p1, p2, interface, depth, fuel)
    by_bisim = bisimulation_equivalence(p1, p2, interface, depth, fuel)
    if by_traces.equivalent != by_bisim.equivalent or len(by_traces.inputs) != len(by_bisim.inputs):
        raise InternalDisagreement(f"trace check says {by_traces}, bisimulation says {by_bisim}")
    return by_traces

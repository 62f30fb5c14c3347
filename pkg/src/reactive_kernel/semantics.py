"""Big-step evaluation of threads, instants, and the Mealy I/O step.

``eval_thread`` runs one thread until it terminates or suspends on a
``when`` whose signal is absent. ``run_instant`` interleaves threads under a
scheduler until all are stuck, then applies the end-of-instant abort of
``watch`` bodies. ``io_step`` wraps an instant with the interface inputs and
outputs.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    NIL,
    Call,
    DefTable,
    Emit,
    Local,
    NameSession,
    Nil,
    Program,
    Seq,
    SignalName,
    Spawn,
    Thread,
    Watch,
    When,
    free_signals,
    substitute,
)
from .scheduler import RoundRobin, Scheduler

DEFAULT_FUEL = 1_000_000


class EvaluationError(RuntimeError):
    pass


class FuelExhausted(EvaluationError):
    """The rule-application budget ran out: the instant does not terminate."""

    def __init__(self, message: str, residual: Thread, steps: int, occurrence: Optional[int] = None):
        super().__init__(message)
        self.residual = residual
        self.steps = steps
        self.occurrence = occurrence


class UnboundSignal(EvaluationError):
    pass


class UnknownDefinition(EvaluationError):
    pass


class MalformedStuckThread(EvaluationError):
    pass


class SignalEnv:
    """Finite partial map from signal names to booleans."""

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Mapping[SignalName, bool] | None = None) -> None:
        self._bindings: dict[SignalName, bool] = dict(bindings or {})

    @classmethod
    def absent(cls, names: Iterable[SignalName], present: Iterable[SignalName] = ()) -> "SignalEnv":
        env = cls({s: False for s in names})
        for s in present:
            env._bindings[s] = True
        return env

    def __getitem__(self, s: SignalName) -> bool:
        try:
            return self._bindings[s]
        except KeyError:
            raise UnboundSignal(f"signal {s} is not in the environment") from None

    def __contains__(self, s: object) -> bool:
        return s in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalEnv):
            return NotImplemented
        return self._bindings == other._bindings

    def __repr__(self) -> str:
        inner = ", ".join(f"{s}={'T' if v else 'F'}" for s, v in sorted(self._bindings.items(), key=lambda kv: kv[0].sort_key()))
        return f"SignalEnv({inner})"

    def get(self, s: SignalName, default=None):
        return self._bindings.get(s, default)

    def domain(self) -> frozenset[SignalName]:
        return frozenset(self._bindings)

    def present(self) -> frozenset[SignalName]:
        return frozenset(s for s, v in self._bindings.items() if v)

    def items(self):
        return self._bindings.items()

    def set(self, s: SignalName, value: bool = True) -> "SignalEnv":
        env = self.copy()
        env._bindings[s] = value
        return env

    def copy(self) -> "SignalEnv":
        return SignalEnv(self._bindings)


@dataclass(frozen=True)
class EvalResult:
    residual: Thread
    env: SignalEnv
    spawned: tuple[Thread, ...]
    steps: int
    emitted: tuple[SignalName, ...] = ()


# frames of the evaluation stack
_SEQ, _WHEN, _WATCH = 0, 1, 2


def _rebuild(t: Thread, stack: list) -> Thread:
    for kind, payload in reversed(stack):
        if kind == _SEQ:
            t = Seq(t, payload)
        elif kind == _WHEN:
            t = When(payload, t)
        else:
            t = Watch(payload, t)
    return t


def _run(t: Thread, env: dict, defs: Mapping, session: NameSession, fuel: int):
    """Evaluate ``t`` in place on ``env``; returns (residual, spawned, steps, emitted).

    Uses an explicit frame stack so tail-recursive definitions run in constant
    Python stack depth.
    """
    stack: list = []
    spawned: list[Thread] = []
    emitted: list[SignalName] = []
    steps = 0
    while True:
        # evaluate t down to a residual
        while True:
            if steps >= fuel:
                raise FuelExhausted(f"fuel exhausted after {steps} rule applications", _rebuild(t, stack), steps)
            steps += 1
            if isinstance(t, Seq):
                stack.append((_SEQ, t.second))
                t = t.first
            elif isinstance(t, Nil):
                result = t
                break
            elif isinstance(t, Emit):
                if t.signal not in env:
                    raise UnboundSignal(f"emit of unbound signal {t.signal}")
                if not env[t.signal]:
                    env[t.signal] = True
                    emitted.append(t.signal)
                result = NIL
                break
            elif isinstance(t, When):
                try:
                    present = env[t.signal]
                except KeyError:
                    raise UnboundSignal(f"when on unbound signal {t.signal}") from None
                if not present:
                    result = t
                    break
                stack.append((_WHEN, t.signal))
                t = t.body
            elif isinstance(t, Watch):
                if t.signal not in env:
                    raise UnboundSignal(f"watch on unbound signal {t.signal}")
                stack.append((_WATCH, t.signal))
                t = t.body
            elif isinstance(t, Local):
                fresh = session.fresh(t.binder.display)
                env[fresh] = False
                t = substitute(t.body, {t.binder: fresh})
            elif isinstance(t, Call):
                try:
                    d = defs[t.name]
                except KeyError:
                    raise UnknownDefinition(f"no definition for {t.name}") from None
                if len(d.params) != len(t.args):
                    raise UnknownDefinition(f"{t.name} expects {len(d.params)} arguments, got {len(t.args)}")
                t = substitute(d.body, dict(zip(d.params, t.args)))
            elif isinstance(t, Spawn):
                spawned.append(t.body)
                result = NIL
                break
            else:
                raise TypeError(f"not a kernel thread: {t!r}")
        # return the residual through the frames
        while stack:
            kind, payload = stack.pop()
            if kind == _SEQ:
                if result is NIL or isinstance(result, Nil):
                    t = payload
                    break
                result = Seq(result, payload)
            elif kind == _WHEN:
                if not isinstance(result, Nil):
                    result = When(payload, result)
            else:
                if not isinstance(result, Nil):
                    result = Watch(payload, result)
        else:
            return result, spawned, steps, emitted


def eval_thread(
    t: Thread,
    env: SignalEnv,
    defs: Mapping | None = None,
    session: Optional[NameSession] = None,
    fuel: int = DEFAULT_FUEL,
) -> EvalResult:
    """One maximal big-step derivation of ``t`` in ``env``."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    bindings = dict(env.items())
    residual, spawned, steps, emitted = _run(t, bindings, defs or {}, session or NameSession(), fuel)
    return EvalResult(residual, SignalEnv(bindings), tuple(spawned), steps, tuple(emitted))


def _lookup(env, s: SignalName) -> bool:
    try:
        return env[s]
    except KeyError:
        raise UnboundSignal(f"signal {s} is not in the environment") from None


def is_stuck(t: Thread, env) -> bool:
    """True iff evaluating ``t`` in ``env`` changes nothing and spawns nothing."""
    while True:
        if isinstance(t, Nil):
            return True
        if isinstance(t, When):
            if not _lookup(env, t.signal):
                return True
            if isinstance(t.body, Nil):
                return False
            t = t.body
        elif isinstance(t, Watch):
            if isinstance(t.body, Nil):
                return False
            t = t.body
        elif isinstance(t, Seq):
            if isinstance(t.first, Nil):
                return False
            t = t.first
        else:
            return False


def blocking_signals(t: Thread, env) -> frozenset[SignalName]:
    """Absent signals whose emission could unblock the stuck thread ``t``."""
    while True:
        if isinstance(t, When):
            if not _lookup(env, t.signal):
                return frozenset((t.signal,))
            t = t.body
        elif isinstance(t, Watch):
            t = t.body
        elif isinstance(t, Seq):
            t = t.first
        else:
            return frozenset()


def _end_of_instant_thread(t: Thread, env) -> Thread:
    if isinstance(t, Nil):
        return t
    if isinstance(t, Seq):
        return Seq(_end_of_instant_thread(t.first, env), t.second)
    if isinstance(t, When):
        if _lookup(env, t.signal):
            return When(t.signal, _end_of_instant_thread(t.body, env))
        return t
    if isinstance(t, Watch):
        if _lookup(env, t.signal):
            return NIL
        return Watch(t.signal, _end_of_instant_thread(t.body, env))
    raise MalformedStuckThread(f"end of instant reached a {type(t).__name__} node: {t!r}")


def end_of_instant(p: Program | Iterable[Thread], env) -> Program | tuple[Thread, ...]:
    """Abort ``watch`` bodies whose signal is present, pointwise on the multiset."""
    if isinstance(p, Program):
        return Program(tuple(_end_of_instant_thread(t, env) for t in p.threads), p.defs)
    return tuple(_end_of_instant_thread(t, env) for t in p)


@dataclass(frozen=True)
class InstantOutcome:
    program: Program
    env: SignalEnv
    emitted: frozenset[SignalName]
    schedule_log: tuple[tuple[int, int], ...]
    fuel_spent: int

    @property
    def picks(self) -> tuple[int, ...]:
        return tuple(occ for occ, _ in self.schedule_log)


Observer = Callable[[Optional[int], SignalEnv], None]


def run_instant(
    p: Program,
    env: SignalEnv,
    sched: Optional[Scheduler] = None,
    defs: Optional[DefTable] = None,
    session: Optional[NameSession] = None,
    fuel: int = DEFAULT_FUEL,
    observer: Optional[Observer] = None,
) -> InstantOutcome:
    """Run every thread of ``p`` to termination or suspension, then end the instant.

    Occurrence ids are positions in ``p.threads``; spawned threads get the next
    ids in spawn order. ``observer``, if given, is called with ``(None, env)``
    before the first pick and ``(occurrence, env)`` after each evaluation.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    sched = sched or RoundRobin()
    defs = p.defs if defs is None else defs
    session = session or NameSession()
    bindings = dict(env.items())
    missing = free_signals(p) - bindings.keys()
    if missing:
        raise UnboundSignal(f"free signals missing from environment: {sorted(s.display for s in missing)}")

    threads: dict[int, Thread] = {}
    ready: set[int] = set()
    waiters: dict[SignalName, set[int]] = {}

    def classify(occ: int) -> None:
        t = threads[occ]
        if is_stuck(t, bindings):
            for s in blocking_signals(t, bindings):
                waiters.setdefault(s, set()).add(occ)
        else:
            ready.add(occ)

    for occ, t in enumerate(p.threads):
        threads[occ] = t
        classify(occ)
    next_id = len(threads)

    sched.begin_instant()
    log: list[tuple[int, int]] = []
    spent = 0
    if observer:
        observer(None, SignalEnv(bindings))
    while True:
        occ = sched.pick([(i, i not in ready) for i in threads])
        if occ is None:
            break
        if occ not in ready:
            raise EvaluationError(f"scheduler picked stuck occurrence {occ}")
        ready.discard(occ)
        try:
            residual, spawned, steps, emitted = _run(threads[occ], bindings, defs, session, fuel - spent)
        except FuelExhausted as exc:
            raise FuelExhausted(
                f"instant did not terminate: occurrence {occ} exhausted the fuel budget of {fuel}",
                exc.residual,
                spent + exc.steps,
                occ,
            ) from None
        spent += steps
        log.append((occ, steps))
        threads[occ] = residual
        classify(occ)
        for body in spawned:
            threads[next_id] = body
            classify(next_id)
            next_id += 1
        for s in emitted:
            for woken in waiters.pop(s, ()):
                if woken not in ready and is_stuck(threads[woken], bindings):
                    for b in blocking_signals(threads[woken], bindings):
                        waiters.setdefault(b, set()).add(woken)
                else:
                    ready.add(woken)
        if observer:
            observer(occ, SignalEnv(bindings))

    final_env = SignalEnv(bindings)
    after = tuple(_end_of_instant_thread(threads[i], bindings) for i in threads)
    return InstantOutcome(
        program=Program(after, p.defs),
        env=final_env,
        emitted=final_env.present(),
        schedule_log=tuple(log),
        fuel_spent=spent,
    )


@dataclass(frozen=True)
class Machine:
    """A program viewed as a Mealy machine over a fixed interface."""

    interface: frozenset[SignalName]
    program: Program
    instant_index: int = 0
    session: NameSession = field(default_factory=NameSession, compare=False, repr=False)


def initial_env(interface: Iterable[SignalName], program: Program, inputs: Iterable[SignalName]) -> SignalEnv:
    """Inputs present; the rest of the interface and the program's free signals absent."""
    inputs = frozenset(inputs)
    names = set(interface) | free_signals(program)
    return SignalEnv.absent(names - inputs, inputs)


def io_step(
    m: Machine,
    inputs: Iterable[SignalName],
    sched: Optional[Scheduler] = None,
    fuel: int = DEFAULT_FUEL,
    observer: Optional[Observer] = None,
) -> tuple[frozenset[SignalName], Machine]:
    inputs = frozenset(inputs)
    extra = inputs - m.interface
    if extra:
        raise ValueError(f"inputs outside the interface: {sorted(s.display for s in extra)}")
    outcome = instant(m, inputs, sched, fuel, observer)
    outputs = frozenset(s for s in m.interface if outcome.env[s])
    return outputs, Machine(m.interface, outcome.program, m.instant_index + 1, m.session)


def instant(
    m: Machine,
    inputs: Iterable[SignalName],
    sched: Optional[Scheduler] = None,
    fuel: int = DEFAULT_FUEL,
    observer: Optional[Observer] = None,
) -> InstantOutcome:
    """The full outcome of one I/O step (``io_step`` keeps only the outputs)."""
    env = initial_env(m.interface, m.program, inputs)
    return run_instant(m.program, env, sched, m.program.defs, m.session, fuel, observer)


def run_trace(
    m: Machine,
    input_sequence: Iterable[Iterable[SignalName]],
    sched: Optional[Scheduler] = None,
    fuel: int = DEFAULT_FUEL,
) -> tuple[list[tuple[frozenset[SignalName], frozenset[SignalName]]], Machine]:
    """Drive ``m`` through ``input_sequence``; returns the (inputs, outputs) steps."""
    steps = []
    for inputs in input_sequence:
        inputs = frozenset(inputs)
        outputs, m = io_step(m, inputs, sched, fuel)
        steps.append((inputs, outputs))
    return steps, m

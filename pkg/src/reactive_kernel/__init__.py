"""Interpreter and property checkers for a reactive synchronous kernel language."""

from .analysis import (
    InputStrategy,
    ReactivityReport,
    Trace,
    bounded_traces,
    check_determinism,
    check_equivalence,
    dynamic_reactivity_probe,
    static_reactivity_check,
)
from .core import (
    NIL,
    Call,
    Definition,
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
    fresh,
    free_signals,
    interface_signal,
    program,
    signal,
    substitute,
)
from .renaming import RenamingWitness, equal_up_to_renaming
from .scheduler import Replay, RoundRobin, SeededRandom
from .semantics import (
    DEFAULT_FUEL,
    FuelExhausted,
    Machine,
    SignalEnv,
    end_of_instant,
    eval_thread,
    io_step,
    is_stuck,
    run_instant,
)
from .syntax import compile_source, desugar, parse, pretty_print

__all__ = [name for name in dir() if not name.startswith("_")]

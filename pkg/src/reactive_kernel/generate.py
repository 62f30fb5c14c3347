"""Random well-formed surface programs for property testing.

Generated programs never call definitions, and every loop body ends in a
``pause``, so each instant terminates.
"""

from __future__ import annotations

import random
from typing import Optional

from .core import INTERFACE, NIL, Emit, Local, Program, Seq, Spawn, Watch, When, signal
from .syntax import (
    Await,
    Exit,
    Loop,
    Now,
    Pause,
    Present,
    SurfaceProgram,
    Trap,
    Yield,
    desugar,
    parse,
    pretty_print,
)

_LEAVES = ("nil", "emit", "emit", "await", "pause", "yield", "exit")
_NODES = ("seq", "seq", "seq", "local", "thread", "when", "watch", "now", "present", "trap", "loop")


def random_term(rng: random.Random, depth: int, names: list) -> object:
    """A surface term of nesting depth at most ``depth`` over ``names``."""
    if depth <= 1 or rng.random() < 0.25:
        kind = rng.choice(_LEAVES)
        if kind == "nil":
            return NIL
        if kind == "emit":
            return Emit(rng.choice(names))
        if kind == "await":
            return Await(rng.choice(names))
        if kind == "pause":
            return Pause()
        if kind == "yield":
            return Yield()
        return Exit(rng.choice(names))
    kind = rng.choice(_NODES)
    sub = depth - 1
    if kind == "seq":
        return Seq(random_term(rng, sub, names), random_term(rng, sub, names))
    if kind == "local":
        return Local(rng.choice(names), random_term(rng, sub, names))
    if kind == "thread":
        return Spawn(random_term(rng, sub, names))
    if kind == "when":
        return When(rng.choice(names), random_term(rng, sub, names))
    if kind == "watch":
        return Watch(rng.choice(names), random_term(rng, sub, names))
    if kind == "now":
        return Now(random_term(rng, sub, names))
    if kind == "present":
        return Present(rng.choice(names), random_term(rng, sub - 1, names), random_term(rng, sub - 1, names))
    if kind == "trap":
        return Trap(rng.choice(names), random_term(rng, sub, names))
    # depth budget: loop { body; pause } adds one Seq level
    return Loop(Seq(random_term(rng, max(1, sub - 1), names), Pause()))


def random_surface(
    rng: random.Random,
    max_depth: int = 6,
    n_signals: int = 4,
    n_interface: Optional[int] = None,
    max_threads: int = 3,
) -> SurfaceProgram:
    """A random program; loops get labels by printing and re-parsing."""
    n_signals = max(1, n_signals)
    if n_interface is None:
        n_interface = rng.randint(1, n_signals)
    names = [signal(chr(ord("a") + k), INTERFACE if k < n_interface else "program-free") for k in range(n_signals)]
    roots = [random_term(rng, max_depth, names) for _ in range(rng.randint(1, max_threads))]
    sp = SurfaceProgram(roots=roots, interface=names[:n_interface])
    return parse(pretty_print(sp))


def random_program(rng: random.Random, **kwargs) -> tuple[Program, frozenset]:
    sp = random_surface(rng, **kwargs)
    return desugar(sp), sp.interface_set()

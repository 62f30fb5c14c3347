"""Equality of programs up to renaming of non-interface signals.

Bound names are compared up to alpha-conversion; free names outside the
interface may be renamed by a bijection; interface names are fixed.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

from .core import (
    Call,
    Emit,
    Local,
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


class SearchBudgetExceeded(RuntimeError):
    pass


DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class RenamingWitness:
    """Bijection between the free signals of two programs, identity on the interface."""

    bijection: dict

    def __call__(self, s: SignalName) -> SignalName:
        return self.bijection.get(s, s)

    def inverse(self) -> "RenamingWitness":
        return RenamingWitness({v: k for k, v in self.bijection.items()})

    def then(self, other: "RenamingWitness") -> "RenamingWitness":
        return RenamingWitness({k: other(v) for k, v in self.bijection.items()})

    def __hash__(self) -> int:
        return hash(frozenset(self.bijection.items()))


def shape(t: Thread, interface: frozenset) -> tuple:
    """Hashable rendering of ``t`` with non-interface free names erased.

    Bound names become binder depths, so alpha-equivalent threads share a
    shape; threads equal up to renaming always do.
    """

    def name(s: SignalName, bound: dict) -> object:
        if s in bound:
            return bound[s]
        if s in interface:
            return ("I", s.key)
        return "_"

    def go(t: Thread, bound: dict) -> tuple:
        if isinstance(t, Nil):
            return ("nil",)
        if isinstance(t, Emit):
            return ("emit", name(t.signal, bound))
        if isinstance(t, Local):
            inner = dict(bound)
            inner[t.binder] = len(bound)
            return ("local", go(t.body, inner))
        if isinstance(t, Spawn):
            return ("thread", go(t.body, bound))
        if isinstance(t, When):
            return ("when", name(t.signal, bound), go(t.body, bound))
        if isinstance(t, Watch):
            return ("watch", name(t.signal, bound), go(t.body, bound))
        if isinstance(t, Call):
            return ("call", t.name, tuple(name(a, bound) for a in t.args))
        if isinstance(t, Seq):
            return ("seq", go(t.first, bound), go(t.second, bound))
        raise TypeError(f"not a kernel thread: {t!r}")

    return go(t, {})


def program_shape(p: Program | Iterable[Thread], interface: frozenset) -> tuple:
    threads = p.threads if isinstance(p, Program) else tuple(p)
    return tuple(sorted((repr(shape(t, interface)) for t in threads)))


def _match(t1: Thread, t2: Thread, interface: frozenset, fwd: dict, bwd: dict) -> bool:
    """Extend ``fwd``/``bwd`` so that ``t1`` maps onto ``t2``; False on conflict."""
    stack = [(t1, t2, {}, {})]
    depth_of = len

    def names(a: SignalName, b: SignalName, b1: dict, b2: dict) -> bool:
        if a in b1 or b in b2:
            return b1.get(a) == b2.get(b) and a in b1 and b in b2
        if a in interface or b in interface:
            return a == b
        if fwd.get(a, b) != b or bwd.get(b, a) != a:
            return False
        fwd[a] = b
        bwd[b] = a
        return True

    while stack:
        a, b, b1, b2 = stack.pop()
        if type(a) is not type(b):
            return False
        if isinstance(a, Nil):
            continue
        if isinstance(a, Emit):
            if not names(a.signal, b.signal, b1, b2):
                return False
        elif isinstance(a, Local):
            n1 = dict(b1)
            n1[a.binder] = depth_of(b1)
            n2 = dict(b2)
            n2[b.binder] = depth_of(b2)
            stack.append((a.body, b.body, n1, n2))
        elif isinstance(a, Spawn):
            stack.append((a.body, b.body, b1, b2))
        elif isinstance(a, (When, Watch)):
            if not names(a.signal, b.signal, b1, b2):
                return False
            stack.append((a.body, b.body, b1, b2))
        elif isinstance(a, Call):
            if a.name != b.name or len(a.args) != len(b.args):
                return False
            for x, y in zip(a.args, b.args):
                if not names(x, y, b1, b2):
                    return False
        elif isinstance(a, Seq):
            stack.append((a.second, b.second, b1, b2))
            stack.append((a.first, b.first, b1, b2))
        else:
            raise TypeError(f"not a kernel thread: {a!r}")
    return True


def alpha_equivalent(t1: Thread, t2: Thread) -> bool:
    """Structural equality modulo renaming of ``local`` binders."""
    fixed = free_signals(t1) | free_signals(t2)
    return _match(t1, t2, fixed, {}, {})


def equal_up_to_renaming(
    p1: Program | Iterable[Thread],
    p2: Program | Iterable[Thread],
    interface: Iterable[SignalName] = frozenset(),
    budget: int = DEFAULT_BUDGET,
) -> Optional[RenamingWitness]:
    """A bijection taking ``p1`` onto ``p2`` as multisets, or None.

    Threads are grouped by shape; within a group the pairing is found by
    backtracking. Raises :class:`SearchBudgetExceeded` when more than
    ``budget`` pairings are tried.
    """
    interface = frozenset(interface)
    threads1 = list(p1.threads if isinstance(p1, Program) else p1)
    threads2 = list(p2.threads if isinstance(p2, Program) else p2)
    if len(threads1) != len(threads2):
        return None
    shapes1 = [repr(shape(t, interface)) for t in threads1]
    shapes2 = [repr(shape(t, interface)) for t in threads2]
    if Counter(shapes1) != Counter(shapes2):
        return None

    # threads without renameable free names match any partner of equal shape
    pending: list[tuple[Thread, str]] = []
    for t, sh in zip(threads1, shapes1):
        if free_signals(t) - interface:
            pending.append((t, sh))
    candidates: dict[str, list[Thread]] = defaultdict(list)
    for t, sh in zip(threads2, shapes2):
        if free_signals(t) - interface:
            candidates[sh].append(t)
    pending.sort(key=lambda item: len(candidates[item[1]]))

    tries = 0

    def search(k: int, fwd: dict, bwd: dict, used: set) -> Optional[dict]:
        nonlocal tries
        if k == len(pending):
            return fwd
        t, sh = pending[k]
        tried: set = set()
        for j, u in enumerate(candidates[sh]):
            if (sh, j) in used or u in tried:
                continue
            tried.add(u)
            tries += 1
            if tries > budget:
                raise SearchBudgetExceeded(f"renaming search exceeded {budget} pairings")
            f, b = dict(fwd), dict(bwd)
            if _match(t, u, interface, f, b):
                found = search(k + 1, f, b, used | {(sh, j)})
                if found is not None:
                    return found
        return None

    fwd = search(0, {}, {}, frozenset())
    if fwd is None:
        return None
    for s in interface:
        fwd.setdefault(s, s)
    return RenamingWitness(fwd)


def rename_program(p: Program, witness: RenamingWitness) -> Program:
    mapping = {k: v for k, v in witness.bijection.items() if k != v}
    return Program(tuple(substitute(t, mapping) for t in p.threads), p.defs)


class StateRegistry:
    """Interns programs up to renaming; equal-up-to-renaming programs share an id."""

    def __init__(self, interface: Iterable[SignalName], budget: int = DEFAULT_BUDGET) -> None:
        self.interface = frozenset(interface)
        self.budget = budget
        self._buckets: dict[tuple, list[tuple[int, Program]]] = defaultdict(list)
        self._count = 0

    def __len__(self) -> int:
        return self._count

    def intern(self, p: Program) -> int:
        bucket = self._buckets[program_shape(p, self.interface)]
        for ident, q in bucket:
            if q.defs == p.defs and equal_up_to_renaming(p, q, self.interface, self.budget) is not None:
                return ident
        ident = self._count
        self._count += 1
        bucket.append((ident, p))
        return ident

"""Abstract syntax of the reactive kernel: signal names, threads, programs.

Every value here is immutable except :class:`NameSession`, which hands out
fresh signal names and must stay confined to one execution.
"""

from __future__ import annotations

import itertools
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Union

INTERFACE = "interface"
PROGRAM_FREE = "program-free"
FRESH = "fresh"

_session_ids = itertools.count(1)
_alpha_serials = itertools.count(1)


@dataclass(frozen=True, slots=True)
class SignalName:
    """A signal name. Equality and hashing use ``key`` only."""

    key: tuple
    display: str = field(compare=False)
    origin: str = field(default=PROGRAM_FREE, compare=False)

    def __str__(self) -> str:
        return self.display

    def __repr__(self) -> str:
        return f"SignalName({self.display!r})"

    @property
    def is_fresh(self) -> bool:
        return self.key[0] != "src"

    def sort_key(self) -> tuple:
        return (self.display, repr(self.key))


def signal(name: str, origin: str = PROGRAM_FREE) -> SignalName:
    """Source-level signal name; two calls with the same text are equal."""
    return SignalName(("src", name), name, origin)


def interface_signal(name: str) -> SignalName:
    return signal(name, INTERFACE)


class NameSession:
    """Source of fresh signal names.

    Keys carry a per-session token, so names from different sessions never
    collide, and source-level names (key kind ``"src"``) are never produced.
    """

    def __init__(self) -> None:
        self._token = next(_session_ids)
        self._serial = itertools.count(1)

    def fresh(self, hint: str = "s") -> SignalName:
        serial = next(self._serial)
        base = hint.split("#", 1)[0] or "s"
        return SignalName(("fresh", self._token, serial), f"{base}#{serial}", FRESH)


def fresh(session: NameSession, hint: str = "s") -> SignalName:
    return session.fresh(hint)


def _alpha_name(hint: str) -> SignalName:
    serial = next(_alpha_serials)
    base = hint.split("#", 1)[0] or "s"
    return SignalName(("alpha", serial), f"{base}#a{serial}", FRESH)


# --- threads -----------------------------------------------------------------


class Thread:
    """Base class of kernel thread terms."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Nil(Thread):
    def __repr__(self) -> str:
        return "Nil"


NIL = Nil()


@dataclass(frozen=True, slots=True)
class Emit(Thread):
    signal: SignalName


@dataclass(frozen=True, slots=True)
class Local(Thread):
    binder: SignalName
    body: Thread


@dataclass(frozen=True, slots=True)
class Spawn(Thread):
    body: Thread


@dataclass(frozen=True, slots=True)
class When(Thread):
    signal: SignalName
    body: Thread


@dataclass(frozen=True, slots=True)
class Watch(Thread):
    signal: SignalName
    body: Thread


@dataclass(frozen=True, slots=True)
class Call(Thread):
    name: str
    args: tuple[SignalName, ...]


@dataclass(frozen=True, slots=True)
class Seq(Thread):
    first: Thread
    second: Thread


KERNEL_KINDS = (Nil, Emit, Local, Spawn, When, Watch, Call, Seq)


def seq(*parts: Thread) -> Thread:
    """Right-nested sequence of ``parts``; ``seq()`` is ``Nil``."""
    if not parts:
        return NIL
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = Seq(part, out)
    return out


def children(t: Thread) -> tuple[Thread, ...]:
    if isinstance(t, (Local, Spawn, When, Watch)):
        return (t.body,)
    if isinstance(t, Seq):
        return (t.first, t.second)
    return ()


def iter_nodes(t: Thread) -> Iterator[Thread]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_signals(t: Union[Thread, "Program"]) -> frozenset[SignalName]:
    """Signals occurring free in a thread or in any thread of a program."""
    if isinstance(t, Program):
        out: set[SignalName] = set()
        for thread in t.threads:
            out |= free_signals(thread)
        return frozenset(out)
    if isinstance(t, Nil):
        return frozenset()
    if isinstance(t, Emit):
        return frozenset((t.signal,))
    if isinstance(t, Local):
        return free_signals(t.body) - {t.binder}
    if isinstance(t, Spawn):
        return free_signals(t.body)
    if isinstance(t, (When, Watch)):
        return free_signals(t.body) | {t.signal}
    if isinstance(t, Call):
        return frozenset(t.args)
    if isinstance(t, Seq):
        return free_signals(t.first) | free_signals(t.second)
    raise TypeError(f"not a kernel thread: {t!r}")


def substitute(t: Thread, mapping: Mapping[SignalName, SignalName]) -> Thread:
    """Capture-avoiding replacement of free occurrences of ``mapping``'s keys."""
    if not mapping:
        return t
    if isinstance(t, Nil):
        return t
    if isinstance(t, Emit):
        return Emit(mapping.get(t.signal, t.signal))
    if isinstance(t, Local):
        inner = {k: v for k, v in mapping.items() if k != t.binder}
        if not inner:
            return t
        free = free_signals(t.body)
        inner = {k: v for k, v in inner.items() if k in free}
        if not inner:
            return t
        binder, body = t.binder, t.body
        if binder in inner.values():
            renamed = _alpha_name(binder.display)
            body = substitute(body, {binder: renamed})
            binder = renamed
        return Local(binder, substitute(body, inner))
    if isinstance(t, Spawn):
        return Spawn(substitute(t.body, mapping))
    if isinstance(t, When):
        return When(mapping.get(t.signal, t.signal), substitute(t.body, mapping))
    if isinstance(t, Watch):
        return Watch(mapping.get(t.signal, t.signal), substitute(t.body, mapping))
    if isinstance(t, Call):
        return Call(t.name, tuple(mapping.get(a, a) for a in t.args))
    if isinstance(t, Seq):
        return Seq(substitute(t.first, mapping), substitute(t.second, mapping))
    raise TypeError(f"not a kernel thread: {t!r}")


def watch_depth(t: Thread) -> int:
    """Maximum nesting depth of ``Watch`` nodes in ``t``."""
    best = 0
    stack = [(t, 0)]
    while stack:
        node, depth = stack.pop()
        if isinstance(node, Watch):
            depth += 1
            best = max(best, depth)
        stack.extend((c, depth) for c in children(node))
    return best


# --- definitions and programs ---------------------------------------------------


class DefinitionError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Definition:
    params: tuple[SignalName, ...]
    body: Thread


class DefTable(Mapping[str, Definition]):
    """Immutable table of thread-identifier equations ``A(params) = body``.

    Bodies must be closed under their parameters.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, Definition] | None = None) -> None:
        entries = dict(entries or {})
        for name, d in entries.items():
            if len(set(d.params)) != len(d.params):
                raise DefinitionError(f"definition {name}: repeated parameter")
            loose = free_signals(d.body) - set(d.params)
            if loose:
                shown = ", ".join(sorted(s.display for s in loose))
                raise DefinitionError(f"definition {name}: free signals {shown} are not parameters")
        self._entries = entries

    def __getitem__(self, name: str) -> Definition:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DefTable):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        return f"DefTable({sorted(self._entries)})"

    def merged(self, other: Mapping[str, Definition]) -> "DefTable":
        clash = set(self._entries) & set(other)
        if clash:
            raise DefinitionError(f"duplicate definition {sorted(clash)[0]}")
        return DefTable({**self._entries, **other})


EMPTY_DEFS = DefTable()


@dataclass(frozen=True, eq=False)
class Program:
    """Finite multiset of threads plus the definitions they may call.

    The tuple order is kept (schedulers address occurrences by position) but
    equality is multiset equality.
    """

    threads: tuple[Thread, ...]
    defs: DefTable = EMPTY_DEFS

    def __post_init__(self) -> None:
        object.__setattr__(self, "threads", tuple(self.threads))
        if not self.threads:
            raise ValueError("a program needs at least one thread")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return self.defs == other.defs and Counter(self.threads) == Counter(other.threads)

    def __hash__(self) -> int:
        return hash((frozenset(Counter(self.threads).items()), self.defs))

    def __len__(self) -> int:
        return len(self.threads)

    def __iter__(self) -> Iterator[Thread]:
        return iter(self.threads)

    def count(self, t: Thread) -> int:
        return sum(1 for x in self.threads if x == t)

    def add(self, *ts: Thread) -> "Program":
        return Program(self.threads + ts, self.defs)

    def remove_one(self, t: Thread) -> "Program":
        threads = list(self.threads)
        threads.remove(t)
        return Program(tuple(threads), self.defs)

    def union(self, other: "Program | Iterable[Thread]") -> "Program":
        extra = other.threads if isinstance(other, Program) else tuple(other)
        return Program(self.threads + extra, self.defs)


def program(*threads: Thread, defs: Mapping[str, Definition] | None = None) -> Program:
    return Program(threads, defs if isinstance(defs, DefTable) else DefTable(defs))

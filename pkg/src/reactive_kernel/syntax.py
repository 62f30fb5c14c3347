"""Concrete syntax: parsing, desugaring of derived forms, pretty printing.

Grammar (``//`` starts a comment)::

    file   := item*
    item   := "interface" names ";" | "def" IDENT "(" names? ")" block | "run" block
    block  := "{" [stmt (";" stmt)* [";"]] "}"
    stmt   := "()" | "emit" N | "local" names block | "thread" block
            | "when" names block | "watch" names block | IDENT "(" names? ")"
            | "await" N | "loop" block | "now" block | "pause" | "exit" N
            | "trap" N block | "present" N block ["else" block] | "yield"
            | block

Sequences are right-nested; a block holding one statement is that statement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

from .core import (
    INTERFACE,
    NIL,
    PROGRAM_FREE,
    Call,
    Definition,
    DefinitionError,
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
    signal,
)

KEYWORDS = frozenset(
    "emit local thread when watch await loop now pause exit trap present yield "
    "def run interface else".split()
)


# --- surface-only forms ------------------------------------------------------------


class Derived(Thread):
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Await(Derived):
    signal: SignalName


@dataclass(frozen=True, slots=True)
class Loop(Derived):
    body: Thread
    label: str = ""


@dataclass(frozen=True, slots=True)
class Now(Derived):
    body: Thread


@dataclass(frozen=True, slots=True)
class Pause(Derived):
    pass


@dataclass(frozen=True, slots=True)
class Exit(Derived):
    signal: SignalName


@dataclass(frozen=True, slots=True)
class Trap(Derived):
    signal: SignalName
    body: Thread


@dataclass(frozen=True, slots=True)
class Present(Derived):
    signal: SignalName
    then: Thread
    orelse: Thread = NIL


@dataclass(frozen=True, slots=True)
class Yield(Derived):
    pass


SurfaceTerm = Thread


@dataclass
class SurfaceDef:
    name: str
    params: tuple[SignalName, ...]
    body: SurfaceTerm
    line: int = 0
    col: int = 0


@dataclass
class SurfaceProgram:
    definitions: list[SurfaceDef] = field(default_factory=list)
    roots: list[SurfaceTerm] = field(default_factory=list)
    interface: list[SignalName] = field(default_factory=list)

    def interface_set(self) -> frozenset[SignalName]:
        return frozenset(self.interface)


def surface_children(t: Thread) -> tuple[Thread, ...]:
    if isinstance(t, (Local, Spawn, When, Watch, Loop, Now, Trap)):
        return (t.body,)
    if isinstance(t, Seq):
        return (t.first, t.second)
    if isinstance(t, Present):
        return (t.then, t.orelse)
    return ()


def iter_surface(t: Thread) -> Iterator[Thread]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(surface_children(node)))


# --- lexing and parsing -------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0, filename: str = "<string>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename

    def diagnostic(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.message}"

    def __str__(self) -> str:
        return self.diagnostic()


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>//[^\n]*)|(?P<nil>\(\s*\))"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_#']*)|(?P<punct>[{}();,])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "name", "kw", "punct", "nil", "eof"
    text: str
    line: int
    col: int


def tokenize(source: str, filename: str = "<string>") -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1, filename)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "name":
            tokens.append(Token("kw" if text in KEYWORDS else "name", text, line, col))
        elif kind in ("punct", "nil"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str, filename: str) -> None:
        self.filename = filename
        self.tokens = tokenize(source, filename)
        self.i = 0
        self.interface_names = self._prescan_interface()

    def _prescan_interface(self) -> set[str]:
        names: set[str] = set()
        toks = self.tokens
        for k, tok in enumerate(toks):
            if tok.kind == "kw" and tok.text == "interface":
                j = k + 1
                while toks[j].kind == "name" or toks[j].text == ",":
                    if toks[j].kind == "name":
                        names.add(toks[j].text)
                    j += 1
        return names

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, self.filename)

    def expect(self, text: str) -> Token:
        tok = self.tok
        if tok.text != text or tok.kind == "name":
            found = tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "name":
            self.i += 1
            return True
        return False

    def ident(self, what: str = "identifier") -> Token:
        tok = self.tok
        if tok.kind != "name":
            found = tok.text or "end of input"
            raise self.error(f"expected {what}, found '{found}'")
        self.i += 1
        return tok

    def name(self) -> SignalName:
        text = self.ident("signal name").text
        return signal(text, INTERFACE if text in self.interface_names else PROGRAM_FREE)

    def arglist(self) -> list[SignalName]:
        if self.tok.kind == "nil":
            self.i += 1
            return []
        self.expect("(")
        args: list[SignalName] = []
        if self.tok.text != ")":
            args = self.names()
        self.expect(")")
        return args

    def names(self) -> list[SignalName]:
        out = [self.name()]
        while self.accept(","):
            out.append(self.name())
        return out

    # grammar
    def file(self) -> tuple[SurfaceProgram, list[tuple[str, int, Token]]]:
        sp = SurfaceProgram()
        calls: list[tuple[str, int, Token]] = []
        self.calls = calls
        seen_defs: dict[str, SurfaceDef] = {}
        while self.tok.kind != "eof":
            tok = self.tok
            if self.accept("interface"):
                for n in self.names():
                    if n in sp.interface:
                        raise self.error(f"interface signal '{n}' declared twice", tok)
                    sp.interface.append(n)
                self.expect(";")
            elif self.accept("def"):
                name_tok = self.ident("definition name")
                params = self.arglist()
                body = self.block()
                if name_tok.text in seen_defs:
                    raise self.error(f"duplicate definition '{name_tok.text}'", name_tok)
                if len(set(params)) != len(params):
                    raise self.error(f"repeated parameter in definition '{name_tok.text}'", name_tok)
                d = SurfaceDef(name_tok.text, tuple(params), body, name_tok.line, name_tok.col)
                seen_defs[d.name] = d
                sp.definitions.append(d)
            elif self.accept("run"):
                sp.roots.append(self.block())
            else:
                raise self.error(f"expected 'interface', 'def' or 'run', found '{tok.text}'")
        return sp, calls

    def block(self) -> Thread:
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            stmts.append(self.stmt())
            if not self.accept(";"):
                self.expect("}")
                break
        if not stmts:
            return NIL
        out = stmts[-1]
        for s in reversed(stmts[:-1]):
            out = Seq(s, out)
        return out

    def stmt(self) -> Thread:
        tok = self.tok
        if tok.kind == "nil":
            self.i += 1
            return NIL
        if tok.text == "{" and tok.kind == "punct":
            return self.block()
        if tok.kind == "name":
            self.i += 1
            args = self.arglist()
            self.calls.append((tok.text, len(args), tok))
            return Call(tok.text, tuple(args))
        if tok.kind != "kw":
            raise self.error(f"expected a statement, found '{tok.text or 'end of input'}'")
        self.i += 1
        kw = tok.text
        if kw == "emit":
            return Emit(self.name())
        if kw in ("local", "when", "watch"):
            binders = self.names()
            body = self.block()
            cls = {"local": Local, "when": When, "watch": Watch}[kw]
            for b in reversed(binders):
                body = cls(b, body)
            return body
        if kw == "thread":
            return Spawn(self.block())
        if kw == "await":
            return Await(self.name())
        if kw == "loop":
            return Loop(self.block())
        if kw == "now":
            return Now(self.block())
        if kw == "pause":
            return Pause()
        if kw == "exit":
            return Exit(self.name())
        if kw == "trap":
            s = self.name()
            return Trap(s, self.block())
        if kw == "present":
            s = self.name()
            then = self.block()
            orelse = self.block() if self.accept("else") else NIL
            return Present(s, then, orelse)
        if kw == "yield":
            return Yield()
        raise self.error(f"expected a statement, found '{kw}'", tok)


def _label_loops(t: Thread, fresh_label) -> Thread:
    if isinstance(t, Loop):
        label = fresh_label()
        return Loop(_label_loops(t.body, fresh_label), label)
    if isinstance(t, Local):
        return Local(t.binder, _label_loops(t.body, fresh_label))
    if isinstance(t, (When, Watch, Trap)):
        return type(t)(t.signal, _label_loops(t.body, fresh_label))
    if isinstance(t, (Spawn, Now)):
        return type(t)(_label_loops(t.body, fresh_label))
    if isinstance(t, Seq):
        return Seq(_label_loops(t.first, fresh_label), _label_loops(t.second, fresh_label))
    if isinstance(t, Present):
        return Present(t.signal, _label_loops(t.then, fresh_label), _label_loops(t.orelse, fresh_label))
    return t


def parse(source: str, filename: str = "<string>") -> SurfaceProgram:
    """Parse program text; raises :class:`ParseError` with a position."""
    parser = _Parser(source, filename)
    sp, calls = parser.file()
    arity = {d.name: len(d.params) for d in sp.definitions}
    for name, n, tok in calls:
        if name not in arity:
            raise ParseError(f"unknown identifier '{name}'", tok.line, tok.col, filename)
        if arity[name] != n:
            raise ParseError(
                f"'{name}' expects {arity[name]} argument(s), got {n}", tok.line, tok.col, filename
            )
    if not sp.roots:
        tok = parser.tokens[-1]
        raise ParseError("program has no 'run' block", tok.line, tok.col, filename)

    counter = iter(range(10**9))
    taken = set(arity)

    def fresh_label() -> str:
        while True:
            label = f"loop_{next(counter)}"
            if label not in taken:
                taken.add(label)
                return label

    for d in sp.definitions:
        d.body = _label_loops(d.body, fresh_label)
    sp.roots = [_label_loops(r, fresh_label) for r in sp.roots]

    for d in sp.definitions:
        loose = surface_free_signals(d.body) - set(d.params)
        if loose:
            shown = ", ".join(sorted(s.display for s in loose))
            raise ParseError(
                f"definition '{d.name}' uses signals {shown} that are not parameters", d.line, d.col, filename
            )
    return sp


# --- desugaring --------------------------------------------------------------------


def surface_free_signals(t: Thread) -> frozenset[SignalName]:
    if isinstance(t, (Await, Exit)):
        return frozenset((t.signal,))
    if isinstance(t, (Pause, Yield)):
        return frozenset()
    if isinstance(t, (Loop, Now, Spawn)):
        return surface_free_signals(t.body)
    if isinstance(t, Trap):
        return surface_free_signals(t.body) - {t.signal}
    if isinstance(t, Local):
        return surface_free_signals(t.body) - {t.binder}
    if isinstance(t, (When, Watch)):
        return surface_free_signals(t.body) | {t.signal}
    if isinstance(t, Present):
        return surface_free_signals(t.then) | surface_free_signals(t.orelse) | {t.signal}
    if isinstance(t, Seq):
        return surface_free_signals(t.first) | surface_free_signals(t.second)
    return free_signals(t)


class Desugarer:
    """Expands derived forms into kernel threads.

    Generated loop definitions are collected in ``defs``. Binders introduced
    here come from ``session`` and so never clash with user names.
    """

    def __init__(self, session: Optional[NameSession] = None) -> None:
        self.session = session or NameSession()
        self.defs: dict[str, Definition] = {}

    def fresh(self, hint: str) -> SignalName:
        return self.session.fresh(hint)

    def await_(self, s: SignalName) -> Thread:
        return When(s, NIL)

    def now(self, body: Thread) -> Thread:
        s = self.fresh("now")
        return Local(s, Seq(Emit(s), Watch(s, body)))

    def pause(self) -> Thread:
        s = self.fresh("pause")
        return Local(s, self.now(self.await_(s)))

    def present(self, s: SignalName, then: Thread, orelse: Thread) -> Thread:
        t = self.fresh("t")
        absent_branch = Spawn(Watch(s, Seq(self.pause(), Spawn(Seq(orelse, Emit(t))))))
        present_branch = self.now(Seq(self.await_(s), Spawn(Seq(then, Emit(t)))))
        return Local(t, Seq(absent_branch, Seq(present_branch, self.await_(t))))

    def yield_(self) -> Thread:
        s = self.fresh("y")
        return Local(s, Seq(Spawn(Emit(s)), self.await_(s)))

    def term(self, t: Thread) -> Thread:
        if isinstance(t, Await):
            return self.await_(t.signal)
        if isinstance(t, Loop):
            body = self.term(t.body)
            params = tuple(sorted(free_signals(body), key=SignalName.sort_key))
            label = t.label or f"loop_{len(self.defs)}"
            call = Call(label, params)
            self.defs[label] = Definition(params, Seq(body, call))
            return call
        if isinstance(t, Now):
            return self.now(self.term(t.body))
        if isinstance(t, Pause):
            return self.pause()
        if isinstance(t, Exit):
            return Seq(Emit(t.signal), self.pause())
        if isinstance(t, Trap):
            return Local(t.signal, Watch(t.signal, self.term(t.body)))
        if isinstance(t, Present):
            return self.present(t.signal, self.term(t.then), self.term(t.orelse))
        if isinstance(t, Yield):
            return self.yield_()
        if isinstance(t, Local):
            return Local(t.binder, self.term(t.body))
        if isinstance(t, Spawn):
            return Spawn(self.term(t.body))
        if isinstance(t, When):
            return When(t.signal, self.term(t.body))
        if isinstance(t, Watch):
            return Watch(t.signal, self.term(t.body))
        if isinstance(t, Seq):
            return Seq(self.term(t.first), self.term(t.second))
        if isinstance(t, (Nil, Emit, Call)):
            return t
        raise TypeError(f"unknown surface term {t!r}")


def desugar_term(t: Thread, session: Optional[NameSession] = None) -> tuple[Thread, DefTable]:
    """Desugar a single surface term; returns the kernel term and loop definitions."""
    d = Desugarer(session)
    out = d.term(t)
    return out, DefTable(d.defs)


def desugar(sp: SurfaceProgram, session: Optional[NameSession] = None) -> Program:
    d = Desugarer(session)
    user_defs = {sd.name: Definition(sd.params, d.term(sd.body)) for sd in sp.definitions}
    roots = tuple(d.term(r) for r in sp.roots)
    try:
        defs = DefTable(user_defs).merged(d.defs)
    except DefinitionError as exc:
        raise ParseError(str(exc)) from exc
    return Program(roots, defs)


def compile_source(source: str, filename: str = "<string>") -> tuple[Program, frozenset[SignalName]]:
    """Parse and desugar; returns the kernel program and its interface."""
    sp = parse(source, filename)
    return desugar(sp), sp.interface_set()


def is_kernel(t: Thread) -> bool:
    return not any(isinstance(n, Derived) for n in iter_surface(t))


# --- pretty printing ---------------------------------------------------------------


def _block(t: Thread) -> str:
    inner = pretty_term(t)
    return "{ " + inner + " }"


def pretty_term(t: Thread) -> str:
    if isinstance(t, Nil):
        return "()"
    if isinstance(t, Emit):
        return f"emit {t.signal}"
    if isinstance(t, Local):
        return f"local {t.binder} {_block(t.body)}"
    if isinstance(t, Spawn):
        return f"thread {_block(t.body)}"
    if isinstance(t, When):
        return f"when {t.signal} {_block(t.body)}"
    if isinstance(t, Watch):
        return f"watch {t.signal} {_block(t.body)}"
    if isinstance(t, Call):
        return f"{t.name}({', '.join(map(str, t.args))})"
    if isinstance(t, Seq):
        first = _block(t.first) if isinstance(t.first, Seq) else pretty_term(t.first)
        return f"{first}; {pretty_term(t.second)}"
    if isinstance(t, Await):
        return f"await {t.signal}"
    if isinstance(t, Loop):
        return f"loop {_block(t.body)}"
    if isinstance(t, Now):
        return f"now {_block(t.body)}"
    if isinstance(t, Pause):
        return "pause"
    if isinstance(t, Exit):
        return f"exit {t.signal}"
    if isinstance(t, Trap):
        return f"trap {t.signal} {_block(t.body)}"
    if isinstance(t, Present):
        text = f"present {t.signal} {_block(t.then)}"
        if not isinstance(t.orelse, Nil):
            text += f" else {_block(t.orelse)}"
        return text
    if isinstance(t, Yield):
        return "yield"
    raise TypeError(f"cannot print {t!r}")


def _sorted_names(names) -> list[str]:
    return sorted(str(n) for n in names)


def pretty_print(
    x: Union[Program, SurfaceProgram, Thread],
    interface: Optional[frozenset[SignalName]] = None,
) -> str:
    """Render a program or thread as parseable text."""
    if isinstance(x, Thread):
        return pretty_term(x)
    lines = []
    if isinstance(x, SurfaceProgram):
        names = [str(n) for n in x.interface]
        defs = [(d.name, d.params, d.body) for d in x.definitions]
        roots = list(x.roots)
    elif isinstance(x, Program):
        names = _sorted_names(interface or ())
        defs = [(name, d.params, d.body) for name, d in x.defs.items()]
        roots = list(x.threads)
    else:
        raise TypeError(f"cannot print {x!r}")
    if names:
        lines.append(f"interface {', '.join(names)};")
    for name, params, body in defs:
        lines.append(f"def {name}({', '.join(map(str, params))}) {_block(body)}")
    for r in roots:
        lines.append(f"run {_block(r)}")
    return "\n".join(lines) + "\n"


def signals_from_text(text: str) -> frozenset[SignalName]:
    """Parse one input-script line: comma separated signal names."""
    parts = [p.strip() for p in text.split(",")]
    return frozenset(signal(p, INTERFACE) for p in parts if p)


def interface_lookup(interface: frozenset[SignalName]) -> Mapping[str, SignalName]:
    return {s.display: s for s in interface}

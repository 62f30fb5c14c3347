"""Acceptance criteria, one test each.

Every criterion prints a single ``PASS``/``FAIL`` line. Run directly with
``python tests/test_acceptance.py`` or through pytest, where the lines are
repeated in the terminal summary.
"""

from __future__ import annotations

import random
import time

import numpy as np
import pytest

from reactive_kernel.analysis import (
    InternalDisagreement,
    check_determinism,
    check_equivalence,
    dynamic_reactivity_probe,
    static_reactivity_check,
)
from reactive_kernel.cellular import grid_from_outputs, rule90_oracle, rule90_source
from reactive_kernel.cli import corpus_dir, corpus_entries, corpus_expected_exit, parse_input_script
from reactive_kernel.core import (
    NIL,
    Call,
    Definition,
    DefTable,
    Emit,
    Local,
    Seq,
    Spawn,
    Watch,
    When,
    interface_signal,
    signal,
)
from reactive_kernel.generate import random_surface
from reactive_kernel.scheduler import RoundRobin, SeededRandom
from reactive_kernel.semantics import Machine, SignalEnv, eval_thread, initial_env, io_step
from reactive_kernel.syntax import SurfaceProgram, compile_source, desugar, parse

RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    RESULTS.append(line)
    print(line)


def interface_of(*names):
    return frozenset(interface_signal(n) for n in names)


def outputs_for(src: str, script: list) -> list[frozenset]:
    p, interface = compile_source(src)
    lookup = {s.display: s for s in interface}
    m = Machine(interface, p)
    outs = []
    for names in script:
        o, m = io_step(m, frozenset(lookup[n] for n in names))
        outs.append(frozenset(s.display for s in o))
    return outs


# --- 1. rule conformance ------------------------------------------------------------

a, b, s, t = (signal(n) for n in "abst")
A_EMIT = DefTable({"A": Definition((signal("x"),), Emit(signal("x")))})


def env(absent=(), present=()):
    return SignalEnv.absent(absent, present)


# name, thread, defs, start env, expected (residual, present, absent, spawned);
# residual/env entries may be callables of the single fresh name
RULES = [
    ("T1 nil", NIL, None, env(), (NIL, set(), set(), ())),
    ("T2 emit", Emit(s), None, env([s]), (NIL, {s}, set(), ())),
    (
        "T3 local",
        Local(s, When(s, Emit(a))),
        None,
        env([a]),
        (lambda f: When(f, Emit(a)), set(), lambda f: {a, f}, ()),
    ),
    ("T4 thread", Spawn(Emit(a)), None, env([a]), (NIL, set(), {a}, (Emit(a),))),
    ("T5 call", Call("A", (a,)), A_EMIT, env([a]), (NIL, {a}, set(), ())),
    ("T6 when absent", When(s, Emit(a)), None, env([s, a]), (When(s, Emit(a)), set(), {s, a}, ())),
    ("T7 when terminates", When(s, Emit(a)), None, env([a], [s]), (NIL, {s, a}, set(), ())),
    (
        "T8 when suspends",
        When(s, Seq(Emit(a), When(t, Emit(b)))),
        None,
        env([a, t, b], [s]),
        (When(s, When(t, Emit(b))), {s, a}, {t, b}, ()),
    ),
    ("T9 watch terminates", Watch(s, Emit(a)), None, env([a], [s]), (NIL, {s, a}, set(), ())),
    (
        "T10 watch suspends",
        Watch(s, Seq(Emit(a), When(t, NIL))),
        None,
        env([s, a, t]),
        (Watch(s, When(t, NIL)), {a}, {s, t}, ()),
    ),
    ("T11 seq continues", Seq(Emit(a), Emit(b)), None, env([a, b]), (NIL, {a, b}, set(), ())),
    (
        "T12 seq suspends",
        Seq(Seq(Emit(a), When(t, NIL)), Emit(b)),
        None,
        env([a, b, t]),
        (Seq(When(t, NIL), Emit(b)), {a}, {b, t}, ()),
    ),
]


def criterion_1():
    start = time.perf_counter()
    failures = []
    for name, thread, defs, e0, (residual, present, absent, spawned) in RULES:
        r = eval_thread(thread, e0, defs)
        fresh = [n for n in r.env.domain() if n.is_fresh]
        f = fresh[0] if len(fresh) == 1 else None
        want_residual = residual(f) if callable(residual) else residual
        want_absent = absent(f) if callable(absent) else absent
        want_env = SignalEnv.absent(want_absent, present)
        if r.residual != want_residual or r.env != want_env or sorted(map(repr, r.spawned)) != sorted(map(repr, spawned)):
            failures.append(name)
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 1.0
    detail = f"{len(RULES) - len(failures)}/{len(RULES)} rules, {elapsed * 1000:.1f} ms"
    if failures:
        detail += f", failing: {', '.join(failures)}"
    return ok, detail


# --- 2. stacked watch --------------------------------------------------------------

STACKED = (
    "interface s1, s2, r1, t2, t3;\n"
    "run { watch s1 { watch s2 { pause; emit r1 }; emit t2 }; emit t3 }\n"
)
# hand derivation of the second instant: outer abort skips to t3, inner abort
# resumes with t2, no abort lets the paused body emit r1 and fall through
STACKED_EXPECTED = {
    "s1 present": ({"s1"}, {"t3"}),
    "s1 absent, s2 present": ({"s2"}, {"t2", "t3"}),
    "both absent": (set(), {"r1", "t2", "t3"}),
}


def criterion_2():
    bad = []
    for label, (first, second) in STACKED_EXPECTED.items():
        got = outputs_for(STACKED, [first, ()])
        if got != [frozenset(first), frozenset(second)]:
            bad.append(f"{label}: {[sorted(x) for x in got]}")
    return not bad, "3/3 runs" if not bad else "; ".join(bad)


# --- 3. determinism ----------------------------------------------------------------


def corpus_cases():
    for name in corpus_entries():
        src = (corpus_dir() / f"{name}.rk").read_text()
        p, interface = compile_source(src)
        script_path = corpus_dir() / f"{name}.in"
        script = parse_input_script(script_path.read_text()) if script_path.is_file() else []
        if corpus_expected_exit(name) != 0:
            # diverges on its scripted input; check it on the inputs it survives
            script = []
        lookup = {n.display: n for n in interface}
        yield name, p, interface, [frozenset(lookup[n.display] for n in xs) for xs in script]


def criterion_3():
    failures = []
    count = 0
    for name, p, interface, script in corpus_cases():
        v = check_determinism(p, interface, script, n_schedules=10, depth=5)
        count += 1
        if not v.passed:
            failures.append(f"{name}: {v}")
    rng = random.Random(2024)
    for k in range(50):
        sp = random_surface(rng, max_depth=6, n_signals=4)
        interface = sp.interface_set()
        ins = [frozenset(n for n in interface if rng.random() < 0.4) for _ in range(5)]
        v = check_determinism(desugar(sp), interface, ins, n_schedules=10, depth=5)
        count += 1
        if not v.passed:
            failures.append(f"random #{k}: {v}")
    return not failures, f"{count - len(failures)}/{count} programs, 10 seeds x 5 instants" + (
        f", failing: {failures[:3]}" if failures else ""
    )


# --- 4. trace and bisimulation agree -----------------------------------------------


def _spawned_roots(sp: SurfaceProgram) -> SurfaceProgram:
    return SurfaceProgram(sp.definitions, [Spawn(r) for r in sp.roots], sp.interface)


def _nil_tail(sp: SurfaceProgram) -> SurfaceProgram:
    return SurfaceProgram(sp.definitions, [Seq(r, NIL) for r in sp.roots], sp.interface)


def equivalence_pairs(rng: random.Random, n: int):
    """Pairs over one interface of three signals: copies, rewrites, and unrelated programs."""
    for k in range(n):
        sp = random_surface(rng, max_depth=4, n_signals=4, n_interface=3)
        mode = k % 4
        if mode == 0:
            other = sp
        elif mode == 1:
            other = _spawned_roots(sp)
        elif mode == 2:
            other = _nil_tail(sp)
        else:
            other = random_surface(rng, max_depth=4, n_signals=4, n_interface=3)
        yield desugar(sp), desugar(other), sp.interface_set()


def criterion_4():
    rng = random.Random(77)
    agree = equivalent = 0
    disagreements = []
    pairs = 120
    for p1, p2, interface in equivalence_pairs(rng, pairs):
        try:
            v = check_equivalence(p1, p2, interface, depth=3)
        except InternalDisagreement as exc:
            disagreements.append(str(exc))
            continue
        agree += 1
        equivalent += v.equivalent
    detail = f"{agree}/{pairs} pairs agree ({equivalent} equivalent, {agree - equivalent} distinguished)"
    return agree == pairs and pairs >= 100, detail + (f", first disagreement: {disagreements[0]}" if disagreements else "")


# --- 5. reactivity pathologies -----------------------------------------------------

AWAIT_LOOP = "interface s;\ndef A(s) { await s; A(s) }\nrun { A(s) }\n"
WATCH_GROWTH = "interface tick;\ndef A(tick) { local s { watch s { emit tick; pause; A(tick) } } }\nrun { A(tick) }\n"


def criterion_5():
    details = []
    ok = True

    start = time.perf_counter()
    sp = parse(AWAIT_LOOP)
    static = static_reactivity_check(sp)
    dyn = dynamic_reactivity_probe(desugar(sp), sp.interface_set(), instants=3, fuel_per_instant=10**6)
    took = time.perf_counter() - start
    ok &= static.verdict == "potentially_nonreactive" and str(dyn) == "diverged_at(1)"
    ok &= dyn.diverging_inputs == interface_of("s") and took < 5
    details.append(f"await loop: {static}, {dyn} under {{s}} in {took:.2f} s")

    start = time.perf_counter()
    sp = parse(WATCH_GROWTH)
    dyn = dynamic_reactivity_probe(desugar(sp), sp.interface_set(), instants=20)
    took = time.perf_counter() - start
    depths = [d for _, d in dyn.watch_depth_trend]
    ok &= len(depths) >= 20 and dyn.watch_growth and took < 5
    details.append(f"watch growth: {dyn}, depths {depths[0]}..{depths[-1]} strictly increasing, {took:.2f} s")
    return ok, "; ".join(details)


# --- 6. derived constructs ---------------------------------------------------------

DERIVED = {
    "pause": (
        "interface a, b;\nrun { emit a; pause; emit b }\n",
        [(), (), ()],
        [{"a"}, {"b"}, set()],
    ),
    "trap/exit": (
        "interface a, b, c, d;\nrun { trap e { emit a; pause; emit b; exit e; emit c }; emit d }\n",
        [(), (), (), ()],
        [{"a"}, {"b"}, {"d"}, set()],
    ),
    "present then": (
        "interface s, a, b;\nrun { present s { emit a } else { emit b } }\n",
        [("s",), (), ()],
        [{"s", "a"}, set(), set()],
    ),
    "present else": (
        "interface s, a, b;\nrun { present s { emit a } else { emit b } }\n",
        [(), (), ()],
        [set(), {"b"}, set()],
    ),
}


def yield_order() -> list[str]:
    p, interface = compile_source("interface a, b;\nrun { yield; emit a }\nrun { emit b }\n")
    names = {n.display: n for n in interface}
    order: list[str] = []

    def watch(_occ, e):
        order.extend(k for k in ("a", "b") if e[names[k]] and k not in order)

    io_step(Machine(interface, p), (), RoundRobin(), observer=watch)
    return order


def criterion_6():
    bad = []
    for label, (src, script, expected) in DERIVED.items():
        got = outputs_for(src, script)
        if got != [frozenset(x) for x in expected]:
            bad.append(f"{label}: {[sorted(x) for x in got]}")
    order = yield_order()
    if order != ["b", "a"]:
        bad.append(f"yield order {order}")
    return not bad, "pause, trap/exit, present (both branches), yield b before a" if not bad else "; ".join(bad)


# --- 7. cellular automaton ---------------------------------------------------------


def criterion_7():
    cells, generations = 32, 16
    initial = np.zeros(cells, dtype=bool)
    initial[[5, 6, 16]] = True
    expected = rule90_oracle(initial, generations)
    start = time.perf_counter()
    p, interface = compile_source(rule90_source(initial))
    m = Machine(interface, p)
    outs = []
    for _ in range(generations):
        o, m = io_step(m, frozenset())
        outs.append(o)
    took = time.perf_counter() - start
    got = grid_from_outputs(outs, cells)
    mismatches = int((got != expected).sum())
    return mismatches == 0 and took < 10, f"{cells} cells x {generations} instants, {mismatches} mismatching cells, {took:.2f} s"


# --- 8. monotonicity and fresh environments ----------------------------------------


def criterion_8():
    rng = random.Random(8)
    instants = violations = 0
    while instants < 1000:
        sp = random_surface(rng, max_depth=6, n_signals=4)
        interface = sp.interface_set()
        m = Machine(interface, desugar(sp))
        for _ in range(5):
            inputs = frozenset(n for n in interface if rng.random() < 0.5)
            expected_start = initial_env(interface, m.program, inputs)
            snapshots: list[SignalEnv] = []
            _, m = io_step(m, inputs, SeededRandom(rng.randrange(2**32)), observer=lambda occ, e: snapshots.append(e))
            instants += 1
            if snapshots[0] != expected_start:
                violations += 1
            for before, after in zip(snapshots, snapshots[1:]):
                if not before.domain() <= after.domain() or not before.present() <= after.present():
                    violations += 1
    return violations == 0, f"{violations} violations over {instants} instants"


CRITERIA = [
    (1, "rule conformance T1-T12", criterion_1),
    (2, "stacked-watch resumption", criterion_2),
    (3, "determinism under random schedules", criterion_3),
    (4, "trace and bisimulation verdicts agree", criterion_4),
    (5, "reactivity pathologies", criterion_5),
    (6, "derived-construct goldens", criterion_6),
    (7, "cellular automaton matches oracle", criterion_7),
    (8, "monotone signals, fresh environment per instant", criterion_8),
]


@pytest.mark.parametrize("number, title, check", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, check):
    ok, detail = check()
    report(number, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for number, title, check in CRITERIA:
        report(number, title, *check())

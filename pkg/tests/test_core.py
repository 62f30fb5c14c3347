from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reactive_kernel.core import (
    NIL,
    Call,
    Definition,
    DefinitionError,
    DefTable,
    Emit,
    Local,
    NameSession,
    Program,
    Seq,
    Spawn,
    Watch,
    When,
    fresh,
    free_signals,
    program,
    signal,
    substitute,
    watch_depth,
)

a, b, s, s1, s2, x = (signal(n) for n in ("a", "b", "s", "s1", "s2", "x"))


def test_free_signals_examples():
    assert free_signals(Emit(s)) == {s}
    assert free_signals(Local(s, Emit(s))) == set()
    assert free_signals(Seq(When(s1, NIL), Emit(s2))) == {s1, s2}


def test_free_signals_of_program_is_union():
    p = program(Emit(a), Local(s, When(s, Emit(b))))
    assert free_signals(p) == {a, b}


def test_substitute_examples():
    s_ = signal("s'")
    assert substitute(Emit(s), {s: s_}) == Emit(s_)
    assert substitute(Local(s, Emit(s)), {s: s_}) == Local(s, Emit(s))
    assert substitute(When(s, Emit(x)), {x: s}) == When(s, Emit(s))


def test_substitute_avoids_capture():
    # renaming x to s under a binder for s must not capture
    t = Local(s, Seq(Emit(s), Emit(x)))
    out = substitute(t, {x: s})
    assert isinstance(out, Local)
    assert out.binder != s
    assert free_signals(out) == {s}


def test_fresh_names_are_distinct_and_fresh():
    session = NameSession()
    got = [fresh(session, "s") for _ in range(50)]
    assert len(set(got)) == 50
    assert all(n.is_fresh for n in got)
    assert signal("s") not in got


def test_two_sessions_never_collide():
    assert fresh(NameSession(), "s") != fresh(NameSession(), "s")


def test_program_is_a_multiset():
    p = program(Emit(a), Emit(a), NIL)
    assert len(p) == 3
    assert p.count(Emit(a)) == 2
    assert p == program(NIL, Emit(a), Emit(a))
    assert p != program(Emit(a), NIL)
    assert p.remove_one(Emit(a)).count(Emit(a)) == 1


def test_program_must_be_non_empty():
    with pytest.raises(ValueError):
        Program(())


def test_deftable_rejects_open_bodies_and_repeated_params():
    with pytest.raises(DefinitionError):
        DefTable({"A": Definition((x,), Emit(b))})
    with pytest.raises(DefinitionError):
        DefTable({"A": Definition((x, x), Emit(x))})
    ok = DefTable({"A": Definition((x,), Seq(Emit(x), Call("A", (x,))))})
    assert "A" in ok


def test_watch_depth():
    assert watch_depth(NIL) == 0
    assert watch_depth(Watch(a, Seq(Watch(b, NIL), Emit(a)))) == 2
    assert watch_depth(Seq(Watch(a, NIL), Watch(b, NIL))) == 1


# hypothesis: random kernel terms over a small alphabet

ALPHABET = [signal(n) for n in "abcde"]
name_st = st.sampled_from(ALPHABET)


def _terms():
    leaves = st.one_of(st.just(NIL), name_st.map(Emit))
    return st.recursive(
        leaves,
        lambda sub: st.one_of(
            st.tuples(name_st, sub).map(lambda p: Local(*p)),
            sub.map(Spawn),
            st.tuples(name_st, sub).map(lambda p: When(*p)),
            st.tuples(name_st, sub).map(lambda p: Watch(*p)),
            st.tuples(sub, sub).map(lambda p: Seq(*p)),
        ),
        max_leaves=12,
    )


@settings(max_examples=200, deadline=None)
@given(_terms(), st.permutations(ALPHABET))
def test_injective_substitution_maps_free_signals(t, perm):
    mapping = dict(zip(ALPHABET, perm))
    assert free_signals(substitute(t, mapping)) == {mapping[n] for n in free_signals(t)}


@settings(max_examples=200, deadline=None)
@given(_terms())
def test_substitution_disjoint_from_free_signals_is_identity(t):
    others = {n: signal("z" + n.display) for n in ALPHABET if n not in free_signals(t)}
    assert substitute(t, others) == t


@settings(max_examples=100, deadline=None)
@given(st.lists(_terms(), min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_program_equality_ignores_order(ts, rnd):
    shuffled = list(ts)
    rnd.shuffle(shuffled)
    assert program(*ts) == program(*shuffled)
    assert Counter(program(*ts).threads) == Counter(ts)

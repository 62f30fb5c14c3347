import pytest

from reactive_kernel.renaming import equal_up_to_renaming
from reactive_kernel.scheduler import (
    Replay,
    ReplayDivergence,
    RoundRobin,
    SeededRandom,
    format_log,
    make_scheduler,
    parse_log,
)
from reactive_kernel.semantics import Machine, initial_env, io_step, run_instant
from reactive_kernel.syntax import compile_source

from conftest import random_programs


def ready(*ids, stuck=()):
    return [(i, False) for i in ids] + [(i, True) for i in stuck]


def test_all_stuck_gives_none():
    for sched in (RoundRobin(), SeededRandom(3), Replay([0])):
        assert sched.pick(ready(stuck=(0, 1))) is None


def test_round_robin_rotates():
    rr = RoundRobin()
    picks = [rr.pick(ready(1, 2, 3)) for _ in range(5)]
    assert picks == [1, 2, 3, 1, 2]


def test_round_robin_skips_stuck_and_resets_per_instant():
    rr = RoundRobin()
    assert rr.pick(ready(0, 2, stuck=(1,))) == 0
    assert rr.pick(ready(2, stuck=(0, 1))) == 2
    rr.begin_instant()
    assert rr.pick(ready(0, 1, 2)) == 0


def test_seeded_random_is_reproducible():
    snap = ready(*range(10))
    a, b = SeededRandom(42), SeededRandom(42)
    assert [a.pick(snap) for _ in range(20)] == [b.pick(snap) for _ in range(20)]


def test_make_scheduler():
    assert isinstance(make_scheduler("rr"), RoundRobin)
    assert isinstance(make_scheduler("rand", 5), SeededRandom)
    assert isinstance(make_scheduler("rr", replay=[0]), Replay)
    with pytest.raises(ValueError):
        make_scheduler("fifo")


def test_log_round_trip():
    assert parse_log(format_log([0, 3, 1])) == [0, 3, 1]
    assert format_log([2, 0]) == "2\n0\n"


def test_replay_divergence():
    with pytest.raises(ReplayDivergence):
        Replay([5]).pick(ready(0, 1))
    with pytest.raises(ReplayDivergence):
        Replay([]).pick(ready(0))


def test_replay_reproduces_outcome():
    for p, interface in random_programs(20, seed=5):
        e = initial_env(interface, p, ())
        first = run_instant(p, e, SeededRandom(9))
        again = run_instant(p, e, Replay(first.picks))
        assert again.picks == first.picks
        assert again.emitted & interface == first.emitted & interface
        assert equal_up_to_renaming(again.program, first.program, interface) is not None


class Recording(RoundRobin):
    def __init__(self):
        super().__init__()
        self.history = []

    def pick(self, snapshot):
        occ = super().pick(snapshot)
        self.history.append(({i for i, stuck in snapshot if not stuck}, occ))
        return occ


def fairness_violations(history):
    """Occurrences that suspended and came back before a peer ready at suspension time ran."""
    bad = 0
    for k in range(len(history) - 1):
        _, x = history[k]
        after, _ = history[k + 1]
        if x is None or x in after:
            continue
        owed = set(after)
        for snap, occ in history[k + 1:]:
            if occ == x:
                bad += bool(owed)
                break
            owed.discard(occ)
    return bad


def test_fairness_helper_detects_queue_jumping():
    assert fairness_violations([({0, 1}, 0), ({1, 2}, 2), ({0, 1}, 0)]) == 1
    assert fairness_violations([({0, 1}, 0), ({1, 2}, 1), ({0, 2}, 2), ({0}, 0)]) == 0


def test_round_robin_is_fair_on_random_programs():
    for p, interface in random_programs(60, seed=21):
        m = Machine(interface, p)
        for _ in range(3):
            rec = Recording()
            _, m = io_step(m, interface, rec)
            assert fairness_violations(rec.history) == 0


def test_yield_lets_peer_run_first():
    p, interface = compile_source("interface a, b; run { yield; emit a } run { emit b }")
    order = []
    m = Machine(interface, p)
    names = {n.display: n for n in interface}
    io_step(m, (), RoundRobin(), observer=lambda occ, e: order.extend(
        k for k in ("a", "b") if e[names[k]] and k not in order))
    assert order == ["b", "a"]

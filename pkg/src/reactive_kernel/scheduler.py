"""Scheduling policies for picking the next thread occurrence within an instant.

A snapshot is a sequence of ``(occurrence_id, stuck)`` pairs in creation
order. ``pick`` returns the id of a non-stuck occurrence, or ``None`` when
every occurrence is stuck.
"""

from __future__ import annotations

import random
from collections.abc import Iterable, Sequence
from typing import Optional

Snapshot = Sequence[tuple[int, bool]]


class ReplayDivergence(RuntimeError):
    pass


class Scheduler:
    policy = "abstract"

    def begin_instant(self) -> None:
        """Called by the instant loop before its first pick."""

    def pick(self, snapshot: Snapshot) -> Optional[int]:
        raise NotImplementedError


class RoundRobin(Scheduler):
    """Rotates over occurrences in creation order, starting after the last pick.

    If an occurrence suspends, every occurrence ready at that moment is picked
    before it comes round again.
    """

    policy = "round_robin"

    def __init__(self) -> None:
        self.last: Optional[int] = None

    def begin_instant(self) -> None:
        self.last = None

    def pick(self, snapshot: Snapshot) -> Optional[int]:
        ready = [occ for occ, stuck in snapshot if not stuck]
        if not ready:
            return None
        if self.last is not None:
            for occ in ready:
                if occ > self.last:
                    self.last = occ
                    return occ
        self.last = ready[0]
        return ready[0]


class SeededRandom(Scheduler):
    """Uniform choice among ready occurrences.

    Uses :class:`random.Random` (Mersenne Twister), whose output for a given
    integer seed is fixed across platforms and Python versions.
    """

    policy = "seeded_random"

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self.rng = random.Random(self.seed)

    def pick(self, snapshot: Snapshot) -> Optional[int]:
        ready = [occ for occ, stuck in snapshot if not stuck]
        if not ready:
            return None
        return ready[self.rng.randrange(len(ready))]


class Replay(Scheduler):
    """Replays a recorded sequence of picks, spanning any number of instants."""

    policy = "replay"

    def __init__(self, log: Iterable[int]) -> None:
        self.log = list(log)
        self.position = 0

    def pick(self, snapshot: Snapshot) -> Optional[int]:
        ready = {occ for occ, stuck in snapshot if not stuck}
        if not ready:
            return None
        if self.position >= len(self.log):
            raise ReplayDivergence(f"log exhausted after {self.position} picks with occurrences still ready")
        occ = self.log[self.position]
        if occ not in ready:
            raise ReplayDivergence(f"pick {self.position}: occurrence {occ} is not ready")
        self.position += 1
        return occ

    @property
    def finished(self) -> bool:
        return self.position == len(self.log)


def make_scheduler(policy: str = "rr", seed: int = 0, replay: Optional[Iterable[int]] = None) -> Scheduler:
    if replay is not None:
        return Replay(replay)
    if policy in ("rr", "round_robin"):
        return RoundRobin()
    if policy in ("rand", "seeded_random"):
        return SeededRandom(seed)
    raise ValueError(f"unknown scheduling policy {policy!r}")


def format_log(picks: Iterable[int]) -> str:
    return "".join(f"{occ}\n" for occ in picks)


def parse_log(text: str) -> list[int]:
    return [int(line) for line in text.split() if line.strip()]

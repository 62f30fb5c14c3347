"""A one-dimensional rule-90 cellular automaton written as a reactive program.

Each cell is a thread. While alive it emits its interface signal ``cK``; in
the same instant four candidate continuations are started, one per
combination of neighbour states, and exactly one survives to the next
instant. The grid at instant ``k`` is generation ``k - 1``.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

CELL_DEFS = """\
def Alive(me, l, r) { emit me; Step(me, l, r) }
def Dead(me, l, r) { Step(me, l, r) }
def Step(me, l, r) {
  thread { now { await l; await r; thread { pause; Dead(me, l, r) } } };
  thread { now { await l; thread { watch r { pause; thread { Alive(me, l, r) } } } } };
  thread { now { await r; thread { watch l { pause; thread { Alive(me, l, r) } } } } };
  watch l { watch r { pause; thread { Dead(me, l, r) } } }
}
"""


def cell_name(i: int) -> str:
    return f"c{i}"


def rule90_source(initial: Sequence[bool]) -> str:
    """Program text for a ring of ``len(initial)`` cells."""
    n = len(initial)
    if n < 3:
        raise ValueError("need at least three cells")
    lines = [f"interface {', '.join(cell_name(i) for i in range(n))};", CELL_DEFS]
    for i, alive in enumerate(initial):
        args = ", ".join(cell_name(j % n) for j in (i, i - 1, i + 1))
        lines.append(f"run {{ {'Alive' if alive else 'Dead'}({args}) }}")
    return "\n".join(lines) + "\n"


def rule90_oracle(initial: Sequence[bool], generations: int) -> np.ndarray:
    """Plain sequential rule 90 on a ring: row ``g`` is generation ``g``."""
    grid = np.zeros((generations, len(initial)), dtype=bool)
    row = np.asarray(initial, dtype=bool)
    for g in range(generations):
        grid[g] = row
        row = np.roll(row, 1) ^ np.roll(row, -1)
    return grid


def grid_from_outputs(outputs: Sequence[frozenset], n: int) -> np.ndarray:
    """Rows of cell states read off per-instant output sets."""
    grid = np.zeros((len(outputs), n), dtype=bool)
    for k, out in enumerate(outputs):
        names = {str(s) for s in out}
        for i in range(n):
            grid[k, i] = cell_name(i) in names
    return grid

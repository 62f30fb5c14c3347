"""
Rule 90 as a thread per cell
============================

Each cell of a ring is a reactive thread that emits its own signal while
alive and listens to its two neighbours. The reactive grid is compared with
a plain numpy implementation.
"""

import numpy as np

from reactive_kernel.cellular import grid_from_outputs, rule90_oracle, rule90_source
from reactive_kernel.semantics import Machine, io_step
from reactive_kernel.syntax import compile_source

cells, generations = 32, 16
initial = np.zeros(cells, dtype=bool)
initial[16] = True

program, interface = compile_source(rule90_source(initial))
m = Machine(interface, program)
outputs = []
for _ in range(generations):
    out, m = io_step(m, frozenset())
    outputs.append(out)

grid = grid_from_outputs(outputs, cells)
for row in grid:
    print("".join("#" if x else "." for x in row))

# %%
print("matches numpy:", np.array_equal(grid, rule90_oracle(initial, generations)))
print("threads after the run:", len(m.program))

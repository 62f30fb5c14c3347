"""
Comparing programs by their traces
==================================

Two programs are compared on every input sequence up to a depth, once by
collecting trace sets and once by walking both state spaces in lockstep.
The two answers are checked against each other.
"""

from reactive_kernel.analysis import bounded_traces, check_equivalence
from reactive_kernel.syntax import compile_source


def compare(src1, src2, depth=3):
    p1, interface = compile_source(src1)
    p2, _ = compile_source(src2)
    v = check_equivalence(p1, p2, interface, depth)
    print(v)


# %%
# ``emit a`` and ``pause; emit a`` differ on the very first instant.
compare("interface a; run { emit a }", "interface a; run { pause; emit a }")

# %%
# A private signal handed over through a spawned thread is invisible outside.
compare(
    "interface a; run { local x { emit x; when x { emit a } } }",
    "interface a; run { local y { thread { emit y }; await y; emit a } }",
)

# %%
# An extra pause before the await is only caught at the second instant.
compare(
    "interface a, s; run { pause; await s; emit a }",
    "interface a, s; run { pause; pause; await s; emit a }",
)

# %%
# The trace set itself, for a one-signal program.
p, interface = compile_source("interface a; run { pause; emit a }")
for t in sorted(bounded_traces(p, interface, 2), key=str):
    print(t)

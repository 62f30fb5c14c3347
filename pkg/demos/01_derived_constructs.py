"""
Derived constructs over the kernel
==================================

``pause``, ``trap``/``exit``, ``present`` and ``yield`` are all sugar over
the kernel instructions. Each one is run here for a few instants and its
trace printed after the kernel term it expands to.
"""

from reactive_kernel.cli import trace_line
from reactive_kernel.semantics import Machine, io_step
from reactive_kernel.syntax import compile_source, pretty_print


def show(title, source, script):
    program, interface = compile_source(source)
    lookup = {s.display: s for s in interface}
    print(f"## {title}")
    print(pretty_print(program, interface))
    m = Machine(interface, program)
    for k, names in enumerate(script, start=1):
        inputs = frozenset(lookup[n] for n in names)
        outputs, m = io_step(m, inputs)
        print(trace_line(k, inputs, outputs))
    print()


# %%
# ``pause`` is a fresh local signal that is awaited under a ``now``. The
# ``now`` body is killed at the end of the instant, so the rest of the thread
# starts over in the next one.
show("pause", "interface a, b; run { emit a; pause; emit b }", [(), (), ()])

# %%
# ``exit e`` emits ``e`` and pauses. The enclosing ``trap e`` is a ``watch``,
# so the body dies at the end of that instant and ``emit c`` never runs.
show(
    "trap / exit",
    "interface a, b, c, d; run { trap e { emit a; pause; emit b; exit e; emit c }; emit d }",
    [(), (), (), ()],
)

# %%
# ``present`` takes the first branch at once when its signal is there. The
# else branch only starts in the following instant.
present = "interface s, a, b; run { present s { emit a } else { emit b } }"
show("present, s given", present, [("s",), ()])
show("present, s missing", present, [(), ()])

# %%
# ``yield`` spawns an emitter and waits for it, handing the turn to any
# thread that is already ready. Outputs carry no order, so an observer
# records when each signal first appears.
source = "interface a, b; run { yield; emit a } run { emit b }"
show("yield", source, [()])
program, interface = compile_source(source)
names = {s.display: s for s in interface}
order = []
io_step(Machine(interface, program), (), observer=lambda occ, env: order.extend(
    k for k in ("a", "b") if env[names[k]] and k not in order))
print("emission order under round robin:", order)

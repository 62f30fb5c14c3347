"""
When an instant never ends
==========================

Two programs that go wrong in different ways. The first loops inside one
instant as soon as its input is present; a fuel budget turns that into a
verdict. The second is fine instant by instant, but every instant nests one
more ``watch``.
"""

from reactive_kernel.analysis import dynamic_reactivity_probe, static_reactivity_check
from reactive_kernel.syntax import desugar, parse

await_loop = parse("interface s; def A(s) { await s; A(s) } run { A(s) }")
print("static: ", static_reactivity_check(await_loop))
report = dynamic_reactivity_probe(desugar(await_loop), await_loop.interface_set(), instants=3, fuel_per_instant=100_000)
print("dynamic:", report, "inputs", sorted(s.display for s in report.diverging_inputs))

# %%
# A pause in the recursion makes the static check happy.
paused = parse("interface s; def A(s) { await s; pause; A(s) } run { A(s) }")
print("static: ", static_reactivity_check(paused))
print("dynamic:", dynamic_reactivity_probe(desugar(paused), paused.interface_set(), instants=5))

# %%
# Each recursive call sits under a fresh ``watch``. Nothing diverges, yet the
# nesting depth climbs by one every instant.
growth = parse("interface tick; def A(tick) { local s { watch s { emit tick; pause; A(tick) } } } run { A(tick) }")
report = dynamic_reactivity_probe(desugar(growth), growth.interface_set(), instants=12)
print("dynamic:", report)
print("watch depth per instant:", [d for _, d in report.watch_depth_trend])
print("flagged:", report.watch_growth)

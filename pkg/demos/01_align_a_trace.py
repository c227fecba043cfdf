"""Align one observed trace against a small process model.

The model: after `a`, activities `b` and `c` run in parallel (or the
shortcut `d` replaces both), then `e` closes the case.  The observed
trace <a, b, e> skipped `c`, so the best explanation costs exactly 1:
one model move for the missing activity.
"""

from flowalign import PetriNet, Trace, lp_align, move_table, product_for_trace

net = PetriNet.build(
    places=["p1", "p2", "p3", "p4", "p5", "p6"],
    transitions=["t1", "t2", "t3", "t4", "t5"],
    arcs=[
        ("p1", "t1"), ("t1", "p2"), ("t1", "p3"),
        ("p2", "t2"), ("p2", "t4"), ("p3", "t3"), ("p3", "t4"),
        ("t2", "p4"), ("t3", "p5"), ("t4", "p4"), ("t4", "p5"),
        ("p4", "t5"), ("p5", "t5"), ("t5", "p6"),
    ],
    labels={"t1": "a", "t2": "b", "t3": "c", "t4": "d", "t5": "e"},
    initial={"p1": 1},
    final={"p6": 1},
)

trace = Trace("claim-107", ("a", "b", "e"))
product = product_for_trace(net, trace)

alignment, stats = lp_align(product)

print(f"trace {trace.case_id}: {', '.join(trace.activities)}")
print(f"optimal cost: {alignment.total_cost}")
print(f"graph: {stats.rg_nodes} markings, {stats.rg_edges} firings")
print()
print(move_table(alignment))

# The trace-side projection of the alignment is always the input trace,
# and the model-side projection is a real execution of the net.
assert alignment.log_projection() == trace.activities
print("model execution used:", " -> ".join(alignment.model_projection()))

"""Variational inequality over a Minkowski sum of two intersections.

The feasible set is E1∩F1 + E2∩F2 in the plane: a segment plus a triangle.
The solver never forms the sum; each set is handled through its own
projections. The weak and strong variants are compared. The strong variant
is started from an anchor and heads for the zero nearest to it; it gets
there much more slowly, as the residual history shows.
"""

import numpy as np

from saddlesplit import Schedule, StateX, StopRule, fixtures, run

spec = fixtures.vi2()
image = lambda x: sum(spec.L[("B", i)].apply(x[spec.h_layout.slice(i)])
                      for i in spec.I)

rep = run(spec, Schedule(spec.I, spec.K), stop=StopRule(tol=1e-10))
print("weak:   ", rep.reason, rep.iterations, "steps")
print("  y =", image(rep.state.x.data))
for i in spec.I:
    print(f"  summand {i}:", rep.state.x[i])

n = spec.h_layout.total_dim + 3 * spec.g_layout.total_dim
x0 = StateX(spec.h_layout, spec.g_layout, np.full(n, 0.5))
rep = run(spec, Schedule(spec.I, spec.K), init=x0, variant="strong",
          stop=StopRule(tol=1e-8, max_iter=10_000, check_every=50,
                        record_every=1000))
print("strong: ", rep.reason, rep.iterations, "steps")
print("  y =", image(rep.state.x.data))

# residual history of the strong run
for row in rep.trace:
    print(f"  n = {row.n:6d}  kt = {row.kt:.2e}")

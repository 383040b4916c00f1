"""The three impact maps applied at one boundary configuration.

Builds a disk state whose front rim touches the elliptical wall and
compares the unconstrained specular bounce with the elastic and plastic
nonholonomic maps.
"""

import numpy as np

from nhbilliards import (
    PennyParams,
    PennyState,
    TableParams,
    elastic_impact,
    impact_chart,
    penny_constraints,
    penny_metric,
    plastic_impact,
    specular_reflect,
)

params = PennyParams.thin_disk()
table = TableParams(a=0.15, b=0.20)
metric = penny_metric(params)
constraints = penny_constraints(params)

# Put the front rim point on the wall at 40 degrees around the ellipse and
# aim the disk outward.
psi = np.deg2rad(40.0)
contact = np.array([table.a * np.cos(psi), table.b * np.sin(psi)])
phi = 0.9
center = contact - params.R * np.array([np.cos(phi), np.sin(phi)])
state = PennyState.from_rolling(center[0], center[1], 0.0, phi, 8.0, 0.3, params)

chart = impact_chart(table, params, "front")
print("boundary residual H(q):", chart.h(state.q))
print("outgoing rate dh(v):", chart.dh(state.q) @ state.v)
print("pre-impact velocity:", state.v)

rows = constraints.matrix_at(state.q)
for name, outcome in [
    ("specular e=1", specular_reflect(metric, state.q, chart, state.v, e=1.0)),
    ("elastic     ", elastic_impact(metric, constraints, state.q, chart, state.v)),
    ("plastic     ", plastic_impact(metric, constraints, state.q, chart, state.v)),
]:
    post = outcome.post_velocity
    print(f"\n{name}: v+ = {np.array_str(post, precision=5)}")
    print(
        "  energy %.6e -> %.6e J   rolling residual %.2e"
        % (outcome.energy_before, outcome.energy_after, np.max(np.abs(rows @ post)))
    )

# The specular bounce conserves energy but breaks rolling; the elastic map
# keeps both; the plastic map keeps rolling at the cost of energy.

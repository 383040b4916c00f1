"""Kinetic-energy geometry of the rolling disk.

Walks through the metric, the velocity<->momentum maps, the rolling
constraint forms, and the orthogonal projection onto the allowed
velocities.
"""

import numpy as np

from nhbilliards import (
    PennyParams,
    flat,
    gram_matrices,
    kinetic_energy,
    penny_constraints,
    penny_metric,
    project_onto_distribution,
    sharp,
)

params = PennyParams.thin_disk(R=0.01, m=0.0025)
metric = penny_metric(params)
constraints = penny_constraints(params)

q = np.array([0.0, 0.0, 0.0, np.pi / 2])  # heading along +y

# The metric is diag(m, m, I, J): translation weighs the mass, the two
# angles weigh their moments of inertia.
print("metric at q:")
print(metric.eval(q))

# Lower and raise an index: velocity -> momentum -> velocity.
v = np.array([0.0, 0.1, 10.0, 0.2])
p = flat(metric, q, v)
print("\nvelocity:", v)
print("momentum:", p)
print("sharp(flat(v)) == v:", np.allclose(sharp(metric, q, p), v))
print("kinetic energy: %.6e J" % kinetic_energy(metric, q, v))

# The two rolling one-forms vanish exactly on rolling velocities.
omega = constraints.matrix_at(q)
print("\nconstraint rows at q:")
print(omega)
print("residual on a rolling velocity:", omega @ v)

# A skidding velocity (translation without rotation) is not allowed; the
# projection finds the closest rolling velocity in the energy norm.
skid = np.array([0.1, 0.0, 0.0, 0.0])
projected = project_onto_distribution(constraints, metric, q, skid)
print("\nskidding velocity:", skid)
print("projected onto rolling:", projected)
print(
    "energy before/after projection: %.3e -> %.3e J"
    % (kinetic_energy(metric, q, skid), kinetic_energy(metric, q, projected))
)

# The Gram matrix of the constraint forms drives that projection.
a_upper, a_lower = gram_matrices(constraints, metric, q)
print("\nGram matrix of the forms:\n", a_upper)
print("its inverse:\n", a_lower)

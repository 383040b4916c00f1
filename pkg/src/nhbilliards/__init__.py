"""Rolling-disk billiards with nonholonomic constraints.

A small numpy library for hybrid Lagrangian systems whose continuous motion
is constrained rolling and whose discrete events are boundary impacts.  It
provides the kinetic-energy geometry (musical isomorphisms, constraint
one-forms, distribution projections), three impact maps (specular with
restitution, energy-conserving elastic, dissipative plastic), the vertical
rolling disk on an elliptical table with its exact free flow, a hybrid
trajectory engine, and experiment runners with CSV/JSON output.
"""

from .errors import (
    BilliardError,
    ConfigError,
    ConstraintDegeneracyError,
    DegenerateChartError,
    ImpactPreconditionError,
    InvalidStateError,
    NonPhysicalImpactError,
    NumericalError,
    SimultaneousImpactError,
)
from .geometry import (
    ConstraintSet,
    ElasticSolution,
    MetricTensor,
    OneForm,
    cometric_inner,
    flat,
    gram_matrices,
    kinetic_energy,
    project_onto_distribution,
    sharp,
)
from .impacts import (
    ImpactChart,
    ImpactOutcome,
    elastic_impact,
    plastic_impact,
    solve_elastic_system,
    specular_reflect,
)
from .penny import (
    PennyParams,
    PennyState,
    TableParams,
    closed_form_flow,
    closed_form_path,
    contact_points,
    impact_chart,
    penny_constraints,
    penny_metric,
    penny_ode_rhs,
    penny_preimpact_map,
    penny_projection_matrix,
)
from .engine import (
    Arc,
    EngineOptions,
    ExecutionTrace,
    ImpactEvent,
    find_next_impact,
    rk4_flow,
    simulate,
    step,
    trace_energy,
)
from .experiments import (
    PRESET_NAMES,
    EnsembleSettings,
    InitialConditions,
    ScenarioConfig,
    initial_state,
    load_config,
    preset,
    run_ensemble,
    run_scenario,
    save_config,
)

__version__ = "0.1.0"

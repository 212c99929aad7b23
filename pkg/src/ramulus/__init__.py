"""Branched optimal transport on atomic measures, at desk scale.

Exact Gilbert-problem solving by topology enumeration plus convex branch
point placement, flat norms of atomic 0-currents, the constructive dyadic
transport, and the boundary-perturbation experiments around generic
uniqueness of minimizers.
"""

from .chains import (
    Edge,
    PolyChain,
    alpha_mass,
    boundary,
    flat_upper,
    has_cycle,
    is_tree,
    monotonicity_profile,
    path_decomposition,
    quantize_chain,
    validate_kirchhoff,
)
from .errors import (
    CapacityError,
    DecompositionError,
    DomainError,
    InfeasibleAngleError,
    PreconditionError,
    RamulusError,
)
from .experiments import (
    DyadicReport,
    PerturbationReport,
    StabilityReport,
    dyadic_transport,
    perturb_boundary,
    stability_experiment,
)
from .geometry import ConeRay, angle_between, branch_angles, cone_balance_residual
from .local_branch import (
    FourPointClassification,
    FourPointInstance,
    ThreePointInstance,
    classify_four_point,
    probe_k_threshold,
    solve_three_point,
)
from .measures import Atom, AtomicMeasure, Boundary, flat_norm_0, jordan, mass
from .optimizer import (
    PlacementProblem,
    PlacementResult,
    minimize_placement,
    placement_value,
    realize_placement,
    smoothed_objective,
)
from .solver import SolveResult, UniquenessReport, solve_gilbert, uniqueness_probe
from .topology import Topology, edge_flows, enumerate_topologies

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "AtomicMeasure",
    "Boundary",
    "CapacityError",
    "ConeRay",
    "DecompositionError",
    "DomainError",
    "DyadicReport",
    "Edge",
    "FourPointClassification",
    "FourPointInstance",
    "InfeasibleAngleError",
    "PerturbationReport",
    "PlacementProblem",
    "PlacementResult",
    "PolyChain",
    "PreconditionError",
    "RamulusError",
    "SolveResult",
    "StabilityReport",
    "ThreePointInstance",
    "Topology",
    "UniquenessReport",
    "alpha_mass",
    "angle_between",
    "boundary",
    "branch_angles",
    "classify_four_point",
    "cone_balance_residual",
    "dyadic_transport",
    "edge_flows",
    "enumerate_topologies",
    "flat_norm_0",
    "flat_upper",
    "has_cycle",
    "is_tree",
    "jordan",
    "mass",
    "minimize_placement",
    "monotonicity_profile",
    "path_decomposition",
    "perturb_boundary",
    "placement_value",
    "probe_k_threshold",
    "quantize_chain",
    "realize_placement",
    "smoothed_objective",
    "solve_gilbert",
    "solve_three_point",
    "stability_experiment",
    "uniqueness_probe",
    "validate_kirchhoff",
]

"""Coarse conformal geometry on finite metric spaces.

Ball packings with scaled-disjointness, packing-supremum p-energies, moduli
and capacities with certified convergence traces, the connection invariant
between point pairs, parabolicity probes, conformality certificates for maps
between spaces, and deterministic experiment suites.
"""

from .energy import (
    Cochain,
    EnergyError,
    EnergyResult,
    LpProductTarget,
    candidate_balls,
    cochain_norm,
    coboundary,
    curve_length,
    energy,
    energy_upper_bound_covering,
    oscillation,
    simplices,
)
from .maps import (
    ConformalCertificate,
    MapError,
    PoincareImage,
    SpaceMap,
    builtin_map,
    canonical_correspondence,
    certify_conformal,
    check_composition,
    compose_maps,
    delta_transport_check,
    image_ball,
    poincare_model,
    pullback_energy_check,
    sample_packings,
)
from .packing import (
    EXACT_CAP,
    Multiplicity,
    PackingError,
    PackingSolution,
    conflict_matrix,
    covering_packing,
    is_packing,
    max_weight_packing,
    member_mask,
    packing_multiplicity,
    packing_report,
)
from .space import (
    Ball,
    FiniteMetricSpace,
    Interval,
    QsProductBall,
    SpaceError,
    gen_space,
    load_space,
    save_space,
    scale_ball,
)
from .suites import SuiteError, SuiteResult, run_suite, write_reports
from .varprob import (
    CapacityResult,
    DeltaResult,
    IsoperimetricProfile,
    ModulusResult,
    NonConvergence,
    ProbeResult,
    R1Check,
    SobolevEstimate,
    SolveTrace,
    VarProbError,
    capacity,
    check_r1_inequality,
    check_r1_samples,
    cutoff_m,
    cutoff_r1,
    enumerate_arcs,
    eval_reference_function,
    grotzsch_delta,
    isoperimetric_profile,
    modulus,
    parabolicity_probe,
    sobolev_constant,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""crnlab: a stochastic chemical reaction network laboratory.

Parse mass-action networks, analyze their graph and algebraic structure
(deficiency, weak reversibility, product-form stationary measures), simulate
the associated Markov jump process exactly, and compare replica ensembles
against closed-form scaling limits.
"""

from .errors import (
    ContractError,
    CRNError,
    DimensionError,
    ParseError,
    PropensityOverflowError,
    RefusalError,
)
from .network import (
    Complex,
    Reaction,
    ReactionNetwork,
    apply_jump,
    conservation_vectors,
    falling_factorial,
    generator_apply,
    norm1,
    positive_conservation_vector,
    propensities,
    propensity,
    total_rate,
    transitions,
)
from .parser import ModelSource, load_network, parse_network, render_network
from .structure import (
    ProductFormMeasure,
    StructuralReport,
    TriangularReduction,
    analyze,
    deterministic_equilibrium,
    irreducible_class,
    product_form_measure,
    shift_complexes,
    stationarity_residual,
    triangular_reduce,
)
from .simulate import (
    DriftEstimate,
    Downcross,
    Displacement,
    Energy,
    FixedTime,
    HitSet,
    JumpExcluding,
    JumpOfType,
    NthJump,
    OccupationMeasure,
    RuleSequence,
    RunResult,
    SimConfig,
    StopRule,
    Thinning,
    TrajectoryRecord,
    entropy_energy,
    estimate_drift,
    hitting_time_sample,
    joint_occupation,
    linear_energy,
    occupation_measure,
    polynomial_energy,
    run_until,
    simulate,
)
from .limits import (
    AutocatalyticCurves,
    LimitCurve,
    LimitJumpProcess,
    SlowFastHorizontalCurves,
    autocatalytic_curves,
    conditioned_poisson_pmf,
    integrate_dominant_ode,
    integrate_mass_action_ode,
    limit_jump_parameters,
    sample_limit_jump_paths,
    sample_limit_jump_process,
    slow_fast_horizontal_curves,
    triangle_regime_curves,
)
from .experiments import (
    ComparisonResult,
    ScalingSpec,
    Timescale,
    classical_rescale,
    run_classical_scaling,
    run_drift_survey,
    run_occupation_experiment,
    run_scaling_experiment,
    trajectory_curve,
    tv_distance,
)
from . import models

__version__ = "0.1.0"

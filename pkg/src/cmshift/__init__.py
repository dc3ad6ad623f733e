"""Exact-arithmetic toolkit for invariant measures on countable Markov
shifts and their suspension flows."""

__version__ = "0.1.0"

from .exactval import Interval, LogLinear, log_interval
from .shifts import (
    ProbeResult,
    SearchCaps,
    ShiftSpec,
    Word,
    check_shift,
    connect,
    enumerate_loops,
    f_property_probe,
    finite_full_shift,
    full_shift,
    is_admissible,
    load_shift_text,
    loop_family_shift,
    make_builtin,
    parse_shift_arg,
    renewal_shift,
    star_shift,
    successors,
)
from .measures import (
    ConvexCombination,
    CylinderFunction,
    PeriodicMeasure,
    PeriodicOrbit,
    TestFunction,
    additivity_defect,
    c0_conditions_check,
    canonical_cylinder,
    canonical_cylinders,
    combo_of_cylinder,
    convex_combination,
    fixed_point_measure,
    indicator,
    integrate_test_function,
    invariance_check,
    measure_from_cycle,
    measure_of_cylinder,
    metric_d,
    parse_combo_text,
    periodic_measure,
    periodic_orbit,
)
from .asymptotics import (
    Classification,
    EscapeSearchError,
    LimitReport,
    MeasureSequence,
    NotEnoughLoopsError,
    classify_limit,
    composite_sequence,
    cylinder_limit,
    escape_sequence,
    first_return_loops,
    fixed_point_sequence,
    geometric_pair_loop_sequence,
    gurevich_entropy_estimate,
    non_f_witness_sequence,
    pair_loop_sequence,
    sequence_from_measures,
    weak_star_trace,
)
from .suspension import (
    ApproximationError,
    FlowEscapeError,
    FlowMeasure,
    RoofFunction,
    approximate_by_single_orbit,
    birkhoff_sum,
    class_R_check,
    constant_roof,
    flow_cylinder_mass,
    flow_escape_sequence,
    flow_limit_analyze,
    flow_metric_rho,
    kac_lift,
    kac_project,
    log1p_roof,
    parse_roof_arg,
    parse_roof_text,
    roof_eval,
    roof_integral,
)

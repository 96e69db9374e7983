from ._exceptions import (
    MarkCorrError,
    WindowError,
    UndefinedOverlapError,
    PatternError,
    PatternParseError,
    OutOfWindowError,
    NonFiniteMarkError,
    InsufficientPointsError,
    EstimationError,
    ZeroNormalizerError,
    AllMissingError,
    DegenerateBandwidthError,
    SimulationError,
    UnknownPresetError,
    UnboundedIntensityError,
    NonPositiveDefiniteError,
    ConfigError,
    OutputError,
)
from .geometry import (
    Window,
    QuadratureGrid,
    distance,
    pairwise_distances,
    translation_correction,
    translation_weights,
    ripley_correction,
    ripley_weights,
)
from .pattern import MarkedPointPattern, MarkSummary, mark_summary, permute_marks, read_pattern, write_pattern
from .intensity import (
    IntensityField,
    KnownIntensity,
    MarkSurface,
    edge_factor_cW,
    kernel_intensity_uniform,
    kernel_intensity_massconserving,
    select_bandwidth_cvl,
    voronoi_intensity,
    nadaraya_watson,
    nadaraya_watson_mark_surface,
)
from .testfunctions import TestFunction, CustomTestFunction, get_test_function
from .markcorr import (
    RGrid,
    SummaryCurve,
    PairTable,
    default_rgrid,
    pairsum_numerator,
    pairsum_denominator,
    c_inhom,
    kappa_inhom,
    c_homogeneous,
    kappa_homogeneous,
    k_ratio_inhom,
    pcf_inhom,
)
from .envelope import (
    CurveEnsemble,
    CurveRecipe,
    EnvelopeResult,
    pointwise_ranks,
    erl_order,
    rank_envelope_test,
    run_random_labelling_test,
    deviation_ranges,
)
from .simulate import (
    ScenarioSpec,
    GaussianFieldSpec,
    GaussianFieldSample,
    CovarianceSpec,
    simulate_inhomogeneous_poisson,
    simulate_gaussian_field,
    simulate_lgcp,
    assign_marks,
    scenario_preset,
    stated_intensity,
    intensity_discrepancy,
)

__all__ = [
    "MarkCorrError",
    "WindowError",
    "UndefinedOverlapError",
    "PatternError",
    "PatternParseError",
    "OutOfWindowError",
    "NonFiniteMarkError",
    "InsufficientPointsError",
    "EstimationError",
    "ZeroNormalizerError",
    "AllMissingError",
    "DegenerateBandwidthError",
    "SimulationError",
    "UnknownPresetError",
    "UnboundedIntensityError",
    "NonPositiveDefiniteError",
    "ConfigError",
    "OutputError",
    "Window",
    "QuadratureGrid",
    "distance",
    "pairwise_distances",
    "translation_correction",
    "translation_weights",
    "ripley_correction",
    "ripley_weights",
    "MarkedPointPattern",
    "MarkSummary",
    "mark_summary",
    "permute_marks",
    "read_pattern",
    "write_pattern",
    "IntensityField",
    "KnownIntensity",
    "MarkSurface",
    "edge_factor_cW",
    "kernel_intensity_uniform",
    "kernel_intensity_massconserving",
    "select_bandwidth_cvl",
    "voronoi_intensity",
    "nadaraya_watson",
    "nadaraya_watson_mark_surface",
    "TestFunction",
    "CustomTestFunction",
    "get_test_function",
    "RGrid",
    "SummaryCurve",
    "PairTable",
    "default_rgrid",
    "pairsum_numerator",
    "pairsum_denominator",
    "c_inhom",
    "kappa_inhom",
    "c_homogeneous",
    "kappa_homogeneous",
    "k_ratio_inhom",
    "pcf_inhom",
    "CurveEnsemble",
    "CurveRecipe",
    "EnvelopeResult",
    "pointwise_ranks",
    "erl_order",
    "rank_envelope_test",
    "run_random_labelling_test",
    "deviation_ranges",
    "ScenarioSpec",
    "GaussianFieldSpec",
    "GaussianFieldSample",
    "CovarianceSpec",
    "simulate_inhomogeneous_poisson",
    "simulate_gaussian_field",
    "simulate_lgcp",
    "assign_marks",
    "scenario_preset",
    "stated_intensity",
    "intensity_discrepancy",
]
__version__ = "0.1.0"

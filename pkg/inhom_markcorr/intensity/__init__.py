from ._base import BaseIntensityEstimator, IntensityField, clamp_floor
from .bandwidth import (
    BandwidthSelection,
    cvl_objective,
    cvl_selection,
    default_bandwidth_candidates,
    select_bandwidth_cvl,
)
from .constant import ConstantIntensityEstimator, KnownIntensity, constant_intensity
from .kernel import (
    KernelIntensityEstimator,
    MassConservingKernelEstimator,
    UniformKernelEstimator,
    edge_factor_cW,
    gaussian_kernel,
    kernel_intensity_massconserving,
    kernel_intensity_uniform,
)
from .smoothing import MarkSurface, nadaraya_watson, nadaraya_watson_mark_surface
from .voronoi import VoronoiCells, VoronoiIntensityEstimator, voronoi_cells, voronoi_intensity

ESTIMATORS = {
    "uniform": UniformKernelEstimator,
    "massconserving": MassConservingKernelEstimator,
    "voronoi": VoronoiIntensityEstimator,
    "constant": ConstantIntensityEstimator,
}

__all__ = [
    "BaseIntensityEstimator",
    "IntensityField",
    "clamp_floor",
    "BandwidthSelection",
    "cvl_objective",
    "cvl_selection",
    "default_bandwidth_candidates",
    "select_bandwidth_cvl",
    "ConstantIntensityEstimator",
    "KnownIntensity",
    "constant_intensity",
    "KernelIntensityEstimator",
    "MassConservingKernelEstimator",
    "UniformKernelEstimator",
    "edge_factor_cW",
    "gaussian_kernel",
    "kernel_intensity_massconserving",
    "kernel_intensity_uniform",
    "MarkSurface",
    "nadaraya_watson",
    "nadaraya_watson_mark_surface",
    "VoronoiCells",
    "VoronoiIntensityEstimator",
    "voronoi_cells",
    "voronoi_intensity",
    "ESTIMATORS",
]

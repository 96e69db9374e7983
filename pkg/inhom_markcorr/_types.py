from typing import TypedDict, List, Optional, Union, Literal, Dict, Any


EdgeCorrection = Literal["translation", "ripley"]

Flavor = Literal["homogeneous", "inhomogeneous"]

CurveKind = Literal["c_unnorm", "kappa", "gamma", "pcf", "numerator", "denominator", "K_ratio"]

EstimatorKind = Literal["uniform", "massconserving", "voronoi", "constant", "known"]

Statistic = Literal["mean", "variance"]

MarkRule = Literal["sin-association", "noisy-amplitude", "iid-uniform"]


class IntensityProvenance(TypedDict, total=False):
    kind: EstimatorKind
    bandwidth: Optional[float]
    retention: float
    replicates: int
    seed: int
    clamp_floor: float
    clamp_count: int
    mass: float


class CurveMetadata(TypedDict, total=False):
    kind: CurveKind
    flavor: Flavor
    edge: EdgeCorrection
    test_function: Optional[str]
    normalizer: Optional[float]
    pair_bandwidth: float
    denominator_floor: float
    intensity: IntensityProvenance


class IntensitySidecar(TypedDict, total=False):
    kind: EstimatorKind
    bandwidth: Optional[float]
    bandwidth_selection: Optional[Dict[str, Any]]
    clamp_floor: float
    clamp_count: int
    mass: float
    grid: List[int]
    run: "RunProvenance"


class SurfaceSidecar(TypedDict, total=False):
    statistic: Statistic
    bandwidth: float
    bandwidth_selection: Optional[Dict[str, Any]]
    missing_cells: int
    grid: List[int]
    run: "RunProvenance"


class DeviationRange(TypedDict):
    direction: Literal["above", "below"]
    r_start: float
    r_end: float


class EnvelopeVerdict(TypedDict, total=False):
    p_lower: float
    p_upper: float
    alpha: float
    s: int
    seed: Optional[int]
    reject: bool
    boundary: bool
    deviations: List[DeviationRange]
    statistic: Dict[str, Any]
    run: "RunProvenance"


class StreamRecord(TypedDict):
    keys: List[Union[int, str]]
    spawn_key: List[int]


class ReplicateRecord(TypedDict):
    index: int
    streams: Dict[str, StreamRecord]
    count: int
    file: str


class SimulationManifest(TypedDict, total=False):
    preset: str
    scenario: Dict[str, Any]
    seed: int
    replicates: List[ReplicateRecord]
    run: "RunProvenance"


class PowerRow(TypedDict):
    flavor: Flavor
    scenario: Literal["alternative", "null"]
    test_function: str
    n_patterns: int
    rejections: int
    failures: int
    rate: float


class RunProvenance(TypedDict, total=False):
    command: str
    version: str
    seed: Optional[int]
    config: Dict[str, Any]


Point = Union[List[float], tuple]

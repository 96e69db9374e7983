import dataclasses
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ._exceptions import ConfigError

FLAVORS = {"hom": "homogeneous", "inhom": "inhomogeneous"}


@dataclass
class RunConfig:
    """Every knob of a CLI run. Defaults make a bare ``markcorr <command> --input f.csv`` runnable."""

    command: str = "markcorr"
    input: Optional[str] = None
    output: str = "out"
    window: Optional[str] = None  # "xmin,xmax,ymin,ymax"; default bounding box of the input
    flavor: str = "both"  # hom | inhom | both
    tf: str = "mm"
    edge: str = "translation"
    estimator: str = "massconserving"
    bandwidth: str = "auto"  # intensity / smoothing bandwidth, or "auto"
    pair_bandwidth: Optional[float] = None  # default 0.15 / sqrt(N / |W|)
    rmax: Optional[float] = None  # default a quarter of the shorter window side
    rsteps: int = 101
    form: str = "pcf"  # pcf | K
    perms: int = 999
    alpha: float = 0.05
    seed: int = 0
    grid: int = 128
    preset: str = "assoc-poisson"
    replicates: int = 1
    patterns: int = 50
    retention: float = 1.0
    voronoi_replicates: int = 1
    statistic: str = "mean"
    threads: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.flavor not in ("hom", "inhom", "both"):
            raise ConfigError(f"flavor must be hom, inhom or both, got {self.flavor!r}")
        if self.edge not in ("translation", "ripley"):
            raise ConfigError(f"edge must be translation or ripley, got {self.edge!r}")
        if self.form not in ("pcf", "K"):
            raise ConfigError(f"form must be pcf or K, got {self.form!r}")
        if self.statistic not in ("mean", "variance"):
            raise ConfigError(f"statistic must be mean or variance, got {self.statistic!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name in ("perms", "rsteps", "grid", "replicates", "patterns", "voronoi_replicates"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.rsteps < 2:
            raise ConfigError(f"rsteps must be at least 2, got {self.rsteps}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.bandwidth != "auto":
            try:
                value = float(self.bandwidth)
            except (TypeError, ValueError):
                raise ConfigError(f"bandwidth must be a positive real or 'auto', got {self.bandwidth!r}") from None
            if not value > 0:
                raise ConfigError(f"bandwidth must be positive, got {value}")

    @property
    def bandwidth_value(self) -> Optional[float]:
        return None if self.bandwidth == "auto" else float(self.bandwidth)

    @property
    def flavors(self):
        if self.flavor == "both":
            return ["homogeneous", "inhomogeneous"]
        return [FLAVORS[self.flavor]]

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _normalise_keys(values: Mapping[str, Any], source: str) -> Dict[str, Any]:
    out = {}
    for key, value in values.items():
        name = key.replace("-", "_")
        if name not in FIELDS:
            raise ConfigError(f"{source}: unknown setting {key!r}", {"key": key})
        out[name] = value
    return out


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Flat key/value settings from a TOML file."""
    path = Path(path)
    try:
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: config is flat key/value, found tables {nested}")
    return _normalise_keys(data, str(path))


def build_config(
    command: str,
    flags: Optional[Mapping[str, Any]] = None,
    config_path: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """Defaults, overridden by the config file, overridden by flags that were given."""
    values: Dict[str, Any] = {}
    if config_path is not None:
        values.update(load_config(config_path))
    given = {k: v for k, v in (flags or {}).items() if v is not None}
    values.update(_normalise_keys(given, "flags"))
    values["command"] = command
    if "bandwidth" in values:
        values["bandwidth"] = str(values["bandwidth"])
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc

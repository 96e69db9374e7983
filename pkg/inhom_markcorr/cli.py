"""Command-line front end: ``markcorr <command> [flags]``."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import pandas as pd

from . import __version__
from ._config import RunConfig, build_config
from ._exceptions import ConfigError, MarkCorrError
from ._io import OutputWriter
from ._random import seed_key
from ._types import IntensitySidecar, PowerRow, ReplicateRecord, RunProvenance, SimulationManifest, SurfaceSidecar
from ._workers import parallel_map
from .envelope import CurveRecipe, run_random_labelling_test
from .geometry import QuadratureGrid, Window
from .intensity import (
    ESTIMATORS,
    BaseIntensityEstimator,
    ConstantIntensityEstimator,
    MassConservingKernelEstimator,
    UniformKernelEstimator,
    VoronoiIntensityEstimator,
    cvl_selection,
    nadaraya_watson_mark_surface,
)
from .markcorr import default_rgrid, estimate_curves
from .pattern import MarkedPointPattern, read_pattern, write_pattern
from .simulate import intensity_discrepancy, scenario_preset
from .testfunctions import get_test_function

logger = logging.getLogger("inhom_markcorr")


def _provenance(cfg: RunConfig) -> RunProvenance:
    return {"command": cfg.command, "version": __version__, "seed": cfg.seed, "config": cfg.as_dict()}


def _load_input(cfg: RunConfig) -> MarkedPointPattern:
    if not cfg.input:
        raise ConfigError(f"{cfg.command} needs --input")
    window = Window.parse(cfg.window) if cfg.window else None
    return read_pattern(cfg.input, window)


def _grid(cfg: RunConfig, pattern: MarkedPointPattern) -> QuadratureGrid:
    return QuadratureGrid(pattern.window, cfg.grid, cfg.grid)


def _intensity_estimator(cfg: RunConfig, pattern: MarkedPointPattern) -> BaseIntensityEstimator:
    grid = _grid(cfg, pattern)
    if cfg.estimator == "uniform":
        return UniformKernelEstimator(cfg.bandwidth_value, grid=grid)
    if cfg.estimator == "massconserving":
        return MassConservingKernelEstimator(cfg.bandwidth_value, grid=grid)
    if cfg.estimator == "voronoi":
        return VoronoiIntensityEstimator(cfg.retention, cfg.voronoi_replicates, cfg.seed, grid=grid)
    if cfg.estimator == "constant":
        return ConstantIntensityEstimator(grid=grid)
    raise ConfigError(
        f"unknown estimator {cfg.estimator!r}; expected one of {', '.join(sorted(ESTIMATORS))}"
    )


def _recipe(cfg: RunConfig, pattern: MarkedPointPattern, flavor: str, tf: Optional[str] = None) -> CurveRecipe:
    return CurveRecipe(
        tf=tf or cfg.tf,
        flavor=flavor,
        form=cfg.form,
        edge=cfg.edge,
        rmax=cfg.rmax,
        rsteps=cfg.rsteps,
        pair_bandwidth=cfg.pair_bandwidth,
        estimator=_intensity_estimator(cfg, pattern),
    )


def cmd_simulate(cfg: RunConfig) -> Dict[str, Any]:
    spec = scenario_preset(cfg.preset)
    writer = OutputWriter(cfg.output)
    if spec.ground == "lgcp":
        intensity_discrepancy(spec)

    def one(index: int) -> ReplicateRecord:
        pattern = spec.simulate(cfg.seed, index)
        name = f"{spec.name}_{index:04d}.csv"
        writer.write_csv(name, pattern.to_frame())
        logger.debug("replicate %d: %d points", index, pattern.n)
        streams = {
            stream: {"keys": list(keys), "spawn_key": list(seed_key(*keys))}
            for stream, keys in spec.streams(index).items()
        }
        return {"index": index, "streams": streams, "count": pattern.n, "file": name}

    records = parallel_map(one, range(cfg.replicates), cfg.threads)
    manifest: SimulationManifest = {
        "preset": spec.name,
        "scenario": spec.describe(),
        "seed": cfg.seed,
        "replicates": records,
        "run": _provenance(cfg),
    }
    writer.write_json("manifest.json", manifest)
    logger.info("wrote %d replicates of %s to %s", len(records), spec.name, writer.base_dir)
    return dict(manifest)


def cmd_markcorr(cfg: RunConfig) -> Dict[str, Any]:
    pattern = _load_input(cfg)
    tf = get_test_function(cfg.tf)
    rgrid = default_rgrid(pattern, cfg.rmax, cfg.rsteps, cfg.pair_bandwidth)
    writer = OutputWriter(cfg.output)
    sidecar: Dict[str, Any] = {"curves": {}, "run": _provenance(cfg)}
    for flavor in cfg.flavors:
        if flavor == "homogeneous":
            intensity = ConstantIntensityEstimator().estimate(pattern, _grid(cfg, pattern))
        else:
            intensity = _intensity_estimator(cfg, pattern).estimate(pattern)
        for kind, curve in estimate_curves(pattern, tf, intensity, rgrid, cfg.edge).items():
            name = f"{kind}_{flavor}.csv"
            writer.write_csv(name, curve.to_frame())
            sidecar["curves"][name] = curve.metadata
    writer.write_json("markcorr.json", sidecar)
    return sidecar


def cmd_envelope(cfg: RunConfig) -> Dict[str, Any]:
    pattern = _load_input(cfg)
    writer = OutputWriter(cfg.output)
    verdicts = {}
    for flavor in cfg.flavors:
        result = run_random_labelling_test(
            pattern, _recipe(cfg, pattern, flavor), cfg.perms, cfg.alpha, cfg.seed, cfg.threads
        )
        writer.write_csv(f"envelope_{flavor}.csv", result.to_frame())
        verdict = result.verdict()
        verdict["run"] = _provenance(cfg)
        writer.write_json(f"envelope_{flavor}.json", verdict)
        verdicts[flavor] = verdict
        logger.info(
            "%s: p in [%.4g, %.4g], %s", flavor, result.p_lower, result.p_upper,
            "reject" if result.reject else "no rejection",
        )
    return verdicts


def cmd_power_study(cfg: RunConfig) -> List[PowerRow]:
    spec = scenario_preset(cfg.preset)
    scenarios = {"alternative": spec, "null": spec.with_mark_rule("iid-uniform")}
    if spec.ground == "lgcp":
        intensity_discrepancy(spec)
    tally = {
        (flavor, scenario): [0, 0]
        for flavor in cfg.flavors
        for scenario in scenarios
    }
    for index in range(cfg.patterns):
        for scenario, scenario_spec in scenarios.items():
            pattern = scenario_spec.simulate(cfg.seed, index)
            for flavor in cfg.flavors:
                counts = tally[(flavor, scenario)]
                try:
                    recipe = _recipe(cfg, pattern, flavor, tf=spec.test_function)
                    result = run_random_labelling_test(
                        pattern, recipe, cfg.perms, cfg.alpha, cfg.seed, cfg.threads, keys=("power", index)
                    )
                except MarkCorrError as exc:
                    counts[1] += 1
                    logger.warning("pattern %d (%s, %s) failed: %s", index, scenario, flavor, exc.message)
                    continue
                counts[0] += int(result.reject)
        logger.info("power study: %d/%d patterns done", index + 1, cfg.patterns)

    rows: List[PowerRow] = []
    for (flavor, scenario), (rejections, failures) in tally.items():
        used = cfg.patterns - failures
        rows.append({
            "flavor": flavor,
            "scenario": scenario,
            "test_function": spec.test_function,
            "n_patterns": used,
            "rejections": rejections,
            "failures": failures,
            "rate": rejections / used if used else float("nan"),
        })
    writer = OutputWriter(cfg.output)
    writer.write_csv("power.csv", pd.DataFrame(rows))
    writer.write_json("power.json", {"preset": spec.name, "rows": rows, "run": _provenance(cfg)})
    return rows


def cmd_intensity(cfg: RunConfig) -> IntensitySidecar:
    pattern = _load_input(cfg)
    field = _intensity_estimator(cfg, pattern).estimate(pattern)
    writer = OutputWriter(cfg.output)
    writer.write_csv("intensity.csv", field.to_frame())
    sidecar: IntensitySidecar = {
        "kind": field.kind,
        "bandwidth": field.bandwidth,
        "bandwidth_selection": field.extras.get("bandwidth_selection"),
        "clamp_floor": field.clamp_floor,
        "clamp_count": field.clamp_count,
        "mass": field.mass,
        "grid": [field.grid.nx, field.grid.ny],
        "run": _provenance(cfg),
    }
    writer.write_json("intensity.json", sidecar)
    logger.info("%s intensity: mass %.6g for %d points", field.kind, field.mass, pattern.n)
    return sidecar


def cmd_marksurface(cfg: RunConfig) -> SurfaceSidecar:
    pattern = _load_input(cfg)
    selection = None
    bandwidth = cfg.bandwidth_value
    if bandwidth is None:
        chosen = cvl_selection(pattern)
        bandwidth = chosen.bandwidth
        selection = chosen.as_dict()
    surface = nadaraya_watson_mark_surface(pattern, bandwidth, _grid(cfg, pattern), cfg.statistic)
    writer = OutputWriter(cfg.output)
    writer.write_csv(f"marksurface_{cfg.statistic}.csv", surface.to_frame())
    sidecar: SurfaceSidecar = {
        "statistic": cfg.statistic,
        "bandwidth": bandwidth,
        "bandwidth_selection": selection,
        "missing_cells": int(surface.missing.sum()),
        "grid": [cfg.grid, cfg.grid],
        "run": _provenance(cfg),
    }
    writer.write_json(f"marksurface_{cfg.statistic}.json", sidecar)
    return sidecar


COMMANDS: Dict[str, Callable[[RunConfig], Any]] = {
    "simulate": cmd_simulate,
    "markcorr": cmd_markcorr,
    "envelope": cmd_envelope,
    "power-study": cmd_power_study,
    "intensity": cmd_intensity,
    "marksurface": cmd_marksurface,
}


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="TOML file of flat key/value settings")
    parser.add_argument("--output", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, help="run seed (default: 0)")
    parser.add_argument("--threads", type=int, help="worker cap (also MARKCORR_THREADS)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")


def _add_pattern(parser: argparse.ArgumentParser):
    parser.add_argument("--input", help="pattern CSV with header x,y,mark")
    parser.add_argument("--window", help="xmin,xmax,ymin,ymax (default: bounding box)")
    parser.add_argument("--grid", type=int, help="cells per side of the quadrature grid (default: 128)")
    parser.add_argument("--estimator", choices=sorted(ESTIMATORS))
    parser.add_argument("--bandwidth", help="intensity bandwidth, or 'auto' (default)")
    parser.add_argument("--retention", type=float, help="Voronoi thinning retention p")
    parser.add_argument("--voronoi-replicates", type=int, help="Voronoi thinning replicates m")


def _add_curves(parser: argparse.ArgumentParser):
    parser.add_argument("--flavor", choices=["hom", "inhom", "both"])
    parser.add_argument("--tf", choices=["mm", "vario"])
    parser.add_argument("--edge", choices=["translation", "ripley"])
    parser.add_argument("--form", choices=["pcf", "K"])
    parser.add_argument("--rmax", type=float)
    parser.add_argument("--rsteps", type=int)
    parser.add_argument("--pair-bandwidth", type=float)


def _add_test(parser: argparse.ArgumentParser):
    parser.add_argument("--perms", type=int, help="number of permutations s (default: 999)")
    parser.add_argument("--alpha", type=float, help="significance level (default: 0.05)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markcorr", description="Inhomogeneous mark correlation functions")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate replicates of a scenario preset")
    _add_common(p)
    p.add_argument("--preset")
    p.add_argument("--replicates", type=int)

    p = sub.add_parser("markcorr", help="estimate mark correlation curves")
    _add_common(p)
    _add_pattern(p)
    _add_curves(p)

    p = sub.add_parser("envelope", help="random labelling test with a global rank envelope")
    _add_common(p)
    _add_pattern(p)
    _add_curves(p)
    _add_test(p)

    p = sub.add_parser("power-study", help="rejection rates over simulated patterns")
    _add_common(p)
    _add_curves(p)
    _add_test(p)
    p.add_argument("--preset")
    p.add_argument("--patterns", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--estimator", choices=sorted(ESTIMATORS))
    p.add_argument("--bandwidth")

    p = sub.add_parser("intensity", help="estimate an intensity surface")
    _add_common(p)
    _add_pattern(p)

    p = sub.add_parser("marksurface", help="Nadaraya-Watson mark mean or variance surface")
    _add_common(p)
    _add_pattern(p)
    p.add_argument("--statistic", choices=["mean", "variance"])
    return parser


def _configure_logging(verbose: bool, quiet: bool):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    flags = {
        k: v for k, v in vars(args).items()
        if k not in ("command", "config", "verbose", "quiet")
    }
    try:
        cfg = build_config(args.command, flags, args.config)
        COMMANDS[cfg.command](cfg)
    except MarkCorrError as exc:
        logger.error("%s", exc.message)
        if exc.details:
            logger.debug("details: %s", exc.details)
        return 1
    except Exception:
        logger.exception("%s failed unexpectedly", args.command)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

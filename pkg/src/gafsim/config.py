"""Experiment configuration: parsing, validation, canonical hashing."""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import Disc, Rect, region_contains_disc
from .measure import WeightSpec
from .stats import TestFunction, bump_from_config

EXPERIMENTS = ("mean_variance", "hole", "large_deviation", "normality",
               "kernel_diagnostics", "poisson_baseline")


@dataclass
class ExperimentConfig:
    experiment: str
    weight: WeightSpec
    gaf_form: str
    L_grid: list
    trials: int
    region: Rect
    psi: TestFunction
    master_seed: int
    trial_offset: int
    hole_disc: Disc = None
    frame_delta: float = 0.4
    frame_R: float = 1.0
    pad_factor: float = 12.0
    intensity_scale: float = 1.0 / (2.0 * np.pi)
    deviation_delta: float = 0.2
    poisson_trials: int = 20000
    raw: dict = field(default=None, repr=False)

    @property
    def config_hash(self):
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True,
                       separators=(",", ":")).encode()).hexdigest()

    @property
    def seeds(self):
        return {"master": self.master_seed, "trial_offset": self.trial_offset}


def _need(d, key, where):
    if key not in d:
        raise ConfigError(key, "missing in %s" % where)
    return d[key]


def parse_config(raw: dict) -> ExperimentConfig:
    experiment = _need(raw, "experiment", "top level")
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", "unknown experiment %r (expected one "
                          "of %s)" % (experiment, ", ".join(EXPERIMENTS)))
    try:
        weight = WeightSpec.from_config(_need(raw, "weight", "top level"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError("weight", str(exc))
    gaf_form = raw.get("gaf_form", "basis")
    if gaf_form not in ("basis", "frame"):
        raise ConfigError("gaf_form", "must be 'basis' or 'frame'")
    L_grid = [float(x) for x in _need(raw, "L_grid", "top level")]
    if len(L_grid) < 1 or any(b <= a for a, b in zip(L_grid, L_grid[1:])):
        raise ConfigError("L_grid", "must be nonempty and strictly increasing")
    if L_grid[0] < 1.0:
        raise ConfigError("L_grid", "scaling parameters must be >= 1")
    trials = int(_need(raw, "trials", "top level"))
    if trials < 1:
        raise ConfigError("trials", "must be >= 1")
    try:
        region = Rect.from_config(_need(raw, "region", "top level"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError("region", str(exc))
    try:
        psi = bump_from_config(_need(raw, "psi", "top level"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError("psi", str(exc))
    if not region_contains_disc(region, psi.support_disc, slack=1e-9):
        raise ConfigError("region", "region must contain the support of psi")
    hole_disc = None
    if raw.get("hole_disc") is not None:
        try:
            hole_disc = Disc.from_config(raw["hole_disc"])
        except Exception as exc:
            raise ConfigError("hole_disc", str(exc))
        if not region_contains_disc(region, hole_disc, slack=1e-9):
            raise ConfigError("region", "region must contain the hole disc")
    if experiment == "hole" and hole_disc is None:
        raise ConfigError("hole_disc", "required for the hole experiment")
    seeds = raw.get("seeds", {})
    master_seed = int(seeds.get("master", 0))
    trial_offset = int(seeds.get("trial_offset", 0))
    frame = raw.get("frame", {})
    frame_delta = float(frame.get("delta", 0.4))
    frame_R = float(frame.get("R", 1.0))
    if not (0 < frame_delta < frame_R):
        raise ConfigError("frame", "need 0 < delta < R")
    pad_factor = float(frame.get("pad_factor", 12.0))
    if pad_factor <= 0:
        raise ConfigError("frame", "pad_factor must be positive")
    intensity_scale = float(raw.get("intensity_scale", 1.0 / (2.0 * np.pi)))
    if intensity_scale <= 0:
        raise ConfigError("intensity_scale", "must be positive")
    deviation_delta = float(raw.get("deviation_delta", 0.2))
    if deviation_delta <= 0:
        raise ConfigError("deviation_delta", "must be positive")
    poisson_trials = int(raw.get("poisson_trials", 20000))
    return ExperimentConfig(
        experiment=experiment, weight=weight, gaf_form=gaf_form,
        L_grid=L_grid, trials=trials, region=region, psi=psi,
        master_seed=master_seed, trial_offset=trial_offset,
        hole_disc=hole_disc, frame_delta=frame_delta, frame_R=frame_R,
        pad_factor=pad_factor, intensity_scale=intensity_scale,
        deviation_delta=deviation_delta, poisson_trials=poisson_trials,
        raw=raw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", "not valid JSON: %s" % exc)
    return parse_config(raw)

"""YAML experiment files.

Example::

    model:
      A: [[0.8, 1.0], [0.0, 0.8]]
      B: [[0.0], [1.0]]
      C: [[1.0, 1.0]]
    noise: {sigma_w2: 0.5, sigma_v2: 0.5}
    deepc: {Np: 3, Nf: 5, lambda_y: 1.0e+5, lambda_g: 100}
    experiment: {T: 100, N: 40, Nsim: 100, variant: averaged+ekf, repetitions: 100, seed: 0}
    reference: {kind: sine, amplitude: 5.0, omega: 0.3}
    ekf: {q: 0.1, r: null, P0_scale: 1.0}
    tuning: {lambda_y_grid: [1.0e+3, 1.0e+5], lambda_g_grid: [10, 100, 1000]}
    sweep: {parameter: sigma_v2, grid: [0.1, 0.3, 0.5], variants: [standard, averaged+ekf]}

Every section is optional; missing values fall back to the defaults of
:class:`~ekf_deepc.harness.ExperimentConfig`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np
import yaml

from .deepc import DeePCConfig
from .harness import SWEEP_PARAMETERS, VARIANTS, ExperimentConfig, Reference
from .lti_sim import LtiModel, benchmark_model


class ConfigError(ValueError):
    pass


_EXPERIMENT_KEYS = {"T", "N", "Nsim", "variant", "repetitions", "seed", "input_amplitude", "x0_variance",
                    "warmup_amplitude", "online_noise"}
_SECTIONS = {"model", "noise", "deepc", "experiment", "reference", "ekf", "tuning", "sweep"}


@dataclass
class SweepSpec:
    parameter: Optional[str] = None
    grid: list = field(default_factory=list)
    variants: list = field(default_factory=lambda: ["standard", "averaged+ekf"])


def _check_keys(section: str, given: dict, allowed) -> None:
    unknown = set(given) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {sorted(unknown)}")


def _listify(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return [_listify(v) for v in value]
    return value


def config_from_dict(raw: dict) -> tuple[ExperimentConfig, SweepSpec]:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping of sections")
    _check_keys("top level", raw, _SECTIONS)
    try:
        model_raw = raw.get("model")
        if model_raw:
            _check_keys("model", model_raw, "ABCDEF")
            model = LtiModel(**model_raw)
        else:
            model = benchmark_model()

        deepc_raw = raw.get("deepc") or {}
        _check_keys("deepc", deepc_raw, {f.name for f in fields(DeePCConfig)})
        defaults = ExperimentConfig.__dataclass_fields__["deepc"].default_factory()
        deepc = replace(defaults, **deepc_raw)

        noise = raw.get("noise") or {}
        _check_keys("noise", noise, {"sigma_w2", "sigma_v2"})
        exp = raw.get("experiment") or {}
        _check_keys("experiment", exp, _EXPERIMENT_KEYS)
        ref = raw.get("reference") or {}
        _check_keys("reference", ref, {"kind", "amplitude", "omega"})
        ekf = raw.get("ekf") or {}
        _check_keys("ekf", ekf, {"q", "r", "P0_scale"})
        tuning = raw.get("tuning") or {}
        _check_keys("tuning", tuning, {"lambda_y_grid", "lambda_g_grid"})

        kwargs = dict(model=model, deepc=deepc, reference=Reference(**ref), **noise, **exp)
        if "q" in ekf:
            kwargs["ekf_q"] = float(ekf["q"])
        if "r" in ekf:
            kwargs["ekf_r"] = None if ekf["r"] is None else float(ekf["r"])
        if "P0_scale" in ekf:
            kwargs["P0_scale"] = float(ekf["P0_scale"])
        for key in ("lambda_y_grid", "lambda_g_grid"):
            if key in tuning:
                kwargs[key] = tuple(float(v) for v in tuning[key])
        cfg = ExperimentConfig(**kwargs)

        sweep_raw = raw.get("sweep") or {}
        _check_keys("sweep", sweep_raw, {"parameter", "grid", "variants"})
        sweep = SweepSpec(**sweep_raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if sweep.parameter is not None and sweep.parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
    bad = [v for v in sweep.variants if v not in VARIANTS]
    if bad:
        raise ConfigError(f"unknown sweep variant(s) {bad}")
    return cfg, sweep


def load_config(path) -> tuple[ExperimentConfig, SweepSpec]:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw or {})


def config_to_dict(cfg: ExperimentConfig, sweep: Optional[SweepSpec] = None) -> dict:
    model = {k: getattr(cfg.model, k).tolist() for k in "ABCDEF"}
    deepc = {f.name: _listify(getattr(cfg.deepc, f.name)) for f in fields(DeePCConfig)}
    out = {
        "model": model,
        "noise": {"sigma_w2": cfg.sigma_w2, "sigma_v2": cfg.sigma_v2},
        "deepc": deepc,
        "experiment": {k: getattr(cfg, k) for k in sorted(_EXPERIMENT_KEYS)},
        "reference": {"kind": cfg.reference.kind, "amplitude": cfg.reference.amplitude,
                      "omega": cfg.reference.omega},
        "ekf": {"q": cfg.ekf_q, "r": cfg.ekf_r, "P0_scale": cfg.P0_scale},
        "tuning": {"lambda_y_grid": list(cfg.lambda_y_grid), "lambda_g_grid": list(cfg.lambda_g_grid)},
    }
    if sweep is not None and sweep.parameter is not None:
        out["sweep"] = {"parameter": sweep.parameter, "grid": list(sweep.grid), "variants": list(sweep.variants)}
    return out


def dump_config(cfg: ExperimentConfig, path, sweep: Optional[SweepSpec] = None) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg, sweep), fh, sort_keys=False)

"""INI experiment configuration.

Sections::

    [experiment]      methods, protocol, source, path, features, lbp_grid,
                      image_shape, dims, betas, crc_lambda, seed, n_jobs, out
    [synthetic]       keyword arguments of the chosen generator
    [learner]         LearnerConfig fields shared by every method
    [learner.<name>]  per-method overrides on top of [learner]

Lists are comma separated. Unknown keys are rejected so typos surface early.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from ..subspace import LearnerConfig
from .experiment import ExperimentSpec

EXPERIMENT_KEYS = {"methods", "protocol", "source", "path", "features", "lbp_grid",
                   "image_shape", "dims", "betas", "crc_lambda", "seed", "n_jobs", "out"}
LEARNER_KEYS = set(LearnerConfig.__dataclass_fields__)


class ConfigError(ValueError):
    """Invalid configuration value or layout."""


def _list(text, conv=str):
    items = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(conv(t) for t in items)
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}: {exc}") from None


def _scalar(text):
    """Best-effort literal: int, then float, then the string itself."""
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _learner_fields(section, where):
    out = {}
    for key, raw in section.items():
        if key not in LEARNER_KEYS:
            raise ConfigError(f"[{where}] unknown learner key {key!r}")
        raw = raw.strip()
        if key == "d":
            out[key] = None if raw.lower() in ("", "none") else int(raw)
        elif key in ("beta", "ridge", "zero_tol_rel"):
            out[key] = float(raw)
        elif key == "knn_k":
            out[key] = int(raw)
        elif key in ("pca_keep", "heat_t"):
            val = _scalar(raw)
            out[key] = val if isinstance(val, str) or key == "heat_t" else int(val)
        else:
            out[key] = raw
    return out


def read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def spec_from_config(cp: configparser.ConfigParser) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from parsed INI sections."""
    for name in cp.sections():
        if name not in ("experiment", "synthetic", "learner") and not name.startswith("learner."):
            raise ConfigError(f"unknown section [{name}]")
    ex = cp["experiment"] if cp.has_section("experiment") else {}
    unknown = set(ex) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"[experiment] unknown key(s): {', '.join(sorted(unknown))}")

    kw = {}
    try:
        if "methods" in ex:
            kw["methods"] = _list(ex["methods"])
        for key in ("protocol", "source", "features"):
            if key in ex:
                kw[key] = ex[key].strip()
        if ex.get("path", "").strip():
            kw["path"] = ex["path"].strip()
        if "lbp_grid" in ex:
            kw["lbp_grid"] = _list(ex["lbp_grid"], int)
        if ex.get("image_shape", "").strip():
            kw["image_shape"] = _list(ex["image_shape"], int)
        if "dims" in ex:
            kw["dims"] = _list(ex["dims"], int)
        if "betas" in ex:
            kw["betas"] = _list(ex["betas"], float)
        if ex.get("crc_lambda", "").strip():
            kw["crc_lambda"] = float(ex["crc_lambda"])
        for key in ("seed", "n_jobs"):
            if key in ex:
                kw[key] = int(ex[key])
        if ex.get("out", "").strip():
            kw["out_dir"] = ex["out"].strip()
        if cp.has_section("synthetic"):
            kw["synthetic"] = {k: _scalar(v.strip()) for k, v in cp["synthetic"].items()}

        base = _learner_fields(cp["learner"], "learner") if cp.has_section("learner") else {}
        kw["default_learner"] = LearnerConfig(**base)
        learners = {}
        for name in cp.sections():
            if name.startswith("learner."):
                method = name.split(".", 1)[1]
                learners[method] = LearnerConfig(**{**base, **_learner_fields(cp[name], name)})
        kw["learners"] = learners
        return ExperimentSpec(**kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

"""Experiment configuration: flat-key files, CLI overrides, validation.

A config file is plain ``key = value`` lines with ``#`` comments.  Model
definition keys share the file under a ``model.`` prefix (nY, window,
profile parameters, path kind, eps, t grid).  Anything unknown is a parse
error; a bad config never produces partial artifacts.
"""

import os

from .dirac import PRESETS

SUITES = ("identities", "eta", "aps", "gv", "as")


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "suite": "",
    "preset": "all",
    "seed": 7,
    "out": "",
    "workers": 1,
    "trials": 0,          # 0 means each suite's documented count
    "tol.identity": 1e-10,
    "tol.lambda": 1e-12,
    "tol.stabilize": 1e-12,
    "tol.rel": 1e-4,
    "tol.abs": 1e-6,
    "tol.eta": 1e-8,
    "model.preset": "",
    "model.S": 30,
    "model.L": 30,
    "model.hs": 1.0,
    "model.nY": 32,
    "model.alpha": 0.0,   # 0 means the preset default
    "model.amp": 0.0,
    "model.scheme": "exp",
    "model.kind": "wassermann",
    "model.eps": 1e-8,
    "model.tmax": 0.0,    # 0 means adaptive
    "model.tn": 33,
}

_INT_KEYS = {"seed", "workers", "trials", "model.S", "model.L", "model.nY",
             "model.tn"}
_FLOAT_KEYS = {k for k in DEFAULTS if k.startswith("tol.")} | {
    "model.hs", "model.alpha", "model.amp", "model.eps", "model.tmax"}


def parse_config(text):
    """Flat key = value lines into a dict of raw strings."""
    out = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key or not val:
            raise ConfigError(f"line {ln}: empty key or value")
        if key in out:
            raise ConfigError(f"line {ln}: duplicate key '{key}'")
        out[key] = val
    return out


def _coerce(key, val):
    if key in _INT_KEYS:
        try:
            return int(val)
        except ValueError:
            raise ConfigError(f"key '{key}': expected integer, got '{val}'")
    if key in _FLOAT_KEYS:
        try:
            return float(val)
        except ValueError:
            raise ConfigError(f"key '{key}': expected number, got '{val}'")
    return str(val)


def make_config(suite, config_file=None, preset=None, seed=None, out=None,
                workers=None):
    """Merge defaults, config file, and CLI overrides; validate."""
    cfg = dict(DEFAULTS)
    if config_file is not None:
        try:
            with open(config_file) as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}")
        for key, val in parse_config(text).items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key '{key}'")
            cfg[key] = _coerce(key, val)
    cfg["suite"] = suite
    if preset is not None:
        cfg["preset"] = preset
    if seed is not None:
        cfg["seed"] = int(seed)
    if out is not None:
        cfg["out"] = out
    if workers is not None:
        cfg["workers"] = int(workers)
    if not cfg["out"]:
        cfg["out"] = os.environ.get("ETACALC_OUT_DIR", "etacalc-out")
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg["suite"] not in SUITES:
        raise ConfigError(
            f"unknown suite '{cfg['suite']}' (choose from "
            f"{', '.join(SUITES)})")
    if cfg["preset"] != "all" and cfg["preset"] not in PRESETS:
        raise ConfigError(
            f"unknown preset '{cfg['preset']}' (choose from "
            f"{', '.join(PRESETS)} or all)")
    if cfg["model.preset"] and cfg["model.preset"] not in PRESETS:
        raise ConfigError(f"unknown model preset '{cfg['model.preset']}'")
    for key, val in cfg.items():
        if key.startswith("tol.") and not val > 0:
            raise ConfigError(f"tolerance '{key}' must be positive")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be at least 1")
    if cfg["seed"] < 0:
        raise ConfigError("seed must be nonnegative")
    if cfg["trials"] < 0:
        raise ConfigError("trials must be nonnegative")
    if cfg["model.kind"] not in ("wassermann", "graph"):
        raise ConfigError(f"unknown path kind '{cfg['model.kind']}'")
    if cfg["model.scheme"] not in ("exp", "euler"):
        raise ConfigError(f"unknown scheme '{cfg['model.scheme']}'")
    for key in ("model.S", "model.L", "model.nY", "model.tn"):
        if cfg[key] < 1:
            raise ConfigError(f"'{key}' must be positive")


def model_overrides(cfg):
    """Keyword overrides for preset_model from the model.* keys."""
    kw = {"S": cfg["model.S"], "L": cfg["model.L"], "hs": cfg["model.hs"],
          "scheme": cfg["model.scheme"], "nY": cfg["model.nY"]}
    if cfg["model.alpha"]:
        kw["alpha"] = cfg["model.alpha"]
    if cfg["model.amp"]:
        kw["amp"] = cfg["model.amp"]
    return kw

"""Run configuration: a flat ``key = value`` text file plus command-line overrides.

Example::

    # cubic NLS, default grids
    potential = power_nls
    sigma = 1
    half_width = 20
    n = 1024
    evolution_half_width = 400
    evolution_n = 8192
    t_min = 5
    t_max = 80
    tol.F1_polynomial = 1e-5

Keys not listed in ``DEFAULTS`` are rejected, except ``tol.<report name>``
which overrides the tolerance of that identity report.  Every artifact
written by the CLI carries ``config_hash``, the first 12 hex digits of the
SHA-256 of the resolved configuration.
"""
import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigurationError
from .evolution import METHODS, PropagatorConfig
from .grid import Grid

DEFAULTS = {
    "potential": "power_nls",
    "sigma": 1.0,
    "potential_file": "",
    "mu": 1.0,
    "half_width": 20.0,
    "n": 1024,
    "kink": 4,
    "threshold_tol": 1e-6,
    "evolution_half_width": 400.0,
    "evolution_n": 8192,
    "method": "split-step",
    "dt": 0.01,
    "sponge": 0.1,
    "sponge_strength": 6.0,
    "t_min": 5.0,
    "t_max": 80.0,
    "t_count": 24,
    "weight_sigma": 2.0,
    "initial_width": 1.0,
    "dump_z": 0.5,
    "dump_side": "plus",
    "dump_stride": 8,
    "output_dir": "out",
}


@dataclass
class RunConfig:
    potential: str = DEFAULTS["potential"]
    sigma: float = DEFAULTS["sigma"]
    potential_file: str = DEFAULTS["potential_file"]
    mu: float = DEFAULTS["mu"]
    half_width: float = DEFAULTS["half_width"]
    n: int = DEFAULTS["n"]
    kink: int = DEFAULTS["kink"]
    threshold_tol: float = DEFAULTS["threshold_tol"]
    evolution_half_width: float = DEFAULTS["evolution_half_width"]
    evolution_n: int = DEFAULTS["evolution_n"]
    method: str = DEFAULTS["method"]
    dt: float = DEFAULTS["dt"]
    sponge: float = DEFAULTS["sponge"]
    sponge_strength: float = DEFAULTS["sponge_strength"]
    t_min: float = DEFAULTS["t_min"]
    t_max: float = DEFAULTS["t_max"]
    t_count: int = DEFAULTS["t_count"]
    weight_sigma: float = DEFAULTS["weight_sigma"]
    initial_width: float = DEFAULTS["initial_width"]
    dump_z: float = DEFAULTS["dump_z"]
    dump_side: str = DEFAULTS["dump_side"]
    dump_stride: int = DEFAULTS["dump_stride"]
    output_dir: str = DEFAULTS["output_dir"]
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        for f in fields(self):
            if f.name in DEFAULTS:
                typ = type(DEFAULTS[f.name])
                try:
                    setattr(self, f.name, typ(getattr(self, f.name)))
                except (TypeError, ValueError) as exc:
                    raise ConfigurationError(f"{f.name}: expected {typ.__name__}") from exc
        self.tolerances = {k: float(v) for k, v in self.tolerances.items()}
        self.validate()

    def validate(self):
        if self.potential not in ("power_nls", "tabulated", "zero"):
            raise ConfigurationError(f"potential must be power_nls, tabulated or zero, got {self.potential!r}")
        if self.potential == "power_nls" and not self.sigma > 0:
            raise ConfigurationError("sigma must be positive")
        if self.potential == "tabulated" and not os.path.isfile(self.potential_file):
            raise ConfigurationError(f"potential_file {self.potential_file!r} does not exist")
        if not self.mu > 0:
            raise ConfigurationError("mu must be positive")
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}")
        if not 1 <= self.t_min < self.t_max <= 200:
            raise ConfigurationError("need 1 <= t_min < t_max <= 200")
        if self.t_count < 8:
            raise ConfigurationError("t_count must be at least 8 for a power-law fit")
        if self.dump_side not in ("plus", "minus"):
            raise ConfigurationError("dump_side must be plus or minus")
        if self.kink not in (0, 2, 4):
            raise ConfigurationError("kink must be 0, 2 or 4")
        # grid constructors validate n and half_width
        self.grid()
        self.evolution_grid()
        self.propagator(times=(self.t_min, self.t_max))

    def grid(self):
        return Grid(self.half_width, self.n)

    def evolution_grid(self):
        return Grid(self.evolution_half_width, self.evolution_n)

    def times(self):
        return tuple(float(t) for t in np.geomspace(self.t_min, self.t_max, self.t_count))

    def propagator(self, times=None, direction=1):
        return PropagatorConfig(self.method, self.dt, self.times() if times is None else tuple(times),
                                direction=direction, sponge=self.sponge, sponge_strength=self.sponge_strength)

    def tolerance(self, name, default):
        return self.tolerances.get(name, default)

    @property
    def is_cubic(self):
        return self.potential == "power_nls" and self.sigma == 1.0 and self.mu == 1.0

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["tolerances"] = dict(sorted(self.tolerances.items()))
        return d

    @property
    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def provenance(self, command=None):
        out = {"config_hash": self.hash, "config": self.to_dict()}
        if command:
            out["command"] = command
        return out


def parse_config_text(text):
    """Parse ``key = value`` lines into a dict of strings (tolerance keys under 'tolerances')."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    values, tols = {}, {}
    for key, val in cp["run"].items():
        if key.startswith("tol."):
            tols[key[4:]] = val
        elif key in DEFAULTS:
            values[key] = val
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    if tols:
        values["tolerances"] = tols
    return values


def load_config(path=None, overrides=None):
    """RunConfig from an optional file, then non-None ``overrides`` on top."""
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc

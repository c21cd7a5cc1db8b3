"""Experiment configuration: a flat ``key = value`` text file.

Lines starting with ``#`` or ``;`` are comments. Recognised keys::

    # data: a LibSVM path, or omit for synthetic data
    data = path/to/file.libsvm
    label_map = 0:-1,1:1          # raw label -> +/-1, optional
    n_features = 123              # optional dimension override

    # synthetic data (used when ``data`` is absent)
    n = 500
    d = 100
    het = 10
    sparsity = 0.0
    label_noise = 0.1
    feature_noise = 0.3
    support = 0.1
    data_seed = 0

    regularizer = lhalf           # l0 | lhalf | l1
    lambda = 0.01
    methods = sgd-U, sgd-I, sarah-U, sarah-I, spider-U, spider-I
    eta = theory                  # theory | grid | <number>
    etas = 10, 1, 0.1, 0.01, 0.001, 0.0001   # grid for eta = grid
    b = auto                      # auto = ceil(sqrt(n))
    m = auto                      # auto = ceil(sqrt(n))
    B = auto                      # auto = ceil(n/2)
    epochs = 30                   # outer loops; SGD runs epochs*m iterations
    seed = 0
    init = gaussian               # zeros | gaussian
    init_scale = 0.1
    output_rule = last            # last | random
    stride = 1
    max_ifo = none
    jobs = 1
    out = results
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from ..optimizers import Method, OutputRule
from ..regularizers import RegKind
from .synthetic import SyntheticSpec

PAPER_ETA_GRID = (10.0, 1.0, 1e-1, 1e-2, 1e-3, 1e-4)
ALL_RUNS = ("sgd-U", "sgd-I", "sarah-U", "sarah-I", "spider-U", "spider-I")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class RunSpec:
    method: Method
    scheme: str  # "U" or "I"

    @property
    def name(self) -> str:
        return f"{self.method.value}-{self.scheme}"

    @classmethod
    def parse(cls, text: str) -> "RunSpec":
        meth, sep, sch = text.strip().partition("-")
        sch = sch.strip().upper()
        if not sep or sch not in ("U", "I"):
            raise ConfigError(f"bad method entry {text!r}; expected e.g. sarah-I")
        try:
            return cls(Method(meth.strip().lower()), sch)
        except ValueError:
            raise ConfigError(f"unknown method {meth!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    runs: tuple[RunSpec, ...] = tuple(RunSpec.parse(r) for r in ALL_RUNS)
    data: Optional[str] = None
    label_map: Optional[str] = None
    n_features: Optional[int] = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    regularizer: RegKind = RegKind.LHALF
    lam: float = 0.01
    eta: str = "theory"
    etas: tuple[float, ...] = PAPER_ETA_GRID
    b: Optional[int] = None
    m: Optional[int] = None
    B: Optional[int] = None
    epochs: int = 30
    seed: int = 0
    init: str = "gaussian"
    init_scale: float = 0.1
    output_rule: OutputRule = OutputRule.LAST
    stride: int = 1
    max_ifo: Optional[int] = None
    jobs: int = 1
    out: str = "results"

    def __post_init__(self):
        if not self.runs:
            raise ConfigError("at least one method entry is required")
        if not self.lam >= 0:
            raise ConfigError("lambda must be >= 0")
        if self.eta not in ("theory", "grid"):
            try:
                if not float(self.eta) > 0:
                    raise ValueError
            except ValueError:
                raise ConfigError(f"eta must be theory, grid or a positive number, got {self.eta!r}") from None
        if not self.etas:
            raise ConfigError("eta grid is empty")
        if self.init not in ("zeros", "gaussian"):
            raise ConfigError("init must be zeros or gaussian")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        for name in ("b", "m", "B"):
            v = getattr(self, name)
            if v is not None and v < (0 if name == "m" else 1):
                raise ConfigError(f"{name} out of range")

    def sizes(self, n: int) -> tuple[int, int, int]:
        """(b, m, B) after applying the ``auto`` defaults and clamping to n."""
        root = math.ceil(math.sqrt(n))
        b = min(self.b if self.b is not None else root, n)
        m = self.m if self.m is not None else root
        B = min(self.B if self.B is not None else math.ceil(n / 2), n)
        return b, m, B


_INT_KEYS = {"n", "d", "data_seed", "epochs", "seed", "stride", "jobs", "n_features"}
_FLOAT_KEYS = {"het", "sparsity", "label_noise", "feature_noise", "support", "lambda", "init_scale"}
_AUTO_KEYS = {"b", "m", "B"}
_SYNTH = {"n": "n", "d": "d", "het": "het", "sparsity": "sparsity", "label_noise": "noise",
          "feature_noise": "feature_noise", "support": "support", "data_seed": "seed"}
_KNOWN = (_INT_KEYS | _FLOAT_KEYS | _AUTO_KEYS
          | {"data", "label_map", "regularizer", "methods", "eta", "etas", "init", "output_rule",
             "max_ifo", "out"})


def parse_config_text(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    raw = dict(cp["experiment"])
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw: dict = {}
    synth: dict = {}
    try:
        for key, val in raw.items():
            val = val.strip()
            if key in _SYNTH:
                conv = int if key in _INT_KEYS else float
                synth[_SYNTH[key]] = conv(val)
            elif key in _INT_KEYS:
                kw[key] = int(val)
            elif key == "lambda":
                kw["lam"] = float(val)
            elif key in _FLOAT_KEYS:
                kw[key] = float(val)
            elif key in _AUTO_KEYS:
                kw[key] = None if val.lower() == "auto" else int(val)
            elif key == "methods":
                kw["runs"] = tuple(RunSpec.parse(t) for t in val.split(",") if t.strip())
            elif key == "etas":
                kw["etas"] = tuple(float(t) for t in val.split(",") if t.strip())
            elif key == "regularizer":
                kw["regularizer"] = RegKind.parse(val)
            elif key == "output_rule":
                kw["output_rule"] = OutputRule(val.lower())
            elif key == "max_ifo":
                kw["max_ifo"] = None if val.lower() in ("none", "") else int(val)
            else:
                kw[key] = val
        if synth:
            kw["synthetic"] = SyntheticSpec(**synth)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    config = parse_config_text(text)
    # relative data paths are taken relative to the config file
    if config.data is not None and not os.path.isabs(config.data):
        config = replace(config, data=os.path.join(os.path.dirname(os.fspath(path)), config.data))
    return config


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)

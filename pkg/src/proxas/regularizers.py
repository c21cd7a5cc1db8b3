"""Separable sparsity regularizers and their exact proximal maps.

``prox(r, v, eta)`` returns the coordinatewise global minimizer of
``(1/(2*eta)) * (y - v)**2 + lam * rho(y)`` with

* ``L0``:    rho(y) = [y != 0]      (hard thresholding)
* ``LHalf``: rho(y) = |y|**0.5      (half thresholding)
* ``L1``:    rho(y) = |y|           (soft thresholding)
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class RegKind(str, enum.Enum):
    L0 = "l0"
    LHALF = "lhalf"
    L1 = "l1"

    @classmethod
    def parse(cls, value) -> "RegKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {"l0": cls.L0, "lhalf": cls.LHALF, "l0.5": cls.LHALF, "l12": cls.LHALF,
                   "half": cls.LHALF, "l1": cls.L1}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown regularizer kind {value!r}") from None


@dataclass(frozen=True)
class Regularizer:
    kind: RegKind
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegKind.parse(self.kind))
        if not self.lam >= 0:
            raise ValueError(f"regularization weight must be >= 0, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))

    def value(self, x) -> float:
        return reg_value(self, x)

    def prox(self, v, eta) -> np.ndarray:
        return prox(self, v, eta)


def _rho(kind: RegKind, y):
    y = np.abs(y)
    if kind is RegKind.L0:
        return (y != 0).astype(float)
    if kind is RegKind.LHALF:
        return np.sqrt(y)
    return y


def reg_value(r: Regularizer, x) -> float:
    """lam * sum_j rho(x_j)."""
    return r.lam * float(np.sum(_rho(r.kind, np.asarray(x, dtype=float))))


def hard_threshold(v, tau):
    """Prox of tau*||.||_0 with unit step; ties at |v| = sqrt(2 tau) go to 0."""
    v = np.asarray(v, dtype=float)
    return np.where(np.abs(v) > np.sqrt(2.0 * tau), v, 0.0)


def soft_threshold(v, tau):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def half_threshold(v, tau):
    """Prox of tau*sum|.|^(1/2) with unit step.

    For y > 0 the stationarity condition in u = sqrt(y) is the depressed cubic
    ``u**3 - |v| u + tau/2 = 0``; its largest root (trigonometric form) is the
    only candidate besides 0. It is kept only if it strictly beats y = 0, which
    happens for |v| > 1.5 * tau**(2/3).
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    if tau == 0:
        return v.copy()
    a = np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        arg = -(0.75 * tau / a) * np.sqrt(3.0 / a)
    real = (a > 0) & (arg >= -1.0)
    if not np.any(real):
        return out
    ar = a[real]
    u = 2.0 * np.sqrt(ar / 3.0) * np.cos(np.arccos(arg[real]) / 3.0)
    y = u * u
    better = 0.5 * (y - ar) ** 2 + tau * u < 0.5 * ar * ar
    out[real] = np.where(better, np.sign(v[real]) * y, 0.0)
    return out


def prox(r: Regularizer, v, eta) -> np.ndarray:
    """argmin_y (1/(2 eta)) ||y - v||^2 + r(y), coordinatewise."""
    if not eta > 0:
        raise ValueError(f"step size must be > 0, got {eta}")
    v = np.asarray(v, dtype=float)
    tau = eta * r.lam
    if tau == 0:
        return v.copy()
    if r.kind is RegKind.L0:
        return hard_threshold(v, tau)
    if r.kind is RegKind.LHALF:
        return half_threshold(v, tau)
    return soft_threshold(v, tau)


ORACLE_GRID = 1_000_001
_UNIT_GRID = np.linspace(-1.0, 1.0, ORACLE_GRID)


def prox_objective(kind, tau, v, y):
    """0.5 (y - v)^2 + tau * rho(y)."""
    kind = RegKind.parse(kind)
    y = np.asarray(y, dtype=float)
    return 0.5 * (y - v) ** 2 + tau * _rho(kind, y)


def prox_oracle_1d(kind, tau, v) -> float:
    """Brute-force scalar prox by dense grid search.

    Searches 1,000,001 equispaced points on [-2|v|-1, 2|v|+1] plus the exact
    candidates 0 and v (so the L0 jump cannot fall between grid points). Ties
    resolve to 0.
    """
    kind = RegKind.parse(kind)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    v = float(v)
    half_width = 2.0 * abs(v) + 1.0
    cand = np.concatenate(([0.0, v], half_width * _UNIT_GRID))
    obj = prox_objective(kind, tau, v, cand)
    return float(cand[int(np.argmin(obj))])

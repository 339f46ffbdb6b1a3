"""Population frames, model families, and the baseline weighted estimator.

The working model: conditional on a scalar location theta, unit values are
independent normals ``y_i ~ N(theta * a_i, sigma2_i)`` with known positive
constants ``a_i`` and ``sigma2_i``, and theta carries a flat prior.  The
posterior mean of theta given the sampled units is the precision-weighted
average ``ybar_w``; plugging it into the unsampled part of the population
gives the baseline (non-robust) estimate of the finite population mean.

Three named auxiliary mappings are supported.  With ``a_i = x_i`` and
``sigma2_i = sigma^2 * x_i`` the baseline estimate is the classical ratio
estimator; with ``a_i = x_i`` and ``sigma2_i = x_i^2`` it averages the unit
ratios ``y_i / x_i``; with ``a_i = pi_i`` and ``sigma2_i = pi_i^2 / (1 - pi_i)``
it reproduces the Horvitz-Thompson estimator exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateFrameError, ModelValidationError

HT_PI_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PopulationFrame:
    """All N units with auxiliaries, sample membership, and observed values.

    ``y`` is a full-length array with NaN at unsampled positions; a value is
    present exactly for sampled units.
    """

    unit_id: tuple
    a: np.ndarray
    sigma2: np.ndarray
    sampled: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        sigma2 = np.asarray(self.sigma2, dtype=float)
        sampled = np.asarray(self.sampled, dtype=bool)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "unit_id", tuple(self.unit_id))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "sampled", sampled)
        object.__setattr__(self, "y", y)

        N = len(self.unit_id)
        if N < 2:
            raise ModelValidationError(f"need at least 2 units, got {N}")
        if len(set(self.unit_id)) != N:
            raise ModelValidationError("duplicate unit_id")
        for name, arr in (("a", a), ("sigma2", sigma2), ("sampled", sampled), ("y", y)):
            if arr.shape != (N,):
                raise ModelValidationError(f"field {name!r} has shape {arr.shape}, expected ({N},)")
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            raise ModelValidationError("a must be finite and > 0 for every unit")
        if not np.all(np.isfinite(sigma2)) or np.any(sigma2 <= 0):
            raise ModelValidationError("sigma2 must be finite and > 0 for every unit")
        n = int(sampled.sum())
        if n < 1:
            raise DegenerateFrameError("no sampled units")
        if not np.all(np.isfinite(y[sampled])):
            bad = [self.unit_id[i] for i in np.flatnonzero(sampled & ~np.isfinite(y))]
            raise ModelValidationError(f"missing y for sampled unit(s) {bad}")
        if np.any(np.isfinite(y[~sampled])):
            bad = [self.unit_id[i] for i in np.flatnonzero(~sampled & np.isfinite(y))]
            raise ModelValidationError(f"y given for unsampled unit(s) {bad}")

    @property
    def n_units(self) -> int:
        return len(self.unit_id)

    @property
    def n_sampled(self) -> int:
        return int(self.sampled.sum())

    @property
    def sampled_ids(self) -> tuple:
        return tuple(u for u, s in zip(self.unit_id, self.sampled) if s)

    def with_y(self, y_sampled: Sequence[float]) -> "PopulationFrame":
        """Return a copy with new observed values on the sampled units (input order)."""
        y = np.full(self.n_units, np.nan)
        y[self.sampled] = np.asarray(y_sampled, dtype=float)
        return PopulationFrame(self.unit_id, self.a, self.sigma2, self.sampled, y)


@dataclass(frozen=True)
class ModelSpec:
    """Auxiliary-to-(a, sigma2) mapping for one of the named model families."""

    family: Literal["ratio", "royall", "horvitz_thompson", "custom"]
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in ("ratio", "royall", "horvitz_thompson", "custom"):
            raise ModelValidationError(f"unknown family {self.family!r}")
        if self.family == "ratio" and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ModelValidationError("ratio family needs sigma > 0")


def build_model(
    unit_id: Sequence,
    spec: ModelSpec,
    *,
    x: Sequence[float] | None = None,
    pi: Sequence[float] | None = None,
    a: Sequence[float] | None = None,
    sigma2: Sequence[float] | None = None,
    sampled: Sequence[bool],
    y_sampled: Sequence[float],
) -> PopulationFrame:
    """Map family auxiliaries to (a_i, sigma2_i) and assemble a frame.

    ``y_sampled`` lists observed values for the sampled units, in unit order.
    """
    unit_id = tuple(unit_id)
    N = len(unit_id)
    sampled_arr = np.asarray(sampled, dtype=bool)
    if sampled_arr.shape != (N,):
        raise ModelValidationError("sampled flags must align with unit_id")
    n = int(sampled_arr.sum())

    if spec.family == "ratio":
        xv = _positive_aux("x", x, N)
        a_arr, s2_arr = xv, spec.sigma**2 * xv
    elif spec.family == "royall":
        xv = _positive_aux("x", x, N)
        a_arr, s2_arr = xv, xv**2
    elif spec.family == "horvitz_thompson":
        pv = np.asarray(pi, dtype=float) if pi is not None else None
        if pv is None or pv.shape != (N,):
            raise ModelValidationError("horvitz_thompson family needs pi for every unit")
        if not np.all(np.isfinite(pv)) or np.any(pv <= 0) or np.any(pv >= 1):
            raise ModelValidationError("pi must lie strictly in (0, 1)")
        if abs(pv.sum() - n) > HT_PI_SUM_TOL:
            raise ModelValidationError(
                f"sum of pi over all units is {pv.sum()!r}, expected sample size {n}"
            )
        a_arr, s2_arr = pv, pv**2 / (1.0 - pv)
    else:
        a_arr = _positive_aux("a", a, N)
        s2_arr = _positive_aux("sigma2", sigma2, N)

    y_s = np.asarray(y_sampled, dtype=float)
    if y_s.shape != (n,):
        raise ModelValidationError(f"expected {n} sampled y values, got {y_s.shape}")
    y = np.full(N, np.nan)
    y[sampled_arr] = y_s
    return PopulationFrame(unit_id, a_arr, s2_arr, sampled_arr, y)


def _positive_aux(name: str, values, N: int) -> np.ndarray:
    if values is None:
        raise ModelValidationError(f"family requires auxiliary {name!r}")
    arr = np.asarray(values, dtype=float)
    if arr.shape != (N,):
        raise ModelValidationError(f"auxiliary {name!r} has shape {arr.shape}, expected ({N},)")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ModelValidationError(f"auxiliary {name!r} must be finite and > 0")
    return arr


@dataclass(frozen=True)
class SufficientStats:
    """Precision sums, weights, scales, and standardized residuals of the sampled units.

    ``r`` is None when only one unit is sampled (the residual scale v degenerates
    to zero there).  The identities ``sum(w) == 1`` and ``sum(w * v * r) == 0``
    hold for every valid frame.
    """

    unit_id: tuple
    a: np.ndarray
    sigma2: np.ndarray
    y: np.ndarray
    S_aa: float
    S_ay: float
    ybar_w: float
    w: np.ndarray
    v: np.ndarray
    r: np.ndarray | None = field(default=None)

    @property
    def n(self) -> int:
        return len(self.unit_id)


def sufficient_stats(frame: PopulationFrame) -> SufficientStats:
    """Compute the weighted-average estimate of theta and per-unit residual scales.

    v_i is the standard deviation of ``y_i / a_i - ybar_w`` under the model;
    residuals are reported only when two or more units are sampled.
    """
    s = frame.sampled
    a = frame.a[s]
    sigma2 = frame.sigma2[s]
    y = frame.y[s]
    prec = a**2 / sigma2
    S_aa = float(prec.sum())
    S_ay = float((a * y / sigma2).sum())
    ybar_w = S_ay / S_aa
    w = prec / S_aa
    v2 = sigma2 / a**2 - 1.0 / S_aa
    n = a.size
    if n >= 2:
        v = np.sqrt(v2)
        r = (y / a - ybar_w) / v
    else:
        v = np.zeros(1)
        r = None
    return SufficientStats(
        unit_id=frame.sampled_ids,
        a=a,
        sigma2=sigma2,
        y=y,
        S_aa=S_aa,
        S_ay=S_ay,
        ybar_w=ybar_w,
        w=w,
        v=v,
        r=r,
    )


def classical_estimate(frame: PopulationFrame) -> float:
    """Baseline estimate of the finite population mean.

    Sampled values enter directly; each unsampled unit contributes its
    predicted value ``ybar_w * a_j``.  A census frame returns the exact mean.
    """
    s = frame.sampled
    if s.all():
        return float(frame.y.mean())
    stats = sufficient_stats(frame)
    return (frame.y[s].sum() + stats.ybar_w * frame.a[~s].sum()) / frame.n_units


def posterior_predictive(frame: PopulationFrame):
    """Predictive distribution of the unsampled values given the sampled ones.

    Mean ``ybar_w * a_u``; covariance ``diag(sigma2_u) + a_u a_u^T / S_aa``.
    """
    from .divergence import GaussianSpec

    u = ~frame.sampled
    if not u.any():
        raise DegenerateFrameError("census frame has no unsampled units to predict")
    stats = sufficient_stats(frame)
    a_u = frame.a[u]
    mu = stats.ybar_w * a_u
    cov = np.diag(frame.sigma2[u]) + np.outer(a_u, a_u) / stats.S_aa
    return GaussianSpec(mu, cov)

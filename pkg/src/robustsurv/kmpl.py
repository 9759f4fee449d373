"""Product-limit estimation and empirical sub-distribution functions.

The product-limit CDF carries probability mass only at event times.  When the
largest observation is censored the estimate is defective (total mass < 1);
for integration purposes the leftover mass is reassigned to the largest
observed time (Efron-style tail completion) so the weights form a proper
distribution, while the raw defective masses stay available for diagnostics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import CensoredSample

__all__ = ["KmplFit", "SubdistEmpiricals", "kmpl_fit", "subdist_empiricals", "km_integral"]

RESIDUAL_MASS_FLAG = 0.05  # defective-tail fraction worth surfacing in reports


@dataclass(frozen=True)
class KmplFit:
    """Product-limit estimate of the lifetime distribution.

    support/cdf_values/jumps describe the raw (possibly defective) estimate at
    the distinct event times; weight_points/weight_masses are the
    tail-completed weights used for integration.
    """

    support: np.ndarray
    cdf_values: np.ndarray
    jumps: np.ndarray
    residual_mass: float
    tail_point: float
    weight_points: np.ndarray
    weight_masses: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.jumps.sum())

    @property
    def tail_flagged(self) -> bool:
        return self.residual_mass > RESIDUAL_MASS_FLAG

    def cdf(self, x) -> np.ndarray:
        """Right-continuous raw CDF evaluated at x (0 before the first event)."""
        idx = np.searchsorted(self.support, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate(([0.0], self.cdf_values))
        return padded[idx]

    def write_csv(self, path) -> None:
        """(time, cdf, jump) rows plus the log-log cumulative-hazard columns
        used for straight-line model diagnostics."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["time", "cdf", "jump", "log_time", "log_cumulative_hazard"]
            )
            for t, c, j in zip(self.support, self.cdf_values, self.jumps):
                if c < 1.0:
                    loglog = f"{np.log(-np.log1p(-c)):.17g}" if 0.0 < c else ""
                else:
                    loglog = ""
                writer.writerow(
                    [f"{t:.17g}", f"{c:.17g}", f"{j:.17g}", f"{np.log(t):.17g}" if t > 0 else "", loglog]
                )


@dataclass(frozen=True)
class SubdistEmpiricals:
    """Empirical step functions for Z and its censored/uncensored parts.

    The marginal is defined as the sum of the two parts, so the additivity
    identity holds exactly, not merely to rounding.
    """

    z: np.ndarray
    _cum_event: np.ndarray
    _cum_censored: np.ndarray
    n: int

    def g_z(self, x) -> np.ndarray:
        """Fraction of observations with Z <= x."""
        return self.g_z0(x) + self.g_z1(x)

    def g_z1(self, x) -> np.ndarray:
        """Fraction of uncensored observations (delta = 1) with Z <= x."""
        return self._lookup(self._cum_event, x)

    def g_z0(self, x) -> np.ndarray:
        """Fraction of censored observations (delta = 0) with Z <= x."""
        return self._lookup(self._cum_censored, x)

    def _lookup(self, cum: np.ndarray, x) -> np.ndarray:
        idx = np.searchsorted(self.z, np.asarray(x, dtype=float), side="right")
        padded = np.concatenate(([0.0], cum))
        return padded[idx] / self.n


def kmpl_fit(sample: CensoredSample) -> KmplFit:
    """Product-limit fit over the sample's canonical ordering.

    The survival factor at the i-th ordered observation is
    1 - delta_i / (n - i + 1); masses fall at event times only and the jump at
    a tied event time aggregates the tied factors.
    """
    z, delta = sample.z, sample.delta
    n = sample.n
    at_risk = n - np.arange(n)
    factors = 1.0 - delta / at_risk
    survival = np.cumprod(factors)
    prev_survival = np.concatenate(([1.0], survival[:-1]))
    raw_jumps = np.where(delta == 1, prev_survival * delta / at_risk, 0.0)

    event_mask = delta == 1
    support, inverse = np.unique(z[event_mask], return_inverse=True)
    jumps = np.zeros(support.size)
    np.add.at(jumps, inverse, raw_jumps[event_mask])
    cdf_values = np.cumsum(jumps)

    residual = float(survival[-1])
    tail_point = float(z[-1])
    if residual > 1e-12:
        weight_points = np.unique(np.concatenate((support, [tail_point])))
        weight_masses = np.zeros(weight_points.size)
        weight_masses[np.searchsorted(weight_points, support)] = jumps
        weight_masses[np.searchsorted(weight_points, tail_point)] += residual
    else:
        residual = max(residual, 0.0)
        weight_points = support
        weight_masses = jumps.copy()
        weight_masses[-1] += residual  # absorb roundoff so masses sum to 1
    for arr in (support, cdf_values, jumps, weight_points, weight_masses):
        arr.setflags(write=False)
    return KmplFit(
        support=support,
        cdf_values=cdf_values,
        jumps=jumps,
        residual_mass=residual,
        tail_point=tail_point,
        weight_points=weight_points,
        weight_masses=weight_masses,
    )


def subdist_empiricals(sample: CensoredSample) -> SubdistEmpiricals:
    """Right-continuous empirical sub-distribution evaluators; the censored and
    uncensored parts add up to the marginal exactly, by construction."""
    return SubdistEmpiricals(
        z=sample.z,
        _cum_event=np.cumsum(sample.delta).astype(float),
        _cum_censored=np.cumsum(1 - sample.delta).astype(float),
        n=sample.n,
    )


def km_integral(fit: KmplFit, phi: Callable[[np.ndarray], np.ndarray]) -> float:
    """Expectation of phi under the tail-completed product-limit weights."""
    values = np.asarray(phi(fit.weight_points), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("phi is non-finite at a support point")
    return float(fit.weight_masses @ values)

"""Poisson and Mittag-Leffler (Cox) point processes on bounded regions of R^3.

The Mittag-Leffler field is sampled through its Cox representation: one
Lamperti draw L directs the whole configuration, which is then Poisson with
intensity rho * L.  All finite-dimensional laws reduce to Lamperti mixtures
of Poisson probabilities and are evaluated in log space so that large counts
never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, gammainc

from .specfun import (
    lamperti_expectation,
    lamperti_poisson_weight,
    lamperti_sample,
    mittag_leffler_composite,
)

__all__ = [
    "Region",
    "ball",
    "box",
    "PointConfiguration",
    "CountCapError",
    "sample_poisson",
    "sample_ml",
    "finite_dim_pmf",
    "count_tail_prob",
    "nearest_distance_survival",
    "janossy_density",
]

COUNT_CAP = 100_000_000  # points per draw; pathological Lamperti draws fail loudly


class CountCapError(RuntimeError):
    """A single configuration would exceed the obstacle-count cap."""


@dataclass(frozen=True)
class Region:
    """A ball or an axis-aligned box in R^3."""

    kind: str
    center: np.ndarray = field(default=None)
    radius: float = 0.0
    lo: np.ndarray = field(default=None)
    hi: np.ndarray = field(default=None)

    @property
    def volume(self) -> float:
        if self.kind == "ball":
            return 4.0 / 3.0 * math.pi * self.radius ** 3
        return float(np.prod(self.hi - self.lo))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        if self.kind == "ball":
            return np.linalg.norm(pts - self.center, axis=1) <= self.radius + 1e-12
        return np.all((pts >= self.lo - 1e-12) & (pts <= self.hi + 1e-12), axis=1)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "box":
            return rng.uniform(self.lo, self.hi, size=(n, 3))
        # radius by inverse CDF, direction isotropic
        r = self.radius * rng.uniform(size=n) ** (1.0 / 3.0)
        g = rng.standard_normal((n, 3))
        g /= np.linalg.norm(g, axis=1)[:, None]
        return self.center + r[:, None] * g

    def translated(self, shift) -> "Region":
        shift = np.asarray(shift, dtype=float)
        if self.kind == "ball":
            return ball(self.center + shift, self.radius)
        return box(self.lo + shift, self.hi + shift)


def ball(center, radius: float) -> Region:
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError("radius must be positive")
    return Region(kind="ball", center=center, radius=float(radius))


def box(lo, hi) -> Region:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValueError("box corners must satisfy hi > lo componentwise")
    return Region(kind="box", lo=lo, hi=hi)


@dataclass(frozen=True)
class PointConfiguration:
    """A realized configuration; intensity_draw records the Cox draw L."""

    points: np.ndarray
    region: Region
    intensity_draw: float | None = None

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def _poisson_points(mean: float, region: Region, rng: np.random.Generator,
                    count_cap: int) -> np.ndarray:
    if mean > 10 * count_cap:
        raise CountCapError(f"expected count {mean:.3e} exceeds cap {count_cap:.0e}")
    n = int(rng.poisson(mean))
    if n > count_cap:
        raise CountCapError(f"drawn count {n} exceeds cap {count_cap:.0e}")
    return region.sample_uniform(n, rng)


def sample_poisson(rho: float, region: Region, rng: np.random.Generator,
                   count_cap: int = COUNT_CAP) -> PointConfiguration:
    """Homogeneous Poisson configuration of intensity rho on the region."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    pts = _poisson_points(rho * region.volume, region, rng, count_cap)
    return PointConfiguration(points=pts, region=region, intensity_draw=None)


def sample_ml(rho: float, nu: float, region: Region, rng: np.random.Generator,
              count_cap: int = COUNT_CAP) -> PointConfiguration:
    """Mittag-Leffler configuration via the Cox route: draw L once, then
    Poisson with intensity rho * L.  For nu = 1 this is sample_poisson."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    ell = float(lamperti_sample(nu, rng))
    pts = _poisson_points(rho * ell * region.volume, region, rng, count_cap)
    return PointConfiguration(points=pts, region=region, intensity_draw=ell)


def finite_dim_pmf(nu: float, rho: float, volumes, counts) -> float:
    """Joint probability of the given counts in disjoint sets of the given
    volumes.  Equals the Lamperti mixture of products of Poisson pmfs;
    evaluated in log space so large counts are safe."""
    vols = np.asarray(volumes, dtype=float)
    ks = np.asarray(counts, dtype=int)
    if vols.shape != ks.shape or vols.ndim != 1 or vols.size < 1:
        raise ValueError("volumes and counts must be equal-length 1-d sequences")
    if np.any(vols <= 0):
        raise ValueError("volumes must be positive")
    if np.any(ks < 0):
        raise ValueError("counts must be nonnegative")
    if rho <= 0:
        raise ValueError("rho must be positive")
    total_k = int(ks.sum())
    total_v = float(vols.sum())
    if nu == 1.0:
        log_p = float(np.sum(ks * np.log(rho * vols) - gammaln(ks + 1)) - rho * total_v)
        return math.exp(log_p)
    # product of Poisson factors, re-expressed against the pooled set
    log_shape = float(
        np.sum(ks * np.log(rho * vols) - gammaln(ks + 1))
        + gammaln(total_k + 1)
        - total_k * math.log(rho * total_v)
    )
    return math.exp(log_shape) * lamperti_poisson_weight(nu, total_k, rho * total_v)


def count_tail_prob(nu: float, rho: float, volumes, n_max) -> float:
    """P(N(B_j) > n_max_j for at least one j), by one Lamperti quadrature.

    Complements truncated pmf sums: the count law has a power tail of index
    nu, so a bare partial sum over counts can never reach 1 to fine
    tolerance; partial sum plus this tail must."""
    vols = np.asarray(volumes, dtype=float)
    ns = np.broadcast_to(np.asarray(n_max, dtype=int), vols.shape)
    if nu == 1.0:
        log_keep = float(np.sum(np.log(gammainc(ns + 1, rho * vols) * -1 + 1)))
        return 1.0 - math.exp(log_keep)

    def log_integrand(x):
        if x > 700.0:  # all Poisson means huge, survival of the cap certain
            return -math.inf
        ell = math.exp(x)
        keep = 1.0
        for v, n in zip(vols, ns):
            keep *= 1.0 - gammainc(n + 1, rho * v * ell)  # P(Poisson <= n)
        if keep <= 0.0:
            return -math.inf
        return math.log(keep)

    return 1.0 - lamperti_expectation(nu, log_integrand)


def nearest_distance_survival(nu: float, rho: float, x: float) -> float:
    """Survival P(D > x) of the distance to the nearest point: the
    zero-count probability of the ball of radius x."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if x == 0.0:
        return 1.0
    return mittag_leffler_composite(nu, rho * (4.0 / 3.0) * math.pi * x ** 3)


def janossy_density(nu: float, rho: float, region_volume: float, n: int) -> float:
    """Constant Janossy density for exactly n points at given locations in a
    region of the stated volume; log-space evaluation guards large n."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if region_volume <= 0:
        raise ValueError("region_volume must be positive")
    if rho <= 0:
        raise ValueError("rho must be positive")
    z = rho * region_volume
    if nu == 1.0:
        return math.exp(n * math.log(rho) - z - gammaln(n + 1))
    # (rho^n / n!) * int l^n e^{-z l} lam(dl) = V^{-n} * poisson_weight(n, z)
    return math.exp(-n * math.log(region_volume)) * lamperti_poisson_weight(nu, n, z)

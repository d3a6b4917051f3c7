"""Isotropic random flights and their laws.

Three samplers share one event-driven core: the Markovian flight with
exponential(lambda) times, Model 1 (one Lamperti draw L scales the rate,
giving the Schur-constant joint flight-time law), and Model 2 (the same L
also scales the speed, or equivalently the clock).  Formula-side evaluators
cover the exchangeable fractional Poisson pmf, mean squared displacement,
and the Mittag-Leffler-weighted Duhamel series.

Cloud generation for experiments uses the conditional representation of a
Poisson flow: given the count N on [0, T] the event times are uniform order
statistics, so the sojourn lengths can be drawn as normalized exponential
spacings with no sorting and no sequential loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, gammainc

from .specfun import (
    lamperti_poisson_weight,
    lamperti_expectation,
    lamperti_sample,
    mittag_leffler_composite,
)

__all__ = [
    "SimParams",
    "FlightPath",
    "TimeScaledFlightPath",
    "uniform_sphere_direction",
    "simulate_markov_flight",
    "simulate_flight_model1",
    "simulate_flight_model2",
    "efpp_pmf",
    "efpp_tail_prob",
    "small_interval_jump_prob",
    "msd_model1",
    "msd_markov",
    "scattering_average",
    "duhamel_model1",
    "DuhamelResult",
    "flight_cloud",
    "sample_flight_counts",
    "empirical_msd_model1",
    "conditioned_lamperti",
]


@dataclass(frozen=True)
class SimParams:
    """Shared parameter bundle: order nu, rate lambda, speed c, dimension,
    horizon."""

    nu: float
    lam: float
    c: float
    d: int = 3
    t_max: float = 1.0

    def __post_init__(self):
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if self.lam <= 0 or self.c <= 0 or self.t_max <= 0:
            raise ValueError("lam, c and t_max must be positive")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")


def uniform_sphere_direction(d: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Isotropic unit vector(s) in R^d by Gaussian normalization."""
    if d < 1:
        raise ValueError("d must be >= 1")
    shape = (d,) if size is None else (size, d)
    g = rng.standard_normal(shape)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    # a zero draw has probability 0; regenerate defensively
    while np.any(norm == 0.0):
        bad = (norm == 0.0).reshape(-1)
        g.reshape(-1, d)[bad] = rng.standard_normal((int(bad.sum()), d))
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
    return g / norm


@dataclass
class FlightPath:
    """Piecewise-linear trajectory; directions[0] is the initial direction."""

    x0: np.ndarray
    times: np.ndarray           # strictly increasing event times in (0, horizon]
    directions: np.ndarray      # (n_events + 1, d)
    speed: float
    t_max: float
    mixture_draw: float | None = None
    truncated: bool = False

    @property
    def horizon(self) -> float:
        return float(self.times[-1]) if self.truncated else self.t_max

    def count(self, t) -> np.ndarray | int:
        t = np.asarray(t, dtype=float)
        self._check_horizon(t)
        out = np.searchsorted(self.times, t, side="right")
        return int(out) if out.ndim == 0 else out

    def position(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        self._check_horizon(t)
        scalar = t.ndim == 0
        ts = np.atleast_1d(t)
        starts = np.concatenate(([0.0], self.times))
        ends = np.concatenate((self.times, [np.inf]))
        # sojourn of direction j clipped to [0, t]
        w = np.clip(ts[:, None] - starts[None, :], 0.0, None)
        w = np.minimum(w, ends[None, :] - starts[None, :])
        out = self.x0[None, :] + self.speed * w @ self.directions
        return out[0] if scalar else out

    def direction(self, t) -> np.ndarray:
        idx = np.asarray(self.count(t))
        return self.directions[idx]

    def _check_horizon(self, t):
        if np.any(t < 0) or np.any(t > self.horizon + 1e-12):
            raise ValueError(
                f"t outside the stored horizon [0, {self.horizon}]"
                + (" (path truncated at the event cap)" if self.truncated else "")
            )


class TimeScaledFlightPath:
    """Model-2 time-scaled representation: reports the (c, lambda) base path
    on the rescaled clock t -> L t, delegating every evaluation so that
    position(t) is bit-identical to base.position(L * t)."""

    def __init__(self, base: FlightPath, ell: float):
        self.base = base
        self.mixture_draw = float(ell)
        self.speed = base.speed * ell
        self.truncated = base.truncated

    @property
    def x0(self):
        return self.base.x0

    @property
    def t_max(self):
        return self.base.t_max / self.mixture_draw

    @property
    def horizon(self):
        return self.base.horizon / self.mixture_draw

    @property
    def times(self):
        return self.base.times / self.mixture_draw

    @property
    def directions(self):
        return self.base.directions

    def count(self, t):
        return self.base.count(np.asarray(t, dtype=float) * self.mixture_draw)

    def position(self, t):
        return self.base.position(np.asarray(t, dtype=float) * self.mixture_draw)

    def direction(self, t):
        return self.base.direction(np.asarray(t, dtype=float) * self.mixture_draw)


def _simulate_rate_flight(rate: float, speed: float, params: SimParams, x0, v0,
                          rng: np.random.Generator, max_events=None,
                          mixture_draw=None, t_max=None) -> FlightPath:
    d = params.d
    horizon = params.t_max if t_max is None else t_max
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    times = []
    total = 0.0
    n_events = 0
    truncated = False
    block = max(16, int(rate * horizon + 4.0 * math.sqrt(rate * horizon) + 8))
    while True:
        gaps = rng.exponential(1.0 / rate, size=block)
        cum = total + np.cumsum(gaps)
        inside = cum[cum <= horizon]
        times.append(inside)
        n_events += inside.size
        if max_events is not None and n_events >= max_events:
            truncated = True
            break
        if inside.size < block:
            break
        total = float(cum[-1])
    times = np.concatenate(times) if times else np.empty(0)
    if truncated:
        times = times[:max_events]
    dirs = np.empty((times.size + 1, d))
    dirs[0] = v0
    if times.size:
        dirs[1:] = uniform_sphere_direction(d, rng, size=times.size)
    return FlightPath(
        x0=x0, times=times, directions=dirs, speed=speed,
        t_max=horizon, mixture_draw=mixture_draw, truncated=truncated,
    )


def simulate_markov_flight(params: SimParams, x0, v0, rng: np.random.Generator,
                           max_events=None) -> FlightPath:
    """Markovian flight: i.i.d. exponential(lambda) flight times, constant
    speed c, uniform post-scattering directions."""
    return _simulate_rate_flight(params.lam, params.c, params, x0, v0, rng,
                                 max_events=max_events)


def simulate_flight_model1(params: SimParams, x0, v0, rng: np.random.Generator,
                           max_events=None) -> FlightPath:
    """Model-1 flight: one Lamperti draw L, then a Markov flight at rate
    lambda * L with speed c (exact mixture representation of the
    Schur-constant flight-time law)."""
    ell = float(lamperti_sample(params.nu, rng))
    return _simulate_rate_flight(params.lam * ell, params.c, params, x0, v0, rng,
                                 max_events=max_events, mixture_draw=ell)


def simulate_flight_model2(params: SimParams, x0, v0, rng: np.random.Generator,
                           representation: str = "speed-scaled",
                           max_events=None):
    """Model-2 flight (random speed c*L coupled to the flight times).

    representation "speed-scaled": speed c*L and rate lambda*L directly;
    "time-scaled": a (c, lambda) Markov flight run to horizon L*t_max and
    reported on the rescaled clock.  Both agree in finite-dimensional law.
    """
    ell = float(lamperti_sample(params.nu, rng))
    if representation == "speed-scaled":
        return _simulate_rate_flight(params.lam * ell, params.c * ell, params,
                                     x0, v0, rng, max_events=max_events,
                                     mixture_draw=ell)
    if representation == "time-scaled":
        base = _simulate_rate_flight(params.lam, params.c, params, x0, v0, rng,
                                     max_events=max_events,
                                     t_max=params.t_max * ell)
        return TimeScaledFlightPath(base, ell)
    raise ValueError("representation must be 'speed-scaled' or 'time-scaled'")


# ---------------------------------------------------------------------------
# Laws
# ---------------------------------------------------------------------------

def efpp_pmf(nu: float, lam: float, t: float, n: int) -> float:
    """P(count(t) = n) for the exchangeable fractional Poisson process:
    the Lamperti mixture of Poisson(lambda t L) probabilities.

    In derivative form this is ((-lambda t)^n / n!) (d/dz)^n M_nu(-z^nu) at
    z = lambda t; the mixture form is what the sampler realizes and is
    numerically exact for all n.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if n < 0:
        raise ValueError("n must be nonnegative")
    if t == 0.0:
        return 1.0 if n == 0 else 0.0
    return lamperti_poisson_weight(nu, n, lam * t)


def efpp_tail_prob(nu: float, lam: float, t: float, n_max: int) -> float:
    """P(count(t) > n_max); the count tail is power-law of index nu, so
    truncated pmf sums must be closed with this analytic tail."""
    z = lam * t
    if nu == 1.0:
        return float(gammainc(n_max + 1, z))

    def log_integrand(x):
        if x + math.log(z) > 690.0:
            return 0.0  # tail probability -> 1, log(1) = 0
        p = gammainc(n_max + 1, z * math.exp(x))
        return math.log(p) if p > 0.0 else -math.inf

    return lamperti_expectation(nu, log_integrand)


def small_interval_jump_prob(nu: float, lam: float, dt: float) -> float:
    """P(at least one event in an interval of length dt):
    1 - M_nu(-(lambda dt)^nu), with leading term (lambda dt)^nu / Gamma(1+nu)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return 1.0 - mittag_leffler_composite(nu, lam * dt)


def msd_markov(lam: float, c: float, t) -> float | np.ndarray:
    """Mean squared displacement of the Markov flight started from a uniform
    direction: 2 c^2 / lambda^2 (lambda t - 1 + e^{-lambda t})."""
    t = np.asarray(t, dtype=float)
    out = 2.0 * c ** 2 / lam ** 2 * (lam * t - 1.0 + np.exp(-lam * t))
    return float(out) if out.ndim == 0 else out


def msd_model1(nu: float, lam: float, c: float, t: float) -> float:
    """Model-1 mean squared displacement
    2 c^2 int_0^t dw1 int_0^w1 dw2 M_nu(-(lambda w2)^nu), evaluated as the
    single weighted integral 2 c^2 int_0^t (t - w) M_nu(-(lambda w)^nu) dw."""
    from scipy.integrate import quad

    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    if nu == 1.0:
        return float(msd_markov(lam, c, t))

    value, err = quad(
        lambda w: (t - w) * mittag_leffler_composite(nu, lam * w),
        0.0, t, epsabs=1e-12, epsrel=1e-10, limit=300,
    )
    return 2.0 * c ** 2 * value


def scattering_average(h, x, n_mc: int, rng: np.random.Generator, d: int = 3):
    """Monte Carlo average of h(x, .) over uniform directions, with SE."""
    dirs = uniform_sphere_direction(d, rng, size=n_mc)
    xs = np.broadcast_to(np.asarray(x, dtype=float), (n_mc, d))
    vals = np.asarray(h(xs, dirs), dtype=float)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_mc))


@dataclass
class DuhamelResult:
    value: float
    se: float
    tail_bound: float
    pmf: np.ndarray
    term_means: np.ndarray
    term_ses: np.ndarray


def duhamel_model1(h, x, v, t: float, params: SimParams, truncation: int = 6,
                   n_mc: int = 20000, rng: np.random.Generator | None = None) -> DuhamelResult:
    """Partial Duhamel series for the Model-1 flight expectation E[h(X_t, V_t)].

    Term n carries the count-pmf weight and a Monte Carlo estimate of the
    time-ordered simplex/sphere integral (sorted uniform event times, i.i.d.
    uniform directions); the reported tail bound is the residual pmf mass
    1 - sum_{n<=N} pmf(n), which multiplies sup|h| in the error bound.
    """
    if truncation < 0 or truncation > 8:
        raise ValueError("truncation must be between 0 and 8")
    if rng is None:
        raise ValueError("an explicit rng is required")
    d = params.d
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)

    pmf = np.array([efpp_pmf(params.nu, params.lam, t, n) for n in range(truncation + 1)])
    means = np.empty(truncation + 1)
    ses = np.zeros(truncation + 1)
    means[0] = float(np.asarray(h(x + params.c * v * t, v), dtype=float))
    for n in range(1, truncation + 1):
        taus = np.sort(rng.uniform(0.0, t, size=(n_mc, n)), axis=1)
        dirs = uniform_sphere_direction(d, rng, size=n_mc * n).reshape(n_mc, n, d)
        gaps = np.diff(np.concatenate(
            (np.zeros((n_mc, 1)), taus, np.full((n_mc, 1), t)), axis=1), axis=1)
        alldirs = np.concatenate((np.broadcast_to(v, (n_mc, 1, d)), dirs), axis=1)
        xt = x + params.c * np.einsum("ij,ijk->ik", gaps, alldirs)
        vals = np.asarray(h(xt, alldirs[:, -1, :]), dtype=float)
        means[n] = vals.mean()
        ses[n] = vals.std(ddof=1) / math.sqrt(n_mc)
    value = float(np.dot(pmf, means))
    se = float(math.sqrt(np.sum((pmf * ses) ** 2)))
    tail = max(0.0, 1.0 - float(pmf.sum()))
    return DuhamelResult(value=value, se=se, tail_bound=tail, pmf=pmf,
                         term_means=means, term_ses=ses)


# ---------------------------------------------------------------------------
# Vectorized cloud engine
# ---------------------------------------------------------------------------

def conditioned_lamperti(nu: float, n: int, rng: np.random.Generator,
                         l_cap: float | None = None,
                         l_floor: float | None = None) -> np.ndarray:
    """n Lamperti draws, rejection-conditioned on l_floor <= L <= l_cap
    (either side optional).  Experiments cap L to keep the simulation work
    finite (the Lamperti law has infinite mean); diffusive-limit
    comparisons use the inversion-symmetric band (1/cap, cap), which by
    L =_d 1/L conditions the flight cloud and the Brownian-clock cloud
    identically."""
    if nu == 1.0:
        return np.ones(n)
    out = lamperti_sample(nu, rng, size=n)
    if l_cap is None and l_floor is None:
        return out
    hi = math.inf if l_cap is None else l_cap
    lo = 0.0 if l_floor is None else l_floor
    bad = (out > hi) | (out < lo)
    while np.any(bad):
        out[bad] = lamperti_sample(nu, rng, size=int(bad.sum()))
        bad = (out > hi) | (out < lo)
    return out


def flight_cloud(rates, speeds, t_points, d: int, rng: np.random.Generator,
                 x0=None, v0=None, chunk_events: int = 20_000_000):
    """Exact positions and directions of independent isotropic flights.

    rates, speeds: scalars or per-path arrays; t_points: increasing times.
    Returns (positions, directions) with shapes (n, len(t_points), d).
    Uses the conditional order-statistics representation on [0, max(t)],
    with sojourns drawn as normalized exponential spacings.
    """
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    n = rates.shape[0]
    speeds = np.broadcast_to(np.asarray(speeds, dtype=float), (n,))
    t_points = np.asarray(t_points, dtype=float)
    if np.any(np.diff(t_points) <= 0) or np.any(t_points < 0):
        raise ValueError("t_points must be increasing and nonnegative")
    horizon = float(t_points[-1])
    n_t = t_points.shape[0]
    positions = np.empty((n, n_t, d))
    directions = np.empty((n, n_t, d))
    x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)

    start = 0
    while start < n:
        stop = start
        budget = 0.0
        while stop < n and (budget < chunk_events or stop == start):
            budget += rates[stop] * horizon + 1
            stop += 1
        _flight_chunk(rates[start:stop], speeds[start:stop], t_points, d, rng,
                      x0, v0, positions[start:stop], directions[start:stop])
        start = stop
    return positions, directions


def _flight_chunk(rates, speeds, t_points, d, rng, x0, v0, out_pos, out_dir):
    n = rates.shape[0]
    horizon = float(t_points[-1])
    counts = rng.poisson(rates * horizon)
    seg = counts + 1                      # sojourns per path
    offsets = np.concatenate(([0], np.cumsum(seg)))
    m = int(offsets[-1])
    path_of = np.repeat(np.arange(n), seg)

    e = rng.standard_exponential(m)
    seg_sum = np.add.reduceat(e, offsets[:-1])
    delta = e * (horizon / seg_sum)[path_of]
    # start time of each sojourn within its own path
    cs = np.cumsum(delta)
    tau = cs - delta - np.concatenate(([0.0], cs))[offsets[:-1]][path_of]

    dirs = uniform_sphere_direction(d, rng, size=m)
    if v0 is not None:
        dirs[offsets[:-1]] = np.asarray(v0, dtype=float)

    for j, t in enumerate(t_points):
        w = np.clip(t - tau, 0.0, delta)
        contrib = dirs * w[:, None]
        summed = np.add.reduceat(contrib, offsets[:-1], axis=0)
        out_pos[:, j, :] = x0[None, :] + speeds[:, None] * summed
        started = (tau <= t).astype(np.int64)
        idx = np.add.reduceat(started, offsets[:-1]) - 1
        out_dir[:, j, :] = dirs[offsets[:-1] + idx]


def sample_flight_counts(nu: float, lam: float, t: float, n_paths: int,
                         rng: np.random.Generator, max_count: int) -> np.ndarray:
    """Counts at time t from Model-1 flight paths, exactly binned: per path
    at most max_count + 1 flight times are generated, so any value above
    max_count is reported as max_count + 1 (an overflow bin).  The law of
    the reported bins is exact."""
    ell = lamperti_sample(nu, rng, size=n_paths)
    gaps = rng.exponential(1.0, size=(n_paths, max_count + 1)) / (lam * ell)[:, None]
    taus = np.cumsum(gaps, axis=1)
    return np.sum(taus <= t, axis=1)


def empirical_msd_model1(params: SimParams, t_points, n_paths: int,
                         rng: np.random.Generator, l_cap: float = 1e4):
    """Monte Carlo mean squared displacement of Model-1 paths under the
    uniform-initial-direction measure, with standard errors.

    Paths whose Lamperti draw exceeds l_cap are not simulated (their event
    count is ~ lam * L * t) and contribute zero displacement instead.  Such
    a path has conditional MSD <= 2 c^2 t / (lam * L), so the omitted mass
    is below 2 c^2 t / (lam * l_cap) * P(L > l_cap) -- orders of magnitude
    under the Monte Carlo error at the default cap.  No renormalization is
    applied (renormalizing would bias the estimate upward by P(L > l_cap)).
    """
    ell = lamperti_sample(params.nu, rng, size=n_paths) \
        if params.nu < 1.0 else np.ones(n_paths)
    keep = ell <= l_cap
    t_points = np.asarray(t_points, dtype=float)
    sq = np.zeros((n_paths, t_points.shape[0]))
    pos, _ = flight_cloud(params.lam * ell[keep], params.c, t_points,
                          params.d, rng)
    sq[keep] = np.sum(pos ** 2, axis=2)
    return sq.mean(axis=0), sq.std(axis=0, ddof=1) / math.sqrt(n_paths)

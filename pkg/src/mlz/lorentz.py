"""Event-driven hard-sphere Lorentz dynamics in R^3.

Model 1: obstacle centers form a Mittag-Leffler (Cox) field -- one Lamperti
draw L directs a Poisson field of intensity rho*L -- and the particle moves
at constant speed c.  Model 2: the field is Poisson of intensity rho and the
particle speed is c*L.  Obstacles are persistent, so recollisions happen
naturally.

Obstacle realization is exact but on demand: space is tiled by cubic cells
(edge >= R) whose Poisson contents are drawn on first visit and cached for
the lifetime of the trajectory.  Restricted to any set of cells the law is
exactly the Poisson field, identities are stable across revisits, and the
work scales with the tube the particle actually explores rather than with
the reachable ball (whose expected volume is infinite over the Lamperti
mixture in model 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .pointproc import PointConfiguration, ball
from .specfun import lamperti_sample, mittag_leffler_composite

__all__ = [
    "StartedInsideError",
    "EventCapError",
    "CountCapError",
    "ReachCapError",
    "LorentzParams",
    "ObstacleField",
    "LorentzTrajectory",
    "ray_sphere_first_hit",
    "specular_reflect",
    "simulate_lorentz_model1",
    "simulate_lorentz_model2",
    "sample_first_flight_time",
    "free_flight_survival",
    "free_flight_atom",
]

EVENT_CAP = 10_000_000
COUNT_CAP = 100_000_000
REACH_CAP = 1.0e6
_SURFACE_EPS = 1e-9  # advance after reflection, in units of R
# when the expected number of obstacles covering the start exceeds this,
# coverage is declared without realizing the field (P(exposed) < e^-60)
_DENSE_START = 60.0


class StartedInsideError(RuntimeError):
    """The query origin lies inside an obstacle."""


class EventCapError(RuntimeError):
    """A trajectory exceeded its collision-event budget."""


class CountCapError(RuntimeError):
    """A field realized more obstacle centers than the configured cap."""


class ReachCapError(RuntimeError):
    """Model-2 reach c*L*t_max exceeded the configured maximum radius."""


@dataclass(frozen=True)
class LorentzParams:
    """Lorentz bundle: fractional order, obstacle intensity, sphere radius,
    base speed and horizon.  The Boltzmann-Grad rate is rho*c*pi*R^2."""

    nu: float
    rho: float
    R: float
    c: float
    t_max: float

    def __post_init__(self):
        if not 0 < self.nu <= 1:
            raise ValueError("nu must lie in (0, 1]")
        if min(self.rho, self.R, self.c, self.t_max) <= 0:
            raise ValueError("rho, R, c and t_max must be positive")

    @property
    def bg_rate(self) -> float:
        return self.rho * self.c * math.pi * self.R ** 2


def ray_sphere_first_hit(origin, direction, centers, radius: float,
                         t_window: float):
    """Earliest intersection of the ray origin + s*direction with any of the
    spheres, for s in (0, t_window] (s measured in length units along the
    unit direction).  Ties within 1e-12 break toward the lowest obstacle
    index.  Returns (s, index, hit_point) or None.

    Requires the origin to be strictly outside every sphere (distance
    > R - 1e-9); otherwise raises StartedInsideError.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 0:
        return None
    q = origin[None, :] - centers
    c0 = np.einsum("ij,ij->i", q, q) - radius ** 2
    if np.any(c0 < -2.0 * radius * 1e-9):
        raise StartedInsideError("ray origin lies inside an obstacle")
    b = q @ direction
    disc = b * b - c0
    ok = disc > 0.0
    s = np.where(ok, -b - np.sqrt(np.where(ok, disc, 0.0)), np.inf)
    s = np.where((s > 0.0) & (s <= t_window), s, np.inf)
    if not np.any(np.isfinite(s)):
        return None
    s_min = s.min()
    tied = np.flatnonzero(s <= s_min + 1e-12)
    idx = int(tied.min())
    return float(s[idx]), idx, origin + s[idx] * direction


def specular_reflect(v, normal) -> np.ndarray:
    """v' = v - 2 (v.n) n for unit v and outward unit normal n."""
    v = np.asarray(v, dtype=float)
    n = np.asarray(normal, dtype=float)
    return v - 2.0 * float(v @ n) * n


class ObstacleField:
    """Hard-sphere centers of a homogeneous Poisson field of the given
    intensity, realized cell by cell on demand and cached (see module
    docstring).  intensity_draw records the Cox draw for model-1 fields."""

    def __init__(self, intensity: float, radius: float, rng: np.random.Generator,
                 intensity_draw: float | None = None,
                 count_cap: int = COUNT_CAP, cell_size: float | None = None):
        if intensity <= 0 or radius <= 0:
            raise ValueError("intensity and radius must be positive")
        self.intensity = float(intensity)
        self.radius = float(radius)
        self.rng = rng
        self.intensity_draw = intensity_draw
        self.count_cap = int(count_cap)
        if cell_size is None:
            # ~1 expected center per cell; the 27-cell neighborhood rule
            # needs cell >= R, and cells beyond ~1 length unit waste marches
            cell_size = min(max(radius, (1.0 / intensity) ** (1.0 / 3.0)), 1.0)
        self.cell = float(max(cell_size, radius))
        self.mean_per_cell = self.intensity * self.cell ** 3
        self.n_realized = 0
        self._cells: dict[tuple, tuple | None] = {}
        self._hoods: dict[tuple, tuple | None] = {}

    def cell_index(self, point) -> tuple:
        return tuple(int(i) for i in np.floor(np.asarray(point) / self.cell))

    def _realize(self, idx: tuple):
        try:
            return self._cells[idx]
        except KeyError:
            pass
        n = int(self.rng.poisson(self.mean_per_cell))
        if n == 0:
            self._cells[idx] = None
            return None
        self.n_realized += n
        if self.n_realized > self.count_cap:
            raise CountCapError(
                f"field realized more than {self.count_cap:.0e} centers")
        lo = np.asarray(idx, dtype=float) * self.cell
        pts = lo + self.rng.uniform(0.0, self.cell, size=(n, 3))
        ids = np.arange(self.n_realized - n, self.n_realized)
        self._cells[idx] = (ids, pts)
        return self._cells[idx]

    def neighborhood(self, idx: tuple):
        """Stacked (ids, centers) of the 27 cells around idx; None if empty."""
        try:
            return self._hoods[idx]
        except KeyError:
            pass
        chunks = []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    got = self._realize((idx[0] + di, idx[1] + dj, idx[2] + dk))
                    if got is not None:
                        chunks.append(got)
        if not chunks:
            hood = None
        elif len(chunks) == 1:
            hood = chunks[0]
        else:
            hood = (np.concatenate([c[0] for c in chunks]),
                    np.vstack([c[1] for c in chunks]))
        self._hoods[idx] = hood
        return hood

    def covering_ids(self, point) -> np.ndarray:
        """Ids of obstacles containing the point."""
        hood = self.neighborhood(self.cell_index(point))
        if hood is None:
            return np.empty(0, dtype=int)
        ids, pts = hood
        inside = np.linalg.norm(pts - np.asarray(point), axis=1) < self.radius
        return ids[inside]

    def first_hit(self, origin, direction, s_max: float):
        """March the ray through the cell grid and return the earliest hit
        (s, obstacle_id, hit_point) with s in (0, s_max], or None."""
        origin = np.asarray(origin, dtype=float)
        direction = np.asarray(direction, dtype=float)
        h = self.cell
        ijk = list(self.cell_index(origin))
        step, t_next, t_delta = [], [], []
        for a in range(3):
            va = direction[a]
            if va > 1e-300:
                step.append(1)
                t_next.append(((ijk[a] + 1) * h - origin[a]) / va)
                t_delta.append(h / va)
            elif va < -1e-300:
                step.append(-1)
                t_next.append((ijk[a] * h - origin[a]) / va)
                t_delta.append(-h / va)
            else:
                step.append(0)
                t_next.append(math.inf)
                t_delta.append(math.inf)
        best_s = math.inf
        best_id = -1
        s_in = 0.0
        radius2 = self.radius ** 2
        while s_in <= s_max:
            hood = self.neighborhood(tuple(ijk))
            if hood is not None:
                ids, pts = hood
                q = origin[None, :] - pts
                b = q @ direction
                disc = b * b - (np.einsum("ij,ij->i", q, q) - radius2)
                ok = disc > 0.0
                if np.any(ok):
                    s = -b[ok] - np.sqrt(disc[ok])
                    cand = (s > 0.0) & (s <= s_max) & (s <= best_s + 1e-12)
                    if np.any(cand):
                        sc = s[cand]
                        idc = ids[ok][cand]
                        j = np.argmin(sc)
                        tie = np.flatnonzero(sc <= sc[j] + 1e-12)
                        pick = tie[np.argmin(idc[tie])]
                        better = sc[pick] < best_s - 1e-12
                        tied_lower = sc[pick] <= best_s + 1e-12 and idc[pick] < best_id
                        if better or tied_lower:
                            best_s = float(sc[pick])
                            best_id = int(idc[pick])
            axis = int(np.argmin(t_next))
            s_out = t_next[axis]
            if best_s <= s_out:
                return best_s, best_id, origin + best_s * direction
            s_in = s_out
            t_next[axis] += t_delta[axis]
            ijk[axis] += step[axis]
        if math.isfinite(best_s):
            return best_s, best_id, origin + best_s * direction
        return None

    def realized_configuration(self, region=None) -> PointConfiguration:
        """All centers realized so far, as a PointConfiguration."""
        pts = [c[1] for c in self._cells.values() if c is not None]
        pts = np.vstack(pts) if pts else np.empty((0, 3))
        if region is None:
            extent = float(np.abs(pts).max()) + self.cell if pts.size else self.cell
            region = ball(np.zeros(3), extent)
        return PointConfiguration(points=pts, region=region,
                                  intensity_draw=self.intensity_draw)


@dataclass
class LorentzTrajectory:
    """Piecewise-linear Lorentz path: event times, post-event directions
    (index 0 = initial), hit obstacle ids."""

    start: np.ndarray
    speed: float
    t_max: float
    times: np.ndarray
    directions: np.ndarray
    hit_ids: np.ndarray
    intensity_draw: float | None = None
    first_flight_time: float = math.inf
    field: ObstacleField | None = dc_field(default=None, repr=False)

    @property
    def n_collisions(self) -> int:
        return int(self.times.size)

    @property
    def has_recollision(self) -> bool:
        return self.hit_ids.size != np.unique(self.hit_ids).size

    def position(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max + 1e-12):
            raise ValueError("t outside [0, t_max]")
        scalar = t.ndim == 0
        ts = np.atleast_1d(t)
        starts = np.concatenate(([0.0], self.times))
        ends = np.concatenate((self.times, [np.inf]))
        w = np.clip(ts[:, None] - starts[None, :], 0.0, None)
        w = np.minimum(w, ends[None, :] - starts[None, :])
        out = self.start[None, :] + self.speed * w @ self.directions
        return out[0] if scalar else out

    def direction(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        return self.directions[idx]


def _run_dynamics(field: ObstacleField, x0, v0, speed: float, t_max: float,
                  event_cap: int) -> tuple:
    """Event loop: free flight, specular reflection, tiny surface nudge."""
    pos = np.asarray(x0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    t = 0.0
    times, dirs, ids = [], [v.copy()], []
    radius = field.radius
    while True:
        hit = field.first_hit(pos, v, speed * (t_max - t))
        if hit is None:
            break
        s, oid, point = hit
        t += s / speed
        times.append(t)
        ids.append(oid)
        hood = field.neighborhood(field.cell_index(point))
        ids_arr, pts_arr = hood
        center = pts_arr[np.flatnonzero(ids_arr == oid)[0]]
        normal = (point - center) / np.linalg.norm(point - center)
        v = specular_reflect(v, normal)
        v /= np.linalg.norm(v)
        dirs.append(v.copy())
        pos = point + _SURFACE_EPS * radius * v
        if len(times) >= event_cap:
            raise EventCapError(f"trajectory exceeded {event_cap} collisions")
    return np.array(times), np.vstack(dirs), np.array(ids, dtype=int)


def _exposed(field: ObstacleField, x0) -> bool:
    return field.covering_ids(x0).size == 0


def simulate_lorentz_model1(x0, v0, params: LorentzParams,
                            rng: np.random.Generator, *,
                            condition_start: bool = True,
                            l_cap: float | None = None,
                            event_cap: int = EVENT_CAP,
                            count_cap: int = COUNT_CAP,
                            max_attempts: int = 100_000) -> LorentzTrajectory:
    """Model-1 Lorentz trajectory: Mittag-Leffler obstacles, constant speed.

    condition_start=True rejects whole configurations (the Lamperti draw and
    the field together) until the start point is exposed; with conditioning
    disabled a covered start raises StartedInsideError, since hard-sphere
    dynamics from inside an obstacle is undefined.  l_cap optionally
    rejection-conditions the Lamperti draw (used by scaling experiments).
    """
    ball_vol = 4.0 / 3.0 * math.pi * params.R ** 3
    for _ in range(max_attempts):
        ell = float(lamperti_sample(params.nu, rng))
        if l_cap is not None and ell > l_cap:
            continue
        if params.rho * ell * ball_vol > _DENSE_START:
            if not condition_start:
                raise StartedInsideError("start point lies inside an obstacle")
            continue
        field = ObstacleField(params.rho * ell, params.R, rng,
                              intensity_draw=ell, count_cap=count_cap)
        if not _exposed(field, x0):
            if not condition_start:
                raise StartedInsideError("start point lies inside an obstacle")
            continue
        times, dirs, ids = _run_dynamics(field, x0, v0, params.c,
                                         params.t_max, event_cap)
        return LorentzTrajectory(
            start=np.asarray(x0, dtype=float), speed=params.c,
            t_max=params.t_max, times=times, directions=dirs, hit_ids=ids,
            intensity_draw=ell,
            first_flight_time=float(times[0]) if times.size else math.inf,
            field=field,
        )
    raise RuntimeError("exposure conditioning failed to accept a configuration")


def simulate_lorentz_model2(x0, v0, params: LorentzParams,
                            rng: np.random.Generator, *,
                            condition_start: bool = True,
                            l_cap: float | None = None,
                            speed_draw: float | None = None,
                            event_cap: int = EVENT_CAP,
                            count_cap: int = COUNT_CAP,
                            reach_cap: float = REACH_CAP,
                            max_attempts: int = 100_000) -> LorentzTrajectory:
    """Model-2 Lorentz trajectory: Poisson obstacles, random speed c*L.

    speed_draw injects a fixed Lamperti value (for conditional-law tests).
    The reach c*L*t_max is capped; heavy-tailed L can explode the domain.
    """
    if speed_draw is not None:
        ell = float(speed_draw)
    else:
        ell = float(lamperti_sample(params.nu, rng))
        if l_cap is not None:
            while ell > l_cap:
                ell = float(lamperti_sample(params.nu, rng))
    speed = params.c * ell
    if speed * params.t_max > reach_cap:
        raise ReachCapError(
            f"reach {speed * params.t_max:.3e} exceeds cap {reach_cap:.3e}")
    for _ in range(max_attempts):
        field = ObstacleField(params.rho, params.R, rng,
                              intensity_draw=None, count_cap=count_cap)
        if not _exposed(field, x0):
            if not condition_start:
                raise StartedInsideError("start point lies inside an obstacle")
            continue
        times, dirs, ids = _run_dynamics(field, x0, v0, speed,
                                         params.t_max, event_cap)
        return LorentzTrajectory(
            start=np.asarray(x0, dtype=float), speed=speed,
            t_max=params.t_max, times=times, directions=dirs, hit_ids=ids,
            intensity_draw=ell,
            first_flight_time=float(times[0]) if times.size else math.inf,
            field=field,
        )
    raise RuntimeError("exposure conditioning failed to accept a configuration")


def sample_first_flight_time(params: LorentzParams, rng: np.random.Generator,
                             *, model: int = 1, conditioned: bool = False,
                             t_obs: float | None = None) -> float:
    """Draw one free-flight time T: 0.0 when the start is covered (the atom,
    only reachable with conditioned=False), math.inf when censored at the
    observation horizon.  Only the first collision is resolved, so the cost
    is the visited tube, not the full dynamics."""
    t_obs = params.t_max if t_obs is None else t_obs
    x0 = np.zeros(3)
    v0 = np.array([0.0, 0.0, 1.0])
    ball_vol = 4.0 / 3.0 * math.pi * params.R ** 3
    while True:
        ell = float(lamperti_sample(params.nu, rng))
        if model == 1:
            intensity = params.rho * ell
            speed = params.c
        else:
            intensity = params.rho
            speed = params.c * ell
        if intensity * ball_vol > _DENSE_START:
            # start coverage is certain to within e^-60
            if conditioned:
                continue
            return 0.0
        field = ObstacleField(intensity, params.R, rng,
                              intensity_draw=ell if model == 1 else None)
        if not _exposed(field, x0):
            if conditioned:
                continue
            return 0.0
        hit = field.first_hit(x0, v0, speed * t_obs)
        return hit[0] / speed if hit is not None else math.inf


def free_flight_survival(nu: float, rho: float, R: float, c: float, t) -> float | np.ndarray:
    """P(T > t) for the model-1 free flight: the zero-count probability of
    the swept cylinder-plus-cap region, M_nu(-(rho(pi R^2 c t + 4/3 pi R^3))^nu
    in composite form)."""
    ts = np.asarray(t, dtype=float)
    vols = rho * (math.pi * R ** 2 * c * ts + 4.0 / 3.0 * math.pi * R ** 3)
    if ts.ndim == 0:
        return mittag_leffler_composite(nu, float(vols))
    return np.array([mittag_leffler_composite(nu, float(v)) for v in vols])


def free_flight_atom(nu: float, rho: float, R: float) -> float:
    """P(T = 0): the start point is covered by some obstacle."""
    return 1.0 - mittag_leffler_composite(nu, rho * 4.0 / 3.0 * math.pi * R ** 3)

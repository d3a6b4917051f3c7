"""Experiments, statistics and reproducible orchestration.

Scaling-limit experiments (Boltzmann-Grad, diffusive) compare simulated
clouds level by level with two-sample distances carrying permutation
p-values; trend assertions use an isotonic-versus-constant permutation
test so no convergence rate is hard-coded.  All Monte Carlo work is split
into a fixed batch layout driven by counter-based random streams, so
results are byte-identical for any worker-thread count.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.stats import ks_2samp

from . import anomdiff, flights, kinetics, lorentz, pointproc, specfun
from .flights import SimParams

__all__ = [
    "seed_streams",
    "two_sample_distance",
    "DistanceResult",
    "energy_distance",
    "isotonic_trend_test",
    "ExperimentConfig",
    "EmpiricalSummary",
    "run_bg_experiment",
    "run_diffusive_experiment",
    "run_law_suite",
    "available_suites",
    "write_csv",
    "format_float",
]


# ---------------------------------------------------------------------------
# Random streams and deterministic parallelism
# ---------------------------------------------------------------------------

def seed_streams(master_seed: int, n_batches: int) -> list[np.random.Generator]:
    """n_batches independent generators derived from the master seed by
    counter-based (Philox) splitting; deterministic in (seed, n)."""
    if n_batches < 1:
        raise ValueError("n_batches must be >= 1")
    seq = np.random.SeedSequence(master_seed)
    return [np.random.Generator(np.random.Philox(child))
            for child in seq.spawn(n_batches)]


def _map_batches(worker, n_items: int, streams, threads: int):
    """Split n_items over the fixed stream layout and reduce in batch order,
    so the result does not depend on the thread count."""
    n_batches = len(streams)
    sizes = [n_items // n_batches + (1 if b < n_items % n_batches else 0)
             for b in range(n_batches)]
    if threads <= 1:
        return [worker(size, stream) for size, stream in zip(sizes, streams)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, size, stream)
                   for size, stream in zip(sizes, streams)]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Two-sample distances
# ---------------------------------------------------------------------------

@dataclass
class DistanceResult:
    statistic: float
    p_value: float
    metric: str
    n_a: int
    n_b: int


def _pairwise_sum(a: np.ndarray, b: np.ndarray, block: int = 512) -> float:
    total = 0.0
    for i in range(0, a.shape[0], block):
        chunk = a[i:i + block]
        d = np.sqrt(((chunk[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))
        total += d.sum()
    return total


def energy_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample energy statistic 2 E|X-Y| - E|X-X'| - E|Y-Y'| (zero in
    expectation iff the laws coincide), with unbiased within-sample means
    (diagonal excluded), computed blockwise without an n^2 matrix.  Under
    the null the statistic fluctuates around zero and may be negative."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError("clouds must share the dimension")
    na, nb = a.shape[0], b.shape[0]
    if na < 2 or nb < 2:
        raise ValueError("need at least two points per cloud")
    dab = _pairwise_sum(a, b) / (na * nb)
    daa = _pairwise_sum(a, a) / (na * (na - 1))
    dbb = _pairwise_sum(b, b) / (nb * (nb - 1))
    return float(2.0 * dab - daa - dbb)


def two_sample_distance(cloud_a, cloud_b, metric: str = "ks-scalar",
                        n_perm: int = 200,
                        rng: np.random.Generator | None = None,
                        perm_subsample: int | None = None) -> DistanceResult:
    """Distance between two sample clouds plus a permutation p-value.

    metric "ks-scalar" expects 1-d samples; "energy" expects (n, d) clouds.
    For large clouds the permutation null is evaluated on a random
    subsample of each cloud (the statistic itself always uses everything).
    """
    rng = rng or np.random.default_rng(0)
    a = np.asarray(cloud_a, dtype=float)
    b = np.asarray(cloud_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("clouds must be nonempty")
    if metric == "ks-scalar":
        if a.ndim != 1 or b.ndim != 1:
            raise ValueError("ks-scalar needs 1-d samples")
        stat = float(ks_2samp(a, b).statistic)
        pa, pb = a, b
        if perm_subsample and (a.size > perm_subsample or b.size > perm_subsample):
            pa = rng.choice(a, size=min(perm_subsample, a.size), replace=False)
            pb = rng.choice(b, size=min(perm_subsample, b.size), replace=False)
        pooled = np.concatenate([pa, pb])
        na = pa.size
        count = 0
        for _ in range(n_perm):
            perm = rng.permutation(pooled)
            if ks_2samp(perm[:na], perm[na:]).statistic >= stat - 1e-15:
                count += 1
        return DistanceResult(stat, (count + 1) / (n_perm + 1), metric,
                              a.size, b.size)
    if metric == "energy":
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        stat = energy_distance(a, b)
        pa, pb = a, b
        if perm_subsample and (a.shape[0] > perm_subsample
                               or b.shape[0] > perm_subsample):
            pa = a[rng.choice(a.shape[0], size=min(perm_subsample, a.shape[0]),
                              replace=False)]
            pb = b[rng.choice(b.shape[0], size=min(perm_subsample, b.shape[0]),
                              replace=False)]
        sub_stat = energy_distance(pa, pb)
        pooled = np.vstack([pa, pb])
        na, nb = pa.shape[0], pb.shape[0]
        # precomputed distance matrix makes each shuffle an index gather
        diff = pooled[:, None, :] - pooled[None, :, :]
        dmat = np.sqrt((diff ** 2).sum(axis=2))
        count = 0
        for _ in range(n_perm):
            idx = rng.permutation(pooled.shape[0])
            ia, ib = idx[:na], idx[na:]
            daa = dmat[np.ix_(ia, ia)].sum() / (na * (na - 1))
            dbb = dmat[np.ix_(ib, ib)].sum() / (nb * (nb - 1))
            dab = dmat[np.ix_(ia, ib)].mean()
            if 2.0 * dab - daa - dbb >= sub_stat - 1e-15:
                count += 1
        return DistanceResult(stat, (count + 1) / (n_perm + 1), metric,
                              a.shape[0], b.shape[0])
    raise ValueError(f"unknown metric {metric!r}")


def _pava_decreasing(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit of a nonincreasing sequence."""
    fit = [float(y[0])]
    weight = [1]
    for v in y[1:]:
        fit.append(float(v))
        weight.append(1)
        while len(fit) > 1 and fit[-2] < fit[-1]:
            total = fit[-2] * weight[-2] + fit[-1] * weight[-1]
            w = weight[-2] + weight[-1]
            fit[-2:] = [total / w]
            weight[-2:] = [w]
    return np.repeat(fit, weight)


def isotonic_trend_test(values) -> tuple[float, float]:
    """Exact permutation test of 'decreasing trend' against exchangeability:
    the statistic is the SSE improvement of the decreasing isotonic fit over
    the constant fit; the null enumerates all orderings of the observed
    values (feasible for the short level sequences used here)."""
    y = np.asarray(values, dtype=float)
    if y.size < 3 or y.size > 7:
        raise ValueError("trend test expects between 3 and 7 levels")

    def stat(seq):
        fit = _pava_decreasing(seq)
        sse_iso = float(((seq - fit) ** 2).sum())
        sse_const = float(((seq - seq.mean()) ** 2).sum())
        return sse_const - sse_iso

    obs = stat(y)
    perms = list(itertools.permutations(range(y.size)))
    count = sum(1 for p in perms if stat(y[list(p)]) >= obs - 1e-15)
    return obs, count / len(perms)


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

_KINDS = ("bg-model1", "bg-model2", "diffusive-flight1", "diffusive-flight2")

_CONFIG_FIELDS = {
    "kind", "nu", "lam", "c", "t", "schedule", "n_per_level", "master_seed",
    "l_cap", "event_cap", "n_batches", "d", "out",
}


@dataclass
class ExperimentConfig:
    """Mirrors the JSON config document field for field.

    schedule: for BG kinds a list of [R, rho] pairs satisfying
    rho*c*pi*R^2 = lam to 1e-12; for diffusive kinds a list of [c, lam]
    pairs satisfying c^2 = lam.

    d: flight dimension for diffusive kinds.  Default 2: the flight's limit
    clock under c^2 = lam is (2/d) t (forced by its mean squared
    displacement), so the stated unit-clock convergence to the anomalous
    diffusion is exact in d = 2 and carries a 2/3 variance deficit in
    d = 3.  BG kinds are hard-sphere dynamics and always 3-dimensional.
    """

    kind: str
    nu: float
    lam: float
    c: float
    t: float
    schedule: list
    n_per_level: int
    master_seed: int
    l_cap: float = 100.0
    event_cap: int = 200_000
    n_batches: int = 32
    d: int = 2
    out: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}")
        if self.kind.startswith("bg"):
            for r, rho in self.schedule:
                if abs(rho * self.c * math.pi * r ** 2 - self.lam) > 1e-12:
                    raise ValueError(
                        f"BG schedule violates rho*c*pi*R^2 = lam at R={r}")
        else:
            for c, lam in self.schedule:
                if abs(c ** 2 - lam) > 1e-12:
                    raise ValueError(
                        f"diffusive schedule violates c^2 = lam at c={c}")
        if self.n_per_level < 2 or self.n_batches < 1:
            raise ValueError("n_per_level and n_batches must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        unknown = set(data) - _CONFIG_FIELDS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class EmpiricalSummary:
    """Per-level distance estimates with p-values plus trend statistics."""

    kind: str
    levels: list
    trend_statistic: float
    trend_p_value: float
    config: dict
    runtime_seconds: float
    notes: list = field(default_factory=list)

    @property
    def distances(self) -> np.ndarray:
        return np.array([lv["distance"] for lv in self.levels])

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True,
                          default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# Boltzmann-Grad experiment
# ---------------------------------------------------------------------------

def _bg_lorentz_batch(model: int, params: lorentz.LorentzParams, t_eval: float,
                      l_cap: float, event_cap: int):
    sim = (lorentz.simulate_lorentz_model1 if model == 1
           else lorentz.simulate_lorentz_model2)

    def worker(size, rng):
        rad = np.empty(size)
        vdot = np.empty(size)
        frozen = np.zeros(size, dtype=bool)
        recoll = np.zeros(size, dtype=bool)
        capped = np.zeros(size, dtype=bool)
        for i in range(size):
            try:
                tr = sim(np.zeros(3), np.array([0.0, 0.0, 1.0]), params, rng,
                         condition_start=False, l_cap=l_cap,
                         event_cap=event_cap)
                rad[i] = float(np.linalg.norm(tr.position(t_eval)))
                vdot[i] = float(tr.direction(t_eval)[2])
                recoll[i] = tr.has_recollision
            except lorentz.StartedInsideError:
                # atom component: the single-time law keeps the initial
                # state, exactly as the T^R = 0 term of the Duhamel split
                rad[i] = 0.0
                vdot[i] = 1.0
                frozen[i] = True
            except (lorentz.EventCapError, lorentz.CountCapError,
                    lorentz.ReachCapError):
                rad[i] = math.nan
                vdot[i] = math.nan
                capped[i] = True
        return rad, vdot, frozen, recoll, capped

    return worker


def _bg_flight_cloud(model: int, nu: float, lam: float, c: float,
                     t_eval: float, n: int, l_cap: float, streams, threads):
    def worker(size, rng):
        ell = flights.conditioned_lamperti(nu, size, rng, l_cap)
        speeds = c if model == 1 else c * ell
        pos, dirs = flights.flight_cloud(lam * ell, speeds, [t_eval], 3, rng,
                                         v0=[0.0, 0.0, 1.0])
        return np.linalg.norm(pos[:, 0, :], axis=1), dirs[:, 0, 2]

    parts = _map_batches(worker, n, streams, threads)
    return (np.concatenate([p[0] for p in parts]),
            np.concatenate([p[1] for p in parts]))


def run_bg_experiment(cfg: ExperimentConfig, threads: int = 1) -> EmpiricalSummary:
    """Boltzmann-Grad convergence experiment.

    Per level, n Lorentz trajectories (unconditioned start: covered starts
    contribute their frozen initial state, the exact T^R = 0 component of
    the single-time law) and n limit-flight draws are compared through
    two-sample KS distances of |X_t - x0| and of V_t . v0.  Both sides
    condition the Lamperti mixture on L <= l_cap so the work per draw is
    finite; trajectories that exceed the event cap are excluded and counted.
    """
    if not cfg.kind.startswith("bg"):
        raise ValueError("config kind is not a BG experiment")
    model = 1 if cfg.kind.endswith("model1") else 2
    t0 = time.time()
    levels = []
    for li, (r, rho) in enumerate(cfg.schedule):
        params = lorentz.LorentzParams(nu=cfg.nu, rho=rho, R=r, c=cfg.c,
                                       t_max=cfg.t)
        streams = seed_streams(cfg.master_seed + 1000 * li, cfg.n_batches)
        worker = _bg_lorentz_batch(model, params, cfg.t, cfg.l_cap,
                                   cfg.event_cap)
        parts = _map_batches(worker, cfg.n_per_level, streams, threads)
        rad = np.concatenate([p[0] for p in parts])
        vdot = np.concatenate([p[1] for p in parts])
        frozen = np.concatenate([p[2] for p in parts])
        recoll = np.concatenate([p[3] for p in parts])
        capped = np.concatenate([p[4] for p in parts])
        keep = ~capped
        fl_streams = seed_streams(cfg.master_seed + 1000 * li + 500,
                                  cfg.n_batches)
        frad, fvdot = _bg_flight_cloud(model, cfg.nu, cfg.lam, cfg.c, cfg.t,
                                       cfg.n_per_level, cfg.l_cap,
                                       fl_streams, threads)
        prng = np.random.default_rng(cfg.master_seed + 77 + li)
        d_pos = two_sample_distance(rad[keep], frad, "ks-scalar",
                                    rng=prng, perm_subsample=2000)
        d_dir = two_sample_distance(vdot[keep], fvdot, "ks-scalar",
                                    rng=prng, perm_subsample=2000)
        levels.append({
            "R": r, "rho": rho,
            "distance": d_pos.statistic, "p_value": d_pos.p_value,
            "distance_direction": d_dir.statistic,
            "p_value_direction": d_dir.p_value,
            "recollision_fraction": float(recoll[keep].mean()),
            "frozen_fraction": float(frozen.mean()),
            "atom_analytic": lorentz.free_flight_atom(cfg.nu, rho, r),
            "n_capped": int(capped.sum()),
            "n": int(cfg.n_per_level),
        })
    dists = np.array([lv["distance"] for lv in levels])
    trend_stat, trend_p = isotonic_trend_test(dists) if len(levels) >= 3 \
        else (math.nan, math.nan)
    return EmpiricalSummary(
        kind=cfg.kind, levels=levels, trend_statistic=trend_stat,
        trend_p_value=trend_p, config=asdict(cfg),
        runtime_seconds=time.time() - t0,
        notes=[
            "start handling: unconditioned, covered starts frozen at the "
            "initial state (the T^R = 0 component)",
            f"Lamperti mixture conditioned on L <= {cfg.l_cap} on both sides",
        ],
    )


# ---------------------------------------------------------------------------
# Diffusive-limit experiment
# ---------------------------------------------------------------------------

def diffusive_flight_cloud(model: int, nu: float, c: float, lam: float,
                           t_points, n: int, l_cap: float, streams,
                           threads: int = 1, d: int = 2) -> np.ndarray:
    """Stacked flight positions (n, len(t_points)*d) at the evaluation times.

    The Lamperti draw is conditioned on the inversion-symmetric band
    (1/l_cap, l_cap): the rate-lam*L flight converges to the Brownian clock
    1/L, and by L =_d 1/L the band puts flight and W clouds under the same
    conditioning."""
    t_points = list(t_points)

    def worker(size, rng):
        ell = flights.conditioned_lamperti(nu, size, rng, l_cap, 1.0 / l_cap)
        speeds = c if model == 1 else c * ell
        pos, _ = flights.flight_cloud(lam * ell, speeds, t_points, d, rng)
        return pos.reshape(size, -1)

    return np.vstack(_map_batches(worker, n, streams, threads))


def diffusive_w_cloud(nu: float, t_points, n: int, l_cap: float, streams,
                      threads: int = 1, d: int = 2) -> np.ndarray:
    def worker(size, rng):
        w = anomdiff.sample_W_cloud(nu, list(t_points), d, size, rng,
                                    l_cap=l_cap, l_floor=1.0 / l_cap)
        return w.reshape(size, -1)

    return np.vstack(_map_batches(worker, n, streams, threads))


def run_diffusive_experiment(cfg: ExperimentConfig,
                             threads: int = 1) -> EmpiricalSummary:
    """Diffusive-limit experiment: per (c, lam) level with c^2 = lam, the
    flight's two-time joint cloud at {t/2, t} is compared with the
    anomalous-diffusion cloud by energy distance (permutation p-values on a
    subsample).  Both clouds condition the Lamperti mixture on L <= l_cap.
    """
    if not cfg.kind.startswith("diffusive"):
        raise ValueError("config kind is not a diffusive experiment")
    model = 1 if cfg.kind.endswith("flight1") else 2
    t_points = (cfg.t / 2.0, cfg.t)
    t0 = time.time()
    levels = []
    for li, (c, lam) in enumerate(cfg.schedule):
        streams = seed_streams(cfg.master_seed + 1000 * li, cfg.n_batches)
        cloud_f = diffusive_flight_cloud(model, cfg.nu, c, lam, t_points,
                                         cfg.n_per_level, cfg.l_cap, streams,
                                         threads, d=cfg.d)
        w_streams = seed_streams(cfg.master_seed + 1000 * li + 500,
                                 cfg.n_batches)
        cloud_w = diffusive_w_cloud(cfg.nu, t_points, cfg.n_per_level,
                                    cfg.l_cap, w_streams, threads, d=cfg.d)
        prng = np.random.default_rng(cfg.master_seed + 77 + li)
        res = two_sample_distance(cloud_f, cloud_w, "energy", rng=prng,
                                  perm_subsample=1000)
        levels.append({
            "c": c, "lam": lam,
            "distance": res.statistic, "p_value": res.p_value,
            "n": int(cfg.n_per_level),
        })
    dists = np.array([lv["distance"] for lv in levels])
    trend_stat, trend_p = isotonic_trend_test(dists) if len(levels) >= 3 \
        else (math.nan, math.nan)
    return EmpiricalSummary(
        kind=cfg.kind, levels=levels, trend_statistic=trend_stat,
        trend_p_value=trend_p, config=asdict(cfg),
        runtime_seconds=time.time() - t0,
        notes=[f"both clouds conditioned on the symmetric band "
               f"1/{cfg.l_cap} <= L <= {cfg.l_cap}",
               f"fdd time points {list(t_points)}"],
    )


# ---------------------------------------------------------------------------
# Law-check suites
# ---------------------------------------------------------------------------

def _entry(name, target, achieved, tol):
    return {"check": name, "target": float(target),
            "achieved": float(achieved), "tolerance": float(tol),
            "passed": bool(abs(achieved - target) <= tol)}


def _suite_msd(rng):
    out = []
    for t in (1.0, 2.0, 5.0):
        ana = flights.msd_model1(0.5, 1.0, 1.0, t)
        out.append(_entry(f"msd_model1 vs markov reduction nu=1 t={t}",
                          flights.msd_markov(1.0, 1.0, t),
                          flights.msd_model1(1.0, 1.0, 1.0, t), 1e-8))
    params = SimParams(nu=0.5, lam=1.0, c=1.0, d=3, t_max=5.0)
    means, ses = flights.empirical_msd_model1(params, [1.0, 5.0], 40_000, rng)
    for i, t in enumerate((1.0, 5.0)):
        ana = flights.msd_model1(0.5, 1.0, 1.0, t)
        out.append(_entry(f"empirical model-1 msd t={t} (3 SE)", ana,
                          float(means[i]), 3.0 * float(ses[i])))
    ts = np.geomspace(100.0, 10_000.0, 12)
    slope = np.polyfit(np.log(ts),
                       np.log([flights.msd_model1(0.5, 1.0, 1.0, t)
                               for t in ts]), 1)[0]
    out.append(_entry("msd log-log slope 2-nu (nu=0.5)", 1.5, slope, 0.03))
    return out


def _suite_freeflight(rng):
    out = []
    pars = lorentz.LorentzParams(nu=0.5, rho=1.0 / (math.pi * 0.05 ** 2),
                                 R=0.05, c=1.0, t_max=20.0)
    n = 4000
    ts = np.array([lorentz.sample_first_flight_time(pars, rng)
                   for _ in range(n)])
    atom = lorentz.free_flight_atom(0.5, pars.rho, pars.R)
    emp_atom = float(np.mean(ts == 0.0))
    out.append(_entry("free-flight atom mass (3 SE)", atom, emp_atom,
                      3.0 * math.sqrt(atom * (1 - atom) / n)))
    grid = np.linspace(1e-6, 20.0, 200)
    f_ana = 1.0 - lorentz.free_flight_survival(0.5, pars.rho, pars.R, 1.0, grid)
    f_emp = np.array([(ts <= g).mean() for g in grid])
    out.append(_entry("free-flight KS (vs survival law)", 0.0,
                      float(np.abs(f_emp - f_ana).max()), 0.03))
    # cap-to-zero limit of the survival at fixed lambda
    errs = [abs(lorentz.free_flight_survival(0.5, 1.0 / (math.pi * r * r), r,
                                             1.0, 1.0)
                - specfun.mittag_leffler_composite(0.5, 1.0))
            for r in (0.1, 0.05, 0.025)]
    out.append(_entry("survival -> Mittag-Leffler monotone (R to 0)", 1.0,
                      float(errs[0] > errs[1] > errs[2]), 0.0))
    return out


def _suite_efpp(rng):
    out = []
    for nu in (0.5, 0.8, 1.0):
        s = sum(flights.efpp_pmf(nu, 1.0, 1.0, n) for n in range(61))
        tail = flights.efpp_tail_prob(nu, 1.0, 1.0, 60)
        out.append(_entry(f"efpp pmf + tail normalization nu={nu}", 1.0,
                          s + tail, 1e-8))
    counts = flights.sample_flight_counts(0.5, 1.0, 1.0, 100_000, rng, 5)
    for k in range(3):
        pk = flights.efpp_pmf(0.5, 1.0, 1.0, k)
        out.append(_entry(f"efpp pmf({k}) Monte Carlo (3 SE)", pk,
                          float(np.mean(counts == k)),
                          3.0 * math.sqrt(pk * (1 - pk) / counts.size)))
    r = flights.small_interval_jump_prob(0.5, 1.0, 1e-6) \
        / (1e-3 / math.gamma(1.5))
    out.append(_entry("small-interval jump probability leading term", 1.0,
                      r, 0.01))
    return out


def _suite_pointproc(rng):
    out = []
    out.append(_entry("P(N=0) closed form (rho=|B|=1, nu=0.5)",
                      specfun.mittag_leffler_composite(0.5, 1.0),
                      pointproc.finite_dim_pmf(0.5, 1.0, [1.0], [0]), 1e-12))
    reg = pointproc.box([0, 0, 0], [1, 1, 1])
    n = 100_000
    zeros = 0
    ell = specfun.lamperti_sample(0.5, rng, size=n)
    zeros = int(np.sum(rng.poisson(ell) == 0))
    p0 = specfun.mittag_leffler_composite(0.5, 1.0)
    out.append(_entry("P(N=0) Monte Carlo (3 SE)", p0, zeros / n,
                      3.0 * math.sqrt(p0 * (1 - p0) / n)))
    tot = sum(pointproc.finite_dim_pmf(0.7, 1.0, [0.5, 0.5], [k1, k2])
              for k1 in range(41) for k2 in range(41))
    tail = pointproc.count_tail_prob(0.7, 1.0, [0.5, 0.5], 40)
    out.append(_entry("finite-dim pmf + tail normalization", 1.0,
                      tot + tail, 1e-6))
    xs = np.linspace(10.0, 100.0, 20)
    slope = np.polyfit(np.log(xs),
                       np.log([pointproc.nearest_distance_survival(0.5, 1.0, x)
                               for x in xs]), 1)[0]
    out.append(_entry("nearest-distance log-log slope -3 nu", -1.5, slope,
                      0.05))
    return out


def _suite_charfun(rng):
    out = []
    w = anomdiff.sample_W_cloud(0.5, [1.0], 3, 400_000, rng)
    for u in ([1.0, 0, 0], [0.5, 0.5, 0], [0, 0, 2.0]):
        u = np.asarray(u)
        vals = np.cos(w[:, 0, :] @ u)
        ana = anomdiff.charfun_W(0.5, u, 1.0)
        out.append(_entry(f"charfun u={u.tolist()} (3 SE)", ana,
                          float(vals.mean()),
                          3.0 * float(vals.std() / math.sqrt(vals.size))))
    rep = anomdiff.self_similarity_check(0.5, 4.0, [1.0, 2.0],
                                         np.array([0.3, -0.2]), d=1)
    out.append(_entry("self-similarity analytic identity", 0.0,
                      rep.analytic_gap, 1e-12))
    return out


def _suite_kinetics(rng):
    out = []
    g = np.array([[-1.0, 1.0], [1.0, -1.0]])
    f = kinetics.phillips_fractional_power(g, 0.5)
    out.append(_entry("phillips eigenvalue -2^0.5", -math.sqrt(2.0),
                      float(np.sort(np.linalg.eigvalsh(f))[0]), 1e-8))
    out.append(_entry("phillips zero row sums", 0.0,
                      float(np.abs(f.sum(axis=1)).max()), 1e-10))
    rep = kinetics.symbol_residual_sequence(0.5, -1.0, 1.0, 100, 4)
    out.append(_entry("symbol residual empirical order >= 1.2", 1.0,
                      float(rep.min_order >= 1.2 and rep.monotone), 0.0))
    tc = kinetics.check_time_change_identity(0.5, 1.0, 100_000, rng)
    out.append(_entry("time-change identity KS p > 0.01", 1.0,
                      float(tc.p_value > 0.01), 0.0))
    return out


def _suite_specfun(rng):
    from scipy.special import erfc
    out = [
        _entry("M_0.5(-1) = e erfc(1)", math.e * erfc(1.0),
               specfun.mittag_leffler(0.5, -1.0), 1e-10),
        _entry("M_1(-1) = 1/e", math.exp(-1.0),
               specfun.mittag_leffler(1.0, -1.0), 1e-14),
    ]
    worst = 0.0
    for nu in (0.3, 0.5, 0.8):
        for z in np.linspace(1e-9, 2.0, 21):
            worst = max(worst, abs(specfun._ml_series(nu, -(z ** nu))
                                   - specfun.lamperti_poisson_weight(nu, 0, z)))
    out.append(_entry("series vs quadrature agreement on z in [0,2]", 0.0,
                      worst, 1e-8))
    n = 1_000_000
    ell = specfun.lamperti_sample(0.5, rng, size=n)
    out.append(_entry("lamperti empirical median", 1.0,
                      float(np.median(ell)), 0.01))
    vals = np.exp(-ell)
    out.append(_entry("lamperti Laplace at eta=1 (3 SE)",
                      specfun.mittag_leffler_composite(0.5, 1.0),
                      float(vals.mean()),
                      3.0 * float(vals.std() / math.sqrt(n))))
    return out


_SUITES = {
    "specfun": _suite_specfun,
    "msd": _suite_msd,
    "freeflight": _suite_freeflight,
    "efpp": _suite_efpp,
    "pointproc": _suite_pointproc,
    "charfun": _suite_charfun,
    "kinetics": _suite_kinetics,
}


def available_suites() -> list[str]:
    return sorted(_SUITES)


def run_law_suite(suite_id: str, master_seed: int = 20310) -> dict:
    """Run one named formula-check suite; failures are report entries, not
    exceptions.  Unknown or empty ids raise with the available list."""
    if suite_id not in _SUITES:
        raise ValueError(
            f"unknown suite {suite_id!r}; available: {available_suites()}")
    rng = seed_streams(master_seed, 1)[0]
    t0 = time.time()
    checks = _SUITES[suite_id](rng)
    return {
        "suite": suite_id,
        "checks": checks,
        "n_passed": sum(c["passed"] for c in checks),
        "n_checks": len(checks),
        "runtime_seconds": time.time() - t0,
        "master_seed": master_seed,
    }


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def format_float(x) -> str:
    """Shortest round-trip decimal form; stable across runs and platforms."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: str, header: list[str], rows) -> None:
    """Write rows with canonical float formatting (byte-stable)."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_float(v) if not isinstance(v, str) else v
                              for v in row) + "\n")


def write_summary(path_base: str, summary: EmpiricalSummary) -> None:
    """CSV of the level table plus a JSON sidecar with the full config."""
    levels = summary.levels
    header = sorted(levels[0].keys())
    rows = [[lv[k] for k in header] for lv in levels]
    write_csv(path_base + ".csv", header, rows)
    with open(path_base + ".json", "w") as fh:
        fh.write(summary.to_json())

"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line per criterion.

Criteria 11 and 12 bundle several assertions; they are split into separate
tests so each sub-criterion reports its own line.  Two sub-criteria are
known to be unattainable for nu = 0.5 (the heavy Lamperti tail makes the
Lorentz atom scale like R^nu and keeps recollisions at the percent level
over this radius range); they are asserted as stated and fail with a
pointer to the analysis.  See the repository README for details.
"""

import json
import math

import numpy as np
import pytest
from scipy.special import erfc
from scipy.stats import chisquare

from mlz import anomdiff, flights, harness, kinetics, lorentz, pointproc, specfun


def report(criterion: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status} {detail}")
    return ok


SEED = 20310


# ---------------------------------------------------------------------------
# 1. Special functions
# ---------------------------------------------------------------------------

def test_criterion_01_special_functions():
    import time
    t0 = time.time()
    gap = abs(specfun.mittag_leffler(0.5, -1.0) - math.e * erfc(1.0))
    worst = 0.0
    for nu in (0.3, 0.5, 0.8):
        for z in np.linspace(1e-9, 2.0, 21):
            worst = max(worst, abs(specfun._ml_series(nu, -(z ** nu))
                                   - specfun.lamperti_poisson_weight(nu, 0, float(z))))
    rt = time.time() - t0
    ok = gap < 1e-10 and worst < 1e-8 and rt < 1.0
    assert report("1 (special functions)", ok,
                  f"identity gap {gap:.2e}, series-vs-quadrature {worst:.2e}, "
                  f"{rt:.2f}s")


# ---------------------------------------------------------------------------
# 2. Lamperti sampler
# ---------------------------------------------------------------------------

def test_criterion_02_lamperti_sampler():
    rng = harness.seed_streams(SEED + 2, 1)[0]
    n = 1_000_000
    ok = True
    worst = 0.0
    for nu in (0.3, 0.5, 0.8):
        draws = specfun.lamperti_sample(nu, rng, size=n)
        med = float(np.median(draws))
        ok &= abs(med - 1.0) < 0.01
        for eta in (0.5, 1.0, 2.0):
            vals = np.exp(-eta * draws)
            dev = abs(vals.mean() - specfun.mittag_leffler_composite(nu, eta))
            se = vals.std() / math.sqrt(n)
            worst = max(worst, dev / se)
            ok &= dev < 3.0 * se
    assert report("2 (Lamperti sampler)", ok,
                  f"worst Laplace deviation {worst:.2f} SE")


# ---------------------------------------------------------------------------
# 3. EFPP
# ---------------------------------------------------------------------------

def test_criterion_03_efpp():
    rng = harness.seed_streams(SEED + 3, 1)[0]
    ok = True
    pvals = []
    for nu in (0.5, 0.8, 1.0):
        counts = flights.sample_flight_counts(nu, 1.0, 1.0, 100_000, rng,
                                              max_count=5)
        probs = [flights.efpp_pmf(nu, 1.0, 1.0, k) for k in range(6)]
        obs = [int(np.sum(counts == k)) for k in range(6)]
        obs.append(int(np.sum(counts > 5)))
        expected = np.array(probs + [1.0 - sum(probs)]) * counts.size
        p = chisquare(obs, expected).pvalue
        pvals.append(p)
        ok &= p > 0.01
        s = sum(flights.efpp_pmf(nu, 1.0, 1.0, k) for k in range(61))
        tail = flights.efpp_tail_prob(nu, 1.0, 1.0, 60)
        ok &= abs(s + tail - 1.0) < 1e-8
    assert report("3 (EFPP)", ok,
                  f"chi-square p {['%.3f' % p for p in pvals]}, "
                  "pmf+tail normalization < 1e-8")


# ---------------------------------------------------------------------------
# 4. ML point process
# ---------------------------------------------------------------------------

def test_criterion_04_ml_point_process():
    rng = harness.seed_streams(SEED + 4, 1)[0]
    n = 100_000
    # count-marginal Monte Carlo (the count of a unit box is Poisson(L))
    ell = specfun.lamperti_sample(0.5, rng, size=n)
    zero = float(np.mean(rng.poisson(ell) == 0))
    p0 = specfun.mittag_leffler_composite(0.5, 1.0)
    se = math.sqrt(p0 * (1 - p0) / n)
    ok = abs(zero - p0) < 3 * se

    tot = sum(pointproc.finite_dim_pmf(0.7, 1.0, [0.5, 0.5], [k1, k2])
              for k1 in range(41) for k2 in range(41))
    tail = pointproc.count_tail_prob(0.7, 1.0, [0.5, 0.5], 40)
    ok &= abs(tot + tail - 1.0) < 1e-6

    from scipy.integrate import quad
    def cox(k):
        def f(u):
            l = u / (1 - u)
            mu = 2.0 * 0.7 * l
            pois = math.exp(k * math.log(mu) - mu - math.lgamma(k + 1))
            return pois * specfun.lamperti_pdf(0.5, l) / (1 - u) ** 2
        return quad(f, 0, 1, limit=300, epsabs=1e-13, epsrel=1e-11)[0]
    worst = max(abs(pointproc.finite_dim_pmf(0.5, 2.0, [0.7], [k]) - cox(k))
                for k in (0, 1, 3, 7))
    ok &= worst < 1e-8
    assert report("4 (ML point process)", ok,
                  f"P(N=0) dev {(zero - p0) / se:+.2f} SE, "
                  f"normalization ok, Cox agreement {worst:.1e}")


# ---------------------------------------------------------------------------
# 5. Free-flight law
# ---------------------------------------------------------------------------

def test_criterion_05_free_flight():
    rng = harness.seed_streams(SEED + 5, 1)[0]
    R = 0.05
    pars = lorentz.LorentzParams(nu=0.5, rho=1.0 / (math.pi * R * R), R=R,
                                 c=1.0, t_max=20.0)
    n = 10_000
    ts = np.array([lorentz.sample_first_flight_time(pars, rng)
                   for _ in range(n)])
    atom = lorentz.free_flight_atom(0.5, pars.rho, R)
    emp_atom = float(np.mean(ts == 0.0))
    se = math.sqrt(atom * (1 - atom) / n)
    grid = np.linspace(1e-6, 20.0, 400)
    f_ana = 1.0 - lorentz.free_flight_survival(0.5, pars.rho, R, 1.0, grid)
    f_emp = np.array([(ts <= g).mean() for g in grid])
    ks = float(np.abs(f_emp - f_ana).max())
    ok = ks < 0.02 and abs(emp_atom - atom) < 3 * se
    assert report("5 (free-flight law)", ok,
                  f"KS {ks:.4f} (< 0.02), atom dev "
                  f"{(emp_atom - atom) / se:+.2f} SE")


# ---------------------------------------------------------------------------
# 6. Mean squared displacement
# ---------------------------------------------------------------------------

def test_criterion_06_msd():
    rng = harness.seed_streams(SEED + 6, 1)[0]
    p = flights.SimParams(nu=0.5, lam=1.0, c=1.0, d=3, t_max=10.0)
    t_points = [1.0, 2.0, 5.0, 10.0]
    means, ses = flights.empirical_msd_model1(p, t_points, 100_000, rng)
    devs = []
    ok = True
    for i, t in enumerate(t_points):
        ana = flights.msd_model1(0.5, 1.0, 1.0, t)
        devs.append((means[i] - ana) / ses[i])
        ok &= abs(means[i] - ana) < 3 * ses[i]
    ts = np.geomspace(100.0, 10_000.0, 12)
    slope = np.polyfit(np.log(ts),
                       np.log([flights.msd_model1(0.5, 1.0, 1.0, float(t))
                               for t in ts]), 1)[0]
    ok &= abs(slope - 1.5) < 0.03
    red = max(abs(flights.msd_model1(1.0, 1.0, 1.0, t)
                  - flights.msd_markov(1.0, 1.0, t)) for t in t_points)
    ok &= red < 1e-8
    assert report("6 (MSD)", ok,
                  f"devs {['%+.2f' % d for d in devs]} SE, slope {slope:.4f}, "
                  f"nu=1 reduction {red:.1e}")


# ---------------------------------------------------------------------------
# 7. Duhamel vs simulation
# ---------------------------------------------------------------------------

def _h_acc(x, v):
    r2 = np.sum(np.asarray(x) ** 2, axis=-1)
    return np.exp(-r2) * (1.0 + np.asarray(v)[..., 2]) / 2.0


def test_criterion_07_duhamel():
    ok = True
    details = []
    for nu in (0.5, 1.0):
        rng = harness.seed_streams(SEED + 7 + int(10 * nu), 1)[0]
        p = flights.SimParams(nu=nu, lam=1.0, c=1.0, d=3, t_max=1.0)
        res = flights.duhamel_model1(_h_acc, np.zeros(3),
                                     np.array([0.0, 0.0, 1.0]), 1.0, p,
                                     truncation=6, n_mc=40_000, rng=rng)
        n = 200_000
        ell = (np.ones(n) if nu == 1.0
               else specfun.lamperti_sample(nu, rng, size=n))
        keep = ell <= 1e6
        pos, dirs = flights.flight_cloud(1.0 * ell[keep], 1.0, [1.0], 3, rng,
                                         v0=[0.0, 0.0, 1.0])
        vals = np.empty(n)
        vals[keep] = _h_acc(pos[:, 0, :], dirs[:, 0, :])
        vals[~keep] = 0.5  # capped paths: h at the origin-average, range 1
        gap = abs(res.value - vals.mean())
        budget = 3.0 * math.sqrt(res.se ** 2 + vals.var() / n) \
            + res.tail_bound + float(np.mean(~keep))
        ok &= gap < budget
        details.append(f"nu={nu}: gap {gap:.4f} <= {budget:.4f} "
                       f"(tail {res.tail_bound:.4f})")
    assert report("7 (Duhamel vs simulation)", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# 8. Anomalous diffusion
# ---------------------------------------------------------------------------

def test_criterion_08_anomalous_diffusion():
    rng = harness.seed_streams(SEED + 8, 1)[0]
    n = 1_000_000
    w = anomdiff.sample_W_cloud(0.5, [1.0], 3, n, rng)
    ok = True
    worst = 0.0
    for u in ([0.5, 0, 0], [1.0, 0, 0], [0, 1.5, 0], [0.7, -0.7, 0],
              [0, 0, 2.0]):
        u = np.asarray(u)
        vals = np.cos(w[:, 0, :] @ u)
        dev = abs(vals.mean() - anomdiff.charfun_W(0.5, u, 1.0))
        se = vals.std() / math.sqrt(n)
        worst = max(worst, dev / se)
        ok &= dev < 3 * se
    w2 = anomdiff.sample_W_cloud(0.5, [1.0, 2.0], 1, n, rng)
    u2 = np.array([0.5, -0.5])
    vals = np.cos(w2[:, :, 0] @ u2)
    dev2 = abs(vals.mean() - anomdiff.charfun_W_multi(0.5, u2, [1.0, 2.0], 1))
    ok &= dev2 < 3 * vals.std() / math.sqrt(n)
    rep = anomdiff.self_similarity_check(0.5, 4.0, [1.0, 2.0],
                                         np.array([0.3, -0.2]), d=1)
    ok &= rep.analytic_gap < 1e-12
    assert report("8 (anomalous diffusion)", ok,
                  f"worst single-time dev {worst:.2f} SE, multi-time ok, "
                  f"self-similarity gap {rep.analytic_gap:.1e}")


# ---------------------------------------------------------------------------
# 9. Fractional kinetics
# ---------------------------------------------------------------------------

def test_criterion_09_fractional_kinetics():
    rng = harness.seed_streams(SEED + 9, 1)[0]
    rep = kinetics.symbol_residual_sequence(0.5, -1.0, 1.0, 100, 5)
    ok = rep.monotone and rep.min_order >= 1.2
    g = kinetics.random_generator(3, rng)
    mrep = kinetics.matrix_residual_sequence(g, 0.5, 1.0, 25, 4)
    ok &= mrep.monotone
    f2 = kinetics.phillips_fractional_power(
        np.array([[-1.0, 1.0], [1.0, -1.0]]), 0.5)
    eig_gap = abs(np.sort(np.linalg.eigvalsh(f2))[0] + math.sqrt(2.0))
    row_gap = float(np.abs(f2.sum(axis=1)).max())
    g4 = kinetics.random_generator(4, rng)
    f4 = kinetics.phillips_fractional_power(g4, 0.6)
    vals, vecs = np.linalg.eig(g4.astype(complex))
    # principal branch -(-e)^nu, valid on Re(-e) >= 0 (complex pairs
    # allowed); snap the conservative zero mode to exactly zero first
    vals = np.where(np.abs(vals) < 1e-12, 0.0, vals)
    target = (vecs @ np.diag(-((-vals) ** 0.6)) @ np.linalg.inv(vecs)).real
    eig_gap = max(eig_gap, float(np.abs(f4 - target).max()))
    row_gap = max(row_gap, float(np.abs(f4.sum(axis=1)).max()))
    ok &= eig_gap < 1e-8 and row_gap < 1e-10
    assert report(
        "9 (fractional kinetics)", ok,
        f"symbol orders {np.round(rep.orders, 3).tolist()}, matrix residuals "
        f"{np.format_float_scientific(mrep.residuals[0], 2)}->"
        f"{np.format_float_scientific(mrep.residuals[-1], 2)}, "
        f"phillips eig gap {eig_gap:.1e}, row sums {row_gap:.1e}")


# ---------------------------------------------------------------------------
# 10. Time-change identity
# ---------------------------------------------------------------------------

def test_criterion_10_time_change():
    rng = harness.seed_streams(SEED + 10, 1)[0]
    rep = kinetics.check_time_change_identity(0.5, 1.0, 100_000, rng)
    ok = rep.p_value > 0.01
    assert report("10 (time change tL = H1(L2(t)))", ok,
                  f"KS {rep.ks_statistic:.4f}, p {rep.p_value:.3f}")


# ---------------------------------------------------------------------------
# 11. Boltzmann-Grad experiment
# ---------------------------------------------------------------------------

BG_SCHEDULE = [[r, 1.0 / (math.pi * r * r)] for r in (0.2, 0.1, 0.05, 0.025)]


@pytest.fixture(scope="module")
def bg_summaries():
    out = {}
    for kind, seed in (("bg-model1", 2025), ("bg-model2", 4051)):
        cfg = harness.ExperimentConfig(
            kind=kind, nu=0.5, lam=1.0, c=1.0, t=1.0, schedule=BG_SCHEDULE,
            n_per_level=10_000, master_seed=seed, n_batches=32,
            event_cap=100_000)
        out[kind] = harness.run_bg_experiment(cfg, threads=2)
    return out


def test_criterion_11a_bg_trend(bg_summaries):
    ok = True
    details = []
    for kind, s in bg_summaries.items():
        ok &= s.trend_p_value < 0.05
        details.append(f"{kind}: distances "
                       f"{np.round(s.distances, 4).tolist()}, trend p "
                       f"{s.trend_p_value:.4f}")
    assert report("11a (BG distances decreasing, p < 0.05)", ok,
                  "; ".join(details))


def test_criterion_11b_bg_contraction(bg_summaries):
    ok = True
    details = []
    for kind, s in bg_summaries.items():
        d = s.distances
        ok &= bool(d[-1] < d[0] / 4.0)
        details.append(f"{kind}: final/initial = {d[-1] / d[0]:.2f}")
    # Known defect for model 1 at nu = 0.5: every boundary effect (the
    # covered-start atom in particular) scales as R^nu = sqrt(R), so an
    # 8x radius range contracts distances by ~sqrt(8) = 2.8, not 4.
    # See the decisions ledger.
    assert report("11b (BG final distance < initial/4)", ok, "; ".join(details))


def test_criterion_11c_bg_recollisions(bg_summaries):
    ok = True
    details = []
    for kind, s in bg_summaries.items():
        seq = [lv["recollision_fraction"] for lv in s.levels]
        ok &= seq[-1] < 0.01
        details.append(f"{kind}: {np.round(seq, 4).tolist()}")
    # Known defect at nu = 0.5: the Lamperti tail keeps the mean free path
    # c/(lam L) below R with probability ~ (lam R/c)^(nu/2)-ish, so the
    # recollision fraction decays like a small power of R and sits at the
    # percent level on this schedule (the nu = 1 control is < 1%).
    assert report("11c (BG recollision fraction < 1% at finest level)", ok,
                  "; ".join(details))


# ---------------------------------------------------------------------------
# 12. Diffusive limit
# ---------------------------------------------------------------------------

DIFF_SCHEDULE = [[10.0, 100.0], [math.sqrt(1000.0), 1000.0], [100.0, 10_000.0]]


@pytest.fixture(scope="module")
def diffusive_summaries():
    out = {}
    for kind, seed in (("diffusive-flight1", 9), ("diffusive-flight2", 19)):
        cfg = harness.ExperimentConfig(
            kind=kind, nu=0.5, lam=1.0, c=1.0, t=1.0, schedule=DIFF_SCHEDULE,
            n_per_level=10_000, master_seed=seed, n_batches=32)
        out[kind] = harness.run_diffusive_experiment(cfg, threads=2)
    return out


def test_criterion_12a_diffusive_contraction(diffusive_summaries):
    # model 1 carries a real initial signal; model 2 converges so fast that
    # its distances are statistically zero at every level, making the
    # contraction inequality noise-dominated (see the ledger note)
    ok = True
    details = []
    for kind, s in diffusive_summaries.items():
        d = s.distances
        ok &= bool(d[-1] < d[0] / 3.0)
        details.append(f"{kind}: {np.format_float_scientific(d[0], 3)} -> "
                       f"{np.format_float_scientific(d[-1], 3)} "
                       f"(p {[round(lv['p_value'], 3) for lv in s.levels]})")
    assert report("12a (diffusive distances decreasing, final < initial/3)",
                  ok, "; ".join(details))


def test_criterion_12b_models_share_limit():
    rng = np.random.default_rng(SEED + 12)
    streams1 = harness.seed_streams(7101, 16)
    streams2 = harness.seed_streams(7202, 16)
    cloud1 = harness.diffusive_flight_cloud(1, 0.5, 100.0, 10_000.0,
                                            (0.5, 1.0), 10_000, 100.0,
                                            streams1, threads=2, d=2)
    cloud2 = harness.diffusive_flight_cloud(2, 0.5, 100.0, 10_000.0,
                                            (0.5, 1.0), 10_000, 100.0,
                                            streams2, threads=2, d=2)
    res = harness.two_sample_distance(cloud1, cloud2, "energy", rng=rng,
                                      perm_subsample=1500)
    ok = res.p_value > 0.01
    assert report("12b (model 1 vs model 2 at finest level)", ok,
                  f"energy {res.statistic:.2e}, p {res.p_value:.3f}")


# ---------------------------------------------------------------------------
# 13. Reproducibility
# ---------------------------------------------------------------------------

def test_criterion_13_reproducibility(tmp_path):
    sched = [[r, 1.0 / (math.pi * r * r)] for r in (0.2, 0.1)]
    cfg = harness.ExperimentConfig(
        kind="bg-model1", nu=0.5, lam=1.0, c=1.0, t=1.0, schedule=sched,
        n_per_level=400, master_seed=77, n_batches=16, event_cap=50_000)
    outputs = []
    for threads in (1, 8):
        s = harness.run_bg_experiment(cfg, threads=threads)
        base = str(tmp_path / f"rep_{threads}")
        harness.write_summary(base, s)
        outputs.append((tmp_path / f"rep_{threads}.csv").read_bytes())
    ok = outputs[0] == outputs[1]
    # and a second run with the same seed is byte-identical too
    s = harness.run_bg_experiment(cfg, threads=2)
    base = str(tmp_path / "rep_again")
    harness.write_summary(base, s)
    ok &= (tmp_path / "rep_again.csv").read_bytes() == outputs[0]
    assert report("13 (byte-identical reruns, threads 1 vs 8)", ok)

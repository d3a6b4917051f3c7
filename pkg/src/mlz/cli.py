"""Command-line interface: mlz <verb> ...

Verbs: specfun, pointproc, lorentz, flight, anomdiff, kinetics,
experiment, verify.  Global flags --seed, --threads, --out, --config are
accepted where they make sense; outputs are CSV with a header row (plus a
JSON sidecar for experiments and verification reports).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import anomdiff, flights, harness, kinetics, lorentz, pointproc, specfun


def _out_stream(path):
    return open(path, "w") if path else sys.stdout


def _emit_csv(path, header, rows):
    fh = _out_stream(path)
    try:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else harness.format_float(v)
                              for v in row) + "\n")
    finally:
        if path:
            fh.close()


def _cmd_specfun(args):
    if args.action == "eval":
        zs = np.linspace(args.z_min, args.z_max, args.n_points)
        rows = [(args.nu, z, specfun.mittag_leffler_composite(args.nu, float(z)))
                for z in zs]
        _emit_csv(args.out, ["nu", "z", "ml_composite"], rows)
        return 0
    raise SystemExit(f"unknown specfun action {args.action!r}")


def _cmd_pointproc(args):
    rng = harness.seed_streams(args.seed, 1)[0]
    if args.action == "sample":
        region = pointproc.box([0.0, 0.0, 0.0], [args.side] * 3)
        if args.nu == 1.0:
            cfg = pointproc.sample_poisson(args.rho, region, rng)
        else:
            cfg = pointproc.sample_ml(args.rho, args.nu, region, rng)
        draw = cfg.intensity_draw if cfg.intensity_draw is not None else 1.0
        header = [f"x_rho={harness.format_float(args.rho)}"
                  f"_nu={harness.format_float(args.nu)}"
                  f"_L={harness.format_float(draw)}", "y", "z"]
        _emit_csv(args.out, header, [tuple(p) for p in cfg.points])
        return 0
    if args.action == "law":
        rows = [(n, pointproc.finite_dim_pmf(args.nu, args.rho, [args.volume], [n]))
                for n in range(args.n_max + 1)]
        _emit_csv(args.out, ["count", "probability"], rows)
        return 0
    raise SystemExit(f"unknown pointproc action {args.action!r}")


def _cmd_lorentz(args):
    params = lorentz.LorentzParams(nu=args.nu, rho=args.rho, R=args.R,
                                   c=args.c, t_max=args.t)
    streams = harness.seed_streams(args.seed, args.n)
    rows = []
    events = []
    sim = (lorentz.simulate_lorentz_model1 if args.model == 1
           else lorentz.simulate_lorentz_model2)
    for i, rng in enumerate(streams):
        tr = sim(np.zeros(3), np.array([0.0, 0.0, 1.0]), params, rng,
                 l_cap=args.l_cap)
        x = tr.position(args.t)
        v = tr.direction(args.t)
        rows.append((i, x[0], x[1], x[2], v[0], v[1], v[2],
                     tr.first_flight_time, tr.n_collisions,
                     int(tr.has_recollision)))
        if args.events:
            for k in range(tr.n_collisions):
                events.append((i, tr.times[k], int(tr.hit_ids[k])))
    _emit_csv(args.out, ["trajectory", "x", "y", "z", "vx", "vy", "vz",
                         "first_flight", "n_collisions", "recollision"], rows)
    if args.events:
        _emit_csv((args.out or "events") + ".events.csv",
                  ["trajectory", "time", "obstacle"], events)
    return 0


def _cmd_flight(args):
    rng = harness.seed_streams(args.seed, 1)[0]
    if args.action == "run":
        params = flights.SimParams(nu=args.nu, lam=args.lam, c=args.c,
                                   d=args.d, t_max=args.t)
        rows = []
        for i in range(args.n):
            if args.model == "markov":
                path = flights.simulate_markov_flight(params, np.zeros(args.d),
                                                      _e1(args.d), rng)
            elif args.model == "1":
                path = flights.simulate_flight_model1(params, np.zeros(args.d),
                                                      _e1(args.d), rng)
            else:
                path = flights.simulate_flight_model2(params, np.zeros(args.d),
                                                      _e1(args.d), rng)
            x = path.position(args.t)
            rows.append((i,) + tuple(x) + (path.count(args.t),
                        path.mixture_draw if path.mixture_draw else 1.0))
        _emit_csv(args.out, ["path"] + [f"x{j}" for j in range(args.d)]
                  + ["count", "mixture_draw"], rows)
        return 0
    if args.action == "law":
        rows = [(n, flights.efpp_pmf(args.nu, args.lam, args.t, n))
                for n in range(args.n_max + 1)]
        rows.append(("tail", flights.efpp_tail_prob(args.nu, args.lam, args.t,
                                                    args.n_max)))
        _emit_csv(args.out, ["count", "probability"], rows)
        return 0
    if args.action == "msd":
        ts = np.linspace(args.t / args.n_points, args.t, args.n_points)
        rows = [(t, flights.msd_model1(args.nu, args.lam, args.c, float(t)))
                for t in ts]
        _emit_csv(args.out, ["t", "msd"], rows)
        return 0
    raise SystemExit(f"unknown flight action {args.action!r}")


def _e1(d):
    v = np.zeros(d)
    v[-1] = 1.0
    return v


def _cmd_anomdiff(args):
    rng = harness.seed_streams(args.seed, 1)[0]
    times = [float(x) for x in args.times.split(",")]
    if args.action == "sample":
        rows = []
        for i in range(args.n):
            w = anomdiff.sample_W(args.nu, times, args.d, rng)
            for j, t in enumerate(times):
                rows.append((i, t) + tuple(w[j]))
        _emit_csv(args.out, ["path", "time"] + [f"x{j}" for j in range(args.d)],
                  rows)
        return 0
    if args.action == "charfun":
        w = anomdiff.sample_W_cloud(args.nu, [times[-1]], args.d, args.n, rng)
        rows = []
        for u1 in np.linspace(0.2, 3.0, 10):
            u = np.zeros(args.d)
            u[0] = u1
            emp = float(np.cos(w[:, 0, :] @ u).mean())
            ana = anomdiff.charfun_W(args.nu, u, times[-1])
            rows.append((u1, ana, emp))
        _emit_csv(args.out, ["u1", "analytic", "monte_carlo"], rows)
        return 0
    raise SystemExit(f"unknown anomdiff action {args.action!r}")


def _cmd_kinetics(args):
    rng = harness.seed_streams(args.seed, 1)[0]
    if args.case == "symbol":
        rep = kinetics.symbol_residual_sequence(args.nu, -1.0, 1.0, 50,
                                                args.refinements)
        rows = list(zip(rep.dts, rep.residuals,
                        np.concatenate((rep.orders, [math.nan]))))
        _emit_csv(args.out, ["dt", "max_residual", "empirical_order"], rows)
        return 0
    if args.case == "matrix":
        g = kinetics.random_generator(3, rng)
        rep = kinetics.matrix_residual_sequence(g, args.nu, 1.0, 25,
                                                args.refinements)
        rows = list(zip(rep.dts, rep.residuals,
                        np.concatenate((rep.orders, [math.nan]))))
        _emit_csv(args.out, ["dt", "max_residual", "empirical_order"], rows)
        return 0
    if args.case == "time-change":
        rep = kinetics.check_time_change_identity(args.nu, 1.0, 100_000, rng)
        _emit_csv(args.out, ["ks_statistic", "p_value", "n"],
                  [(rep.ks_statistic, rep.p_value, rep.n)])
        return 0
    raise SystemExit(f"unknown kinetics case {args.case!r}")


def _cmd_experiment(args):
    with open(args.config) as fh:
        cfg = harness.ExperimentConfig.from_json(fh.read())
    if cfg.kind.startswith("bg"):
        summary = harness.run_bg_experiment(cfg, threads=args.threads)
    else:
        summary = harness.run_diffusive_experiment(cfg, threads=args.threads)
    base = args.out or cfg.out or "experiment"
    harness.write_summary(base, summary)
    print(f"wrote {base}.csv and {base}.json "
          f"({summary.runtime_seconds:.1f}s)")
    return 0


def _cmd_verify(args):
    suites = args.suites.split(",") if args.suites else harness.available_suites()
    reports = []
    failed = 0
    for sid in suites:
        rep = harness.run_law_suite(sid, master_seed=args.seed)
        reports.append(rep)
        failed += rep["n_checks"] - rep["n_passed"]
        print(f"suite {sid}: {rep['n_passed']}/{rep['n_checks']} passed "
              f"({rep['runtime_seconds']:.1f}s)")
        for c in rep["checks"]:
            if not c["passed"]:
                print(f"  FAIL {c['check']}: target {c['target']} "
                      f"achieved {c['achieved']} tol {c['tolerance']}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(reports, fh, indent=2, sort_keys=True)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlz",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("specfun", help="special-function tables")
    sp.add_argument("action", choices=["eval"])
    sp.add_argument("--nu", type=float, default=0.5)
    sp.add_argument("--z-min", type=float, default=0.0)
    sp.add_argument("--z-max", type=float, default=5.0)
    sp.add_argument("--n-points", type=int, default=21)
    sp.add_argument("--out")
    sp.set_defaults(func=_cmd_specfun)

    pp = sub.add_parser("pointproc", help="point-process samples and laws")
    pp.add_argument("action", choices=["sample", "law"])
    pp.add_argument("--rho", type=float, default=1.0)
    pp.add_argument("--nu", type=float, default=0.5)
    pp.add_argument("--side", type=float, default=1.0)
    pp.add_argument("--volume", type=float, default=1.0)
    pp.add_argument("--n-max", type=int, default=20)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--out")
    pp.set_defaults(func=_cmd_pointproc)

    lz = sub.add_parser("lorentz", help="Lorentz trajectories")
    lz.add_argument("action", choices=["run"])
    lz.add_argument("--model", type=int, choices=[1, 2], default=1)
    lz.add_argument("--nu", type=float, default=0.5)
    lz.add_argument("--rho", type=float, required=True)
    lz.add_argument("--R", type=float, required=True)
    lz.add_argument("--c", type=float, default=1.0)
    lz.add_argument("--t", type=float, default=1.0)
    lz.add_argument("--n", type=int, default=10)
    lz.add_argument("--l-cap", type=float, default=None)
    lz.add_argument("--seed", type=int, default=0)
    lz.add_argument("--events", action="store_true",
                    help="also write the full event log")
    lz.add_argument("--out")
    lz.set_defaults(func=_cmd_lorentz)

    fp = sub.add_parser("flight", help="random-flight paths and laws")
    fp.add_argument("action", choices=["run", "law", "msd"])
    fp.add_argument("--model", choices=["markov", "1", "2"], default="1")
    fp.add_argument("--nu", type=float, default=0.5)
    fp.add_argument("--lam", type=float, default=1.0)
    fp.add_argument("--c", type=float, default=1.0)
    fp.add_argument("--d", type=int, default=3)
    fp.add_argument("--t", type=float, default=1.0)
    fp.add_argument("--n", type=int, default=10)
    fp.add_argument("--n-max", type=int, default=20)
    fp.add_argument("--n-points", type=int, default=20)
    fp.add_argument("--seed", type=int, default=0)
    fp.add_argument("--out")
    fp.set_defaults(func=_cmd_flight)

    ad = sub.add_parser("anomdiff", help="anomalous-diffusion samples")
    ad.add_argument("action", choices=["sample", "charfun"])
    ad.add_argument("--nu", type=float, default=0.5)
    ad.add_argument("--d", type=int, default=3)
    ad.add_argument("--times", default="0.5,1.0")
    ad.add_argument("--n", type=int, default=100)
    ad.add_argument("--seed", type=int, default=0)
    ad.add_argument("--out")
    ad.set_defaults(func=_cmd_anomdiff)

    kn = sub.add_parser("kinetics", help="fractional-equation residuals")
    kn.add_argument("verify", choices=["verify"])
    kn.add_argument("--case", choices=["symbol", "matrix", "time-change"],
                    default="symbol")
    kn.add_argument("--nu", type=float, default=0.5)
    kn.add_argument("--refinements", type=int, default=4)
    kn.add_argument("--seed", type=int, default=0)
    kn.add_argument("--out")
    kn.set_defaults(func=_cmd_kinetics)

    ex = sub.add_parser("experiment", help="scaling-limit experiments")
    ex.add_argument("--config", required=True)
    ex.add_argument("--threads", type=int, default=1)
    ex.add_argument("--out")
    ex.set_defaults(func=_cmd_experiment)

    vf = sub.add_parser("verify", help="formula-check suites")
    vf.add_argument("--suites", default=None,
                    help="comma-separated suite ids (default: all)")
    vf.add_argument("--seed", type=int, default=20310)
    vf.add_argument("--out")
    vf.set_defaults(func=_cmd_verify)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance gate: one test per criterion, tolerances pinned.

Each test prints a single PASS line with the measured numbers; pytest -v
gives the per-criterion pass/fail ledger.  Monte Carlo tests use fixed
seeds, so reruns are bit-identical.
"""

import csv
import json
import math
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from extremalclock import conditions, ehrenfest, engine, measures, pspin, stats
from extremalclock.cli import run, validate_config
from extremalclock.stats import MCAccumulator

import oracles


def toy_setup():
    """2-state complete graph, tau = C = 1: lambda^{-1} = 2 everywhere."""
    model = engine.CompleteGraphChain(2)
    env = engine.ConstantEnvironment(1.0, C=1.0)
    sched = engine.ScalingSchedule(n=2, a_n=10.0, log_c_n=0.0, theta_n=1,
                                   alpha_n=1.0, v_n=1)
    return model, env, sched


def test_criterion_01_ehrenfest_hitting_formulas():
    started = time.perf_counter()
    worst = 0.0
    for n in range(1, 51):
        chain = ehrenfest.EhrenfestChain(n)
        for l in range(1, n + 1):
            got = ehrenfest.expected_hitting_adjacent(chain, l)
            want = oracles.adjacent_hitting_linear_system(n, l)
            worst = max(worst, abs(got - want) / want)
        for d in range(1, (n + 1) // 2):
            assert ehrenfest.expected_hitting_from_zero(chain, d) \
                <= ehrenfest.hitting_bound(chain, d)
    elapsed = time.perf_counter() - started
    assert worst <= 1e-10
    assert elapsed < 1.0
    print(f"PASS criterion 1: adjacent-hitting max rel err {worst:.3g} "
          f"(<=1e-10), bound holds for all d<n/2, {elapsed:.2f}s")


def test_criterion_02_distance_process_identity():
    started = time.perf_counter()
    worst = ehrenfest.distance_process_check(6, 20, 100_000,
                                             np.random.default_rng(205))
    elapsed = time.perf_counter() - started
    assert worst <= 0.01
    assert elapsed < 30.0
    print(f"PASS criterion 2: max TV {worst:.5f} (<=0.01) over k<=20, "
          f"{elapsed:.2f}s")


def test_criterion_03_mixing_window_bound():
    started = time.perf_counter()
    lines = []
    for n in (3, 4, 5, 6):
        rep = conditions.mixing_report(n, 3 * n * n, (0, 1, 2))
        assert rep.verdict == "pass"
        assert rep.estimate <= 2.0 ** (-3 * n + 1)
        lines.append(f"n={n}: {rep.estimate:.3g}<= {2.0 ** (-3 * n + 1):.3g}")
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    print(f"PASS criterion 3: {'; '.join(lines)}, {elapsed:.2f}s")


def test_criterion_04_hamiltonian_covariance():
    started = time.perf_counter()
    n = 8
    x0 = np.ones(n)
    for p in (2, 3):
        states = [x0]
        for d in (1, 4, 8):
            y = x0.copy()
            y[:d] = -1
            states.append(y)
        H = pspin.sample_hamiltonians(n, p, states, 100_000,
                                      np.random.default_rng(400 + p))
        for j, d in enumerate((0, 1, 4, 8)):
            R = 1.0 - 2.0 * d / n
            target = n * R ** p
            acc = MCAccumulator.from_values(H[:, 0] * H[:, j])
            assert abs(acc.mean - target) <= 3.0 * acc.sem, (p, d)
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    print(f"PASS criterion 4: covariance within 3 SE of nR^p at "
          f"p in {{2,3}}, distances {{0,1,4,8}}, {elapsed:.2f}s")


def test_criterion_05_extremal_marginals_ks():
    started = time.perf_counter()
    measure = measures.TailMeasure.pareto(4.0)
    levels = measures.sample_sup_levels(measure, [0.5, 1.0, 2.0], 2.0, 0.05,
                                        100_000, np.random.default_rng(500))
    stats_seen = []
    for j, t in enumerate((0.5, 1.0, 2.0)):
        rep = stats.empirical_vs_extremal(levels[:, j], measure, t,
                                          significance=0.01)
        assert rep.passed, (t, rep.statistic, rep.threshold)
        stats_seen.append(f"t={t}: {rep.statistic:.4f}<{rep.threshold:.4f}")
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"PASS criterion 5: KS {'; '.join(stats_seen)}, {elapsed:.2f}s")


def test_criterion_06_range_avoidance_law():
    started = time.perf_counter()
    measure = measures.TailMeasure.pareto(4.0)
    lines = []
    for i, (t, s) in enumerate(((1.0, 1.0), (1.0, 3.0), (2.0, 1.0))):
        ind = measures.sample_record_avoidance(measure, t, s, 0.05, 100_000,
                                               np.random.default_rng(600 + i))
        acc = MCAccumulator.from_values(ind.astype(float))
        target = t / (t + s)
        assert acc.sem <= 0.005
        assert abs(acc.mean - target) <= 3.0 * acc.sem, (t, s)
        lines.append(f"({t},{s}): {acc.mean:.4f} vs {target:.4f}")
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"PASS criterion 6: {'; '.join(lines)}, {elapsed:.2f}s")


def test_criterion_07_condition31_bound():
    started = time.perf_counter()
    sched = pspin.make_schedule(16, 2, 0.25, 1.0)
    inst = pspin.build_instance(16, 2, 7001, beta=1.0, c=0.25)
    env = pspin.PSpinEnvironment(inst)
    model = pspin.HypercubeSRW(16)
    lines = []
    for i, delta in enumerate((0.5, 1.0, 2.0)):
        rep = conditions.condition31_estimate(model, env, sched, delta, 1.0,
                                              100_000,
                                              np.random.default_rng(700 + i))
        bound = 4.0 / (delta * sched.gamma * sched.beta)
        assert rep.target == bound
        assert rep.estimate <= bound + 3.0 * rep.se, delta
        assert rep.verdict == "pass"
        lines.append(f"delta={delta}: {rep.estimate:.3f}<={bound:.1f}")
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"PASS criterion 7: {'; '.join(lines)}, {elapsed:.2f}s")


def test_criterion_08_sandwich_inequalities():
    started = time.perf_counter()
    # Jensen sandwich on a heterogeneous 3-state chain, alpha = 1/2
    model = engine.CompleteGraphChain(3)
    env = engine.TabularEnvironment([1.0, math.e, 0.5], C=1.0)
    sched = engine.ScalingSchedule(n=2, a_n=12.0, log_c_n=0.5, theta_n=4,
                                   alpha_n=0.5, v_n=2)
    rng = np.random.default_rng(800)
    steps = sched.jumps_in(1.0)
    jensen_violations = 0
    for _ in range(10_000):
        traj = engine.simulate_trajectory(model, steps, rng, env=env)
        if not engine.jensen_sandwich_check(traj, sched, 1.0):
            jensen_violations += 1
    assert jensen_violations == 0

    # max <= sum <= max + log(theta) on p-spin blocks
    inst = pspin.build_instance(6, 2, 808, beta=0.5, c=0.25)
    penv = pspin.PSpinEnvironment(inst)
    cube = pspin.HypercubeSRW(6)
    blocks = engine.block_statistics(cube, penv, 108, 10_000,
                                     np.random.default_rng(801), want_max=True)
    slack = 1e-9
    indicator_violations = int(
        (blocks.log_maxes > blocks.log_sums + slack).sum()
        + (blocks.log_sums > blocks.log_maxes + math.log(108) + slack).sum())
    assert indicator_violations == 0
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    print(f"PASS criterion 8: 0 Jensen violations / 10^4 paths, "
          f"0 indicator violations / 10^4 blocks, {elapsed:.2f}s")


def _random_entrywise_pair(dim, rng):
    """(delta0, delta1) unit-diagonal PD with delta0 >= delta1 entrywise."""
    while True:
        g = np.abs(rng.standard_normal((dim, dim)))
        gram = g @ g.T
        scale = 1.0 / np.sqrt(np.diag(gram))
        delta0 = gram * scale[:, None] * scale[None, :]
        np.fill_diagonal(delta0, 1.0)
        off = delta0[~np.eye(dim, dtype=bool)]
        if off.max(initial=0.0) < 0.999:
            break
    chi = float(rng.uniform(0.2, 0.9))
    # shrinking toward I lowers every off-diagonal entry, keeps PD
    return delta0, chi * delta0 + (1.0 - chi) * np.eye(dim)


def test_criterion_09_gaussian_comparison():
    started = time.perf_counter()
    rng = np.random.default_rng(900)
    checks, violations = 0, 0
    for _ in range(50):
        dim = int(rng.integers(2, 7))
        delta0, delta1 = _random_entrywise_pair(dim, rng)
        for s in (0.5, 1.0, 2.0):
            mc0 = pspin.max_cdf_mc(delta0, s, 20_000, rng)
            mc1 = pspin.max_cdf_mc(delta1, s, 20_000, rng)
            lhs = mc0.mean - mc1.mean
            se = math.sqrt(mc0.sem ** 2 + mc1.sem ** 2)
            rhs = pspin.gaussian_comparison_rhs(delta0, delta1, s)
            checks += 1
            if lhs > rhs + 3.0 * se:
                violations += 1
    assert checks == 150 and violations == 0

    # 2x2: the LHS is computable exactly by bivariate-normal quadrature
    for rho0, rho1, s in ((0.5, 0.0, 1.0), (0.8, 0.3, 0.5), (0.6, 0.2, 2.0)):
        plackett = oracles.bivariate_max_cdf(s, rho0) - oracles.bivariate_max_cdf(s, rho1)
        direct = (oracles.bivariate_max_cdf_dblquad(s, rho0)
                  - oracles.bivariate_max_cdf_dblquad(s, rho1))
        assert abs(plackett - direct) <= 1e-6  # two independent quadratures
        rhs = pspin.gaussian_comparison_rhs(
            [[1.0, rho0], [rho0, 1.0]], [[1.0, rho1], [rho1, 1.0]], s)
        assert plackett <= rhs + 1e-6, (rho0, rho1, s)
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    print(f"PASS criterion 9: 0/150 violations; 2x2 exact LHS <= rhs "
          f"to 1e-6, {elapsed:.2f}s")


def test_criterion_10_trend_suites(tmp_path):
    started = time.perf_counter()
    res_v = run("verify", validate_config(
        {"out": str(tmp_path / "verify"), "seed": 2024}))
    flags = res_v["trend_flags"]
    by_kind = {}
    for f in flags:
        assert set(f) == {"functional", "u", "t", "values", "expected", "monotone"}
        assert len(f["values"]) == 3  # one entry per n in the default grid
        assert all(np.isfinite(f["values"]))
        recomputed = all(b <= a for a, b in zip(f["values"], f["values"][1:]))
        assert f["monotone"] == recomputed  # flag faithful to the series
        by_kind.setdefault(f["functional"], []).append(f)
    assert {k: len(v) for k, v in by_kind.items()} == {"nu": 3, "sigma": 3, "eta": 3}

    run("ageing", validate_config({"out": str(tmp_path / "ageing"), "seed": 31}))
    with open(tmp_path / "ageing" / "ageing.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["n"]) for r in rows] == [8, 12, 16]
    gaps = [abs(float(r["estimate"]) - 0.5) for r in rows]
    assert all(0.0 <= float(r["estimate"]) <= 1.0 for r in rows)
    ageing_monotone = all(b <= a for a, b in zip(gaps, gaps[1:]))

    res_var = run("variance", validate_config(
        {"out": str(tmp_path / "variance"), "seed": 17}))
    ratios = []
    for rep in res_var["reports"]:
        assert rep["target"] is not None and rep["target"] > 0.0
        assert np.isfinite(rep["estimate"]) and rep["estimate"] >= 0.0
        ratios.append(rep["estimate"] / rep["target"])
    assert len(ratios) == 3

    elapsed = time.perf_counter() - started
    assert elapsed < 1800.0
    monotone_count = sum(f["monotone"] for f in flags)
    print(f"PASS criterion 10: {monotone_count}/9 condition trends monotone "
          f"(rest flagged); ageing gaps {'monotone' if ageing_monotone else 'flagged'} "
          f"{[f'{g:.3f}' for g in gaps]}; variance ratios "
          f"{[f'{r:.3f}' for r in ratios]}; {elapsed:.1f}s")


def test_criterion_11_toy_chain_oracles():
    started = time.perf_counter()
    model, env, sched = toy_setup()
    reps = 100_000
    q = conditions.q_tail(model, env, sched, 0, 1.0, reps,
                          np.random.default_rng(1100))
    assert abs(q.mean - math.exp(-0.5)) <= 3.0 * q.sem
    nu = conditions.nu_t(model, env, sched, 1.0, 1.0, reps,
                         np.random.default_rng(1101))
    assert abs(nu.estimate - 10.0 * math.exp(-0.5)) <= 3.0 * nu.se
    sg = conditions.sigma_sq_t(model, env, sched, 1.0, 1.0, reps,
                               np.random.default_rng(1102))
    assert abs(sg.estimate - 10.0 * math.exp(-1.0)) <= 3.0 * sg.se
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    print(f"PASS criterion 11: q={q.mean:.4f}~{math.exp(-0.5):.4f}, "
          f"nu={nu.estimate:.3f}~{10 * math.exp(-0.5):.3f}, "
          f"sigma2={sg.estimate:.3f}~{10 * math.exp(-1.0):.3f}, {elapsed:.2f}s")


def test_criterion_12_thread_determinism(tmp_path):
    cfg = {"n_grid": [8, 12], "p": 2, "c": 0.05, "u_grid": [0.5, 1.0],
           "t_grid": [1.0], "delta_grid": [1.0], "replicas": 300,
           "inner_replicas": 50, "seed": 99}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    payloads, csvs = [], []
    for threads, name in ((1, "one"), (8, "eight")):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "extremalclock", "verify",
             "--config", str(cfg_path), "--threads", str(threads),
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads((out / "results.json").read_text())
        payload.pop("runtime_seconds")  # wall time is the one nondeterministic field
        payloads.append(payload)
        csvs.append((out / "conditions.csv").read_bytes()
                    + (out / "trends.csv").read_bytes())
    assert payloads[0] == payloads[1]
    assert csvs[0] == csvs[1]
    print("PASS criterion 12: results.json and CSV content identical at "
          "1 vs 8 threads")

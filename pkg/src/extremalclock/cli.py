"""Batch entry point: config parsing, deterministic orchestration, result files.

One run = one subcommand + one JSON config.  Outputs land in the output
directory as results.json (summary: command, config hash, seed, table
names, condition reports, runtime), one CSV per table, and
manifest.json (versions, timestamp, the full config).  Identical
(config, seed) pairs give identical results.json apart from the
runtime_seconds field, regardless of thread count: every Monte Carlo
job owns a stream keyed by (seed, job index) and results are merged in
job order, never in completion order.

Subcommands:
  ppp        extremal-process marginals sampled from the Poisson construction
  sk-run     blocked clock samples and powered marginals on the p-spin landscape
  verify     condition estimators (0, 1-1, 2-1a, 2-1b, 3-1, DR) over the n-grid
  ehrenfest  hitting-time tables, occupation statistic, distance-process check
  ageing     two-time overlap probabilities against the t/(t+s) overlay
  compare    randomized max-CDF comparison bound checks
  variance   environment-replication variance trend

CSV conventions: '.' decimal, LF line endings, floats at 17 significant
digits, and (n, p, c, beta, seed) provenance columns on every row.
The only environment variable honored is EXTREMAL_CLOCK_OUT (fallback
output directory when neither --out nor the config names one).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import hashlib
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy

from . import __version__, conditions, ehrenfest, engine, measures, pspin, stats

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "config_hash", "run", "main"]

COMMANDS = ("ppp", "sk-run", "verify", "ehrenfest", "ageing", "compare", "variance")

OUT_ENV_VAR = "EXTREMAL_CLOCK_OUT"


class ConfigError(ValueError):
    """Schema violation; ``fields`` lists every offending entry."""

    def __init__(self, fields):
        self.fields = list(fields)
        super().__init__("invalid config fields: " + "; ".join(self.fields))


@dataclasses.dataclass
class ExperimentConfig:
    """One experiment: grids, budgets, seed, output routing.

    ``beta`` is a constant or a per-n sequence aligned with ``n_grid``.
    Fields irrelevant to a subcommand are ignored but still validated.
    """

    n_grid: tuple = (8, 12, 16)
    p: int = 2
    c: float = 0.05
    beta: object = 1.0
    u_grid: tuple = (0.5, 1.0, 2.0)
    t_grid: tuple = (1.0,)
    s_grid: tuple = (1.0,)
    epsilon: float = 0.5
    delta_grid: tuple = (0.5, 1.0, 2.0)
    v: float = 1.0
    replicas: int = 2000
    inner_replicas: int = 200
    step_budget: int = 10 ** 7
    seed: int = 0
    threads: int = 1
    out: str = ""
    # limit-object sampling (ppp)
    K: float = 4.0
    t_max: float = 2.0
    u_min: float = 0.05
    significance: float = 0.01
    # ehrenfest extras
    occupation_d: int = 2
    distance_steps: int = 20
    # compare extras
    pairs: int = 50
    # variance extras
    env_replicas: int = 40

    def beta_for(self, index: int) -> float:
        if isinstance(self.beta, (list, tuple)):
            return float(self.beta[index])
        return float(self.beta)

    def to_json_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        return d


_GRID_FIELDS = ("n_grid", "u_grid", "t_grid", "s_grid", "delta_grid")
_POSITIVE_INT_FIELDS = ("replicas", "inner_replicas", "step_budget", "threads",
                        "occupation_d", "distance_steps", "pairs", "env_replicas")
_POSITIVE_FIELDS = ("v", "K", "t_max", "u_min")


def validate_config(raw: dict) -> ExperimentConfig:
    """Normalize a raw mapping into ExperimentConfig or raise ConfigError."""
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    problems = [f"{k} (unknown field)" for k in sorted(set(raw) - known)]
    merged = {f.name: getattr(ExperimentConfig, f.name, None)
              for f in dataclasses.fields(ExperimentConfig)}
    defaults = ExperimentConfig()
    for name in known:
        merged[name] = raw.get(name, getattr(defaults, name))

    def flag(name, why):
        problems.append(f"{name} ({why})")

    for name in _GRID_FIELDS:
        value = merged[name]
        if not isinstance(value, (list, tuple)) or len(value) == 0:
            flag(name, "must be a non-empty list")
            continue
        if name == "n_grid":
            if not all(isinstance(x, int) and x >= 2 for x in value):
                flag(name, "entries must be integers >= 2")
        elif not all(isinstance(x, (int, float)) and x > 0 for x in value):
            flag(name, "entries must be positive numbers")
        merged[name] = tuple(value)
    if not (isinstance(merged["p"], int) and merged["p"] >= 2):
        flag("p", "must be an integer >= 2")
    if not (isinstance(merged["c"], (int, float)) and 0.0 < merged["c"] < 0.5):
        flag("c", "must lie in (0, 0.5)")
    beta = merged["beta"]
    if isinstance(beta, (list, tuple)):
        if isinstance(merged["n_grid"], tuple) and len(beta) != len(merged["n_grid"]):
            flag("beta", "sequence length must match n_grid")
        elif not all(isinstance(b, (int, float)) and b >= 0 for b in beta):
            flag("beta", "entries must be nonnegative numbers")
        else:
            merged["beta"] = tuple(float(b) for b in beta)
    elif not (isinstance(beta, (int, float)) and beta >= 0):
        flag("beta", "must be a nonnegative number or sequence")
    if not (isinstance(merged["epsilon"], (int, float)) and 0.0 < merged["epsilon"] < 1.0):
        flag("epsilon", "must lie in (0, 1)")
    if not (isinstance(merged["significance"], (int, float))
            and 0.0 < merged["significance"] < 1.0):
        flag("significance", "must lie in (0, 1)")
    for name in _POSITIVE_FIELDS:
        if not (isinstance(merged[name], (int, float)) and merged[name] > 0):
            flag(name, "must be positive")
    for name in _POSITIVE_INT_FIELDS:
        if not (isinstance(merged[name], int) and merged[name] >= 1):
            flag(name, "must be an integer >= 1")
    if not (isinstance(merged["seed"], int) and 0 <= merged["seed"] < 2 ** 64):
        flag("seed", "must be an integer in [0, 2^64)")
    if not isinstance(merged["out"], str):
        flag("out", "must be a string")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(**merged)


def load_config(path: str, overrides: dict | None = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(["<document> (top level must be a JSON object)"])
    if overrides:
        raw = dict(raw)
        raw.update(overrides)
    return validate_config(raw)


_HASH_EXCLUDED = ("threads", "out", "seed")


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of the numerically relevant config (threads/out/seed excluded)."""
    d = cfg.to_json_dict()
    for key in _HASH_EXCLUDED:
        d.pop(key, None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# deterministic job execution


def _job_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def _instance_seed(seed: int, n: int, p: int, replica: int = 0) -> int:
    ss = np.random.SeedSequence((seed, n, p, replica, 0x5EED))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_jobs(jobs, cfg: ExperimentConfig):
    """Run callables job(rng) -> result; output order == job order."""
    rngs = [_job_rng(cfg.seed, i) for i in range(len(jobs))]
    if cfg.threads <= 1 or len(jobs) <= 1:
        return [job(rng) for job, rng in zip(jobs, rngs)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(lambda pair: pair[0](pair[1]), zip(jobs, rngs)))


# ---------------------------------------------------------------------------
# table plumbing


def _fmt_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


class Table:
    """Ordered rows with fixed columns; provenance columns lead."""

    PROVENANCE = ("n", "p", "c", "beta", "seed")

    def __init__(self, name: str, columns):
        self.name = name
        self.columns = list(self.PROVENANCE) + list(columns)
        self.rows = []

    def add(self, prov: dict, **payload):
        row = []
        for col in self.columns:
            source = prov if col in Table.PROVENANCE else payload
            if col not in source:
                raise KeyError(f"table {self.name}: missing column {col!r}")
            row.append(source[col])
        self.rows.append(row)

    def write_csv(self, directory: str) -> str:
        path = os.path.join(directory, f"{self.name}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt_cell(v) for v in row])
        return path


def _prov(cfg: ExperimentConfig, n: int = 0, beta: float | None = None) -> dict:
    return {
        "n": n,
        "p": cfg.p,
        "c": cfg.c,
        "beta": cfg.beta_for(0) if beta is None else beta,
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# subcommands: each returns (tables, reports, extras, partial)


def _cmd_ppp(cfg: ExperimentConfig):
    measure = measures.TailMeasure.pareto(cfg.K)
    ks_table = Table("ppp_ks", ["t", "count", "statistic", "threshold", "passed"])
    q_table = Table("ppp_quantiles", ["t", "prob", "empirical", "theoretical"])

    def job(rng):
        levels = measures.sample_sup_levels(
            measure, cfg.t_grid, cfg.t_max, cfg.u_min, cfg.replicas, rng)
        return [stats.empirical_vs_extremal(levels[:, j], measure, t, cfg.significance)
                for j, t in enumerate(cfg.t_grid)]

    (reports_for_t,) = _run_jobs([job], cfg)
    prov = _prov(cfg)
    for t, rep in zip(cfg.t_grid, reports_for_t):
        ks_table.add(prov, t=t, count=rep.count, statistic=rep.statistic,
                     threshold=rep.threshold, passed=rep.passed)
        for prob, emp, theo in rep.quantile_table:
            q_table.add(prov, t=t, prob=prob, empirical=emp, theoretical=theo)
    extras = {"ks": [rep.to_json_dict() | {"t": t}
                     for t, rep in zip(cfg.t_grid, reports_for_t)]}
    return [ks_table, q_table], [], extras, False


def _powered_marginals(model, env, sched, t, reps, rng):
    """(S^b(t))^{alpha_n} samples: block sums plus the index-0 term."""
    k = sched.blocks_in(t)
    X = model.sample_stationary(reps, rng) if hasattr(model, "sample_stationary") \
        else [model.initial_state(rng) for _ in range(reps)]
    log_term0 = conditions._batch_log_inv_rates(model, env, X) \
        + np.log(rng.standard_exponential(reps))
    if k > 0:
        blocks = engine.block_statistics(model, env, sched.theta_n * k, reps, rng,
                                         starts=X)
        log_s = np.logaddexp(blocks.log_sums, log_term0) - sched.log_c_n
    else:
        log_s = log_term0 - sched.log_c_n
    return np.exp(sched.alpha_n * log_s), k


def _cmd_skrun(cfg: ExperimentConfig):
    ks_table = Table("skrun_ks", ["t", "k_n", "count", "statistic", "threshold",
                                  "mean", "median"])
    q_table = Table("skrun_quantiles", ["t", "prob", "empirical", "theoretical"])
    jobs, meta = [], []
    for i, n in enumerate(cfg.n_grid):
        beta = cfg.beta_for(i)
        sched = pspin.make_schedule(n, cfg.p, cfg.c, beta)
        inst = pspin.build_instance(n, cfg.p, _instance_seed(cfg.seed, n, cfg.p),
                                    beta=beta, c=cfg.c)
        env = pspin.PSpinEnvironment(inst)
        model = pspin.HypercubeSRW(n)
        for t in cfg.t_grid:
            meta.append((n, beta, t, sched))
            jobs.append(lambda rng, m=model, e=env, s=sched, tt=t:
                        _powered_marginals(m, e, s, tt, cfg.replicas, rng))
    results = _run_jobs(jobs, cfg)
    limit = measures.TailMeasure.pareto(2.0 * cfg.p)
    for (n, beta, t, sched), (samples, k) in zip(meta, results):
        rep = stats.empirical_vs_extremal(samples, limit, t, cfg.significance)
        prov = _prov(cfg, n=n, beta=beta)
        ks_table.add(prov, t=t, k_n=k, count=rep.count, statistic=rep.statistic,
                     threshold=rep.threshold, mean=float(np.mean(samples)),
                     median=float(np.median(samples)))
        for prob, emp, theo in rep.quantile_table:
            q_table.add(prov, t=t, prob=prob, empirical=emp, theoretical=theo)
    return [ks_table, q_table], [], {}, False


def _trend_monotone(values, decreasing: bool) -> bool:
    pairs = zip(values, values[1:])
    if decreasing:
        return all(b <= a for a, b in pairs)
    return all(b >= a for a, b in pairs)


def _cmd_verify(cfg: ExperimentConfig):
    cond_table = Table("conditions", ["id", "functional", "u", "t", "delta",
                                      "estimate", "se", "target", "verdict"])
    reports = []
    jobs, meta = [], []
    t0 = cfg.t_grid[0]
    for i, n in enumerate(cfg.n_grid):
        beta = cfg.beta_for(i)
        sched = pspin.make_schedule(n, cfg.p, cfg.c, beta)
        inst = pspin.build_instance(n, cfg.p, _instance_seed(cfg.seed, n, cfg.p),
                                    beta=beta, c=cfg.c)
        env = pspin.PSpinEnvironment(inst)
        model = pspin.HypercubeSRW(n)

        def add(kind, fn, **tags):
            meta.append((n, beta, kind, tags))
            jobs.append(fn)

        add("mixing", lambda rng, nn=n, s=sched:
            conditions.mixing_report(nn, s.theta_n, (0, 1, 2)))
        add("cond0", lambda rng, m=model, e=env, s=sched:
            conditions.condition0_check(m, e, s, cfg.v, cfg.replicas, rng))
        for u in cfg.u_grid:
            for t in cfg.t_grid:
                add("nu", lambda rng, m=model, e=env, s=sched, uu=u, tt=t:
                    conditions.nu_t(m, e, s, uu, tt, cfg.replicas, rng), u=u, t=t)
            add("sigma", lambda rng, m=model, e=env, s=sched, uu=u:
                conditions.sigma_sq_t(m, e, s, uu, t0, cfg.replicas, rng), u=u, t=t0)
            add("eta", lambda rng, m=model, e=env, s=sched, uu=u:
                conditions.pair_distance2_functional(m, e, s, uu, t0, cfg.replicas, rng),
                u=u, t=t0)
        for delta in cfg.delta_grid:
            add("cond31", lambda rng, m=model, e=env, s=sched, dd=delta:
                conditions.condition31_estimate(m, e, s, dd, t0, cfg.replicas, rng),
                delta=delta)

        def dr_job(rng, m=model, e=env, s=sched):
            steps = max(s.theta_n * s.blocks_in(t0), 1)
            traj = engine.simulate_trajectory(m, steps, rng, env=e)
            return conditions.dr_path_functionals(
                m, e, s, cfg.u_grid[0], t0, traj, cfg.inner_replicas, rng)

        add("dr", dr_job, u=cfg.u_grid[0], t=t0)

    results = _run_jobs(jobs, cfg)
    by_series = {}
    for (n, beta, kind, tags), result in zip(meta, results):
        reps_here = result if isinstance(result, tuple) else (result,)
        for rep in reps_here:
            reports.append(rep)
            prov = _prov(cfg, n=n, beta=beta)
            cond_table.add(
                prov, id=rep.id,
                functional=rep.parameters.get("functional", kind),
                u=tags.get("u", ""), t=tags.get("t", ""),
                delta=tags.get("delta", ""),
                estimate=rep.estimate, se=rep.se,
                target="" if rep.target is None else rep.target,
                verdict=rep.verdict)
        if kind in ("nu", "sigma", "eta"):
            key = (kind, tags.get("u"), tags.get("t"))
            by_series.setdefault(key, []).append((n, reps_here[0]))

    trend_table = Table("trends", ["functional", "u", "t", "values", "expected",
                                   "monotone"])
    trend_flags = []
    for (kind, u, t), entries in sorted(by_series.items()):
        entries.sort(key=lambda e: e[0])
        if kind == "nu":
            # approach to the limit target, gauged by absolute gap
            gaps = [abs(r.estimate - r.target) for _, r in entries
                    if r.target is not None]
            values, decreasing = gaps, True
        else:
            values, decreasing = [r.estimate for _, r in entries], True
        ok = _trend_monotone(values, decreasing)
        trend_flags.append({"functional": kind, "u": u, "t": t,
                            "values": [float(v) for v in values],
                            "expected": "decreasing", "monotone": ok})
        trend_table.add(_prov(cfg), functional=kind, u=u, t=t,
                        values=";".join(format(v, ".17g") for v in values),
                        expected="decreasing", monotone=ok)
    return [cond_table, trend_table], reports, {"trend_flags": trend_flags}, False


def _cmd_ehrenfest(cfg: ExperimentConfig):
    hit_table = Table("hitting", ["d", "expected", "bound", "within_bound"])
    occ_table = Table("occupation", ["d", "v_n", "estimate", "se", "exact",
                                     "within_3se"])
    dist_table = Table("distance_check", ["steps", "replicas", "max_tv"])
    win_table = Table("hitting_window", ["d", "lo", "hi", "probability"])
    jobs, meta = [], []
    for n in cfg.n_grid:
        chain = ehrenfest.EhrenfestChain(n)
        jobs.append(lambda rng, ch=chain, nn=n: ehrenfest.occupation_statistic(
            ch, min(cfg.occupation_d, max(1, nn // 2)), 3 * nn * nn,
            cfg.replicas, rng))
        meta.append(("occ", n, chain))
        jobs.append(lambda rng, nn=n: ehrenfest.distance_process_check(
            nn, cfg.distance_steps, cfg.replicas, rng))
        meta.append(("dist", n, chain))
    results = _run_jobs(jobs, cfg)
    for n in cfg.n_grid:
        chain = ehrenfest.EhrenfestChain(n)
        prov = _prov(cfg, n=n)
        for d in range(1, (n + 1) // 2):
            expected = ehrenfest.expected_hitting_from_zero(chain, d)
            bound = ehrenfest.hitting_bound(chain, d)
            hit_table.add(prov, d=d, expected=expected, bound=bound,
                          within_bound=expected <= bound)
            theta = 3 * n * n
            win_table.add(prov, d=d, lo=2 * d, hi=theta,
                          probability=ehrenfest.hitting_window_probability(
                              chain, d, 2 * d, theta))
    for (kind, n, chain), result in zip(meta, results):
        prov = _prov(cfg, n=n)
        if kind == "occ":
            d = min(cfg.occupation_d, max(1, n // 2))
            exact = ehrenfest.occupation_exact(chain, d, 3 * n * n)
            ok = abs(result.mean - exact) <= 3.0 * result.sem
            occ_table.add(prov, d=d, v_n=3 * n * n, estimate=result.mean,
                          se=result.sem, exact=exact, within_3se=ok)
        else:
            dist_table.add(prov, steps=cfg.distance_steps, replicas=cfg.replicas,
                           max_tv=result)
    return [hit_table, occ_table, dist_table, win_table], [], {}, False


def _cmd_ageing(cfg: ExperimentConfig):
    table = Table("ageing", ["t", "s", "epsilon", "estimate", "se", "completed",
                             "truncated", "limit"])
    jobs, meta = [], []
    for i, n in enumerate(cfg.n_grid):
        beta = cfg.beta_for(i)
        sched = pspin.make_schedule(n, cfg.p, cfg.c, beta)
        inst = pspin.build_instance(n, cfg.p, _instance_seed(cfg.seed, n, cfg.p),
                                    beta=beta, c=cfg.c)
        env = pspin.PSpinEnvironment(inst)
        model = pspin.HypercubeSRW(n)
        for t in cfg.t_grid:
            for s in cfg.s_grid:
                meta.append((n, beta, t, s))
                jobs.append(lambda rng, m=model, e=env, sc=sched, tt=t, ss=s:
                            engine.estimate_correlation(
                                m, e, sc, cfg.epsilon, tt, ss, cfg.replicas, rng,
                                step_budget=cfg.step_budget))
    results = _run_jobs(jobs, cfg)
    partial = False
    for (n, beta, t, s), est in zip(meta, results):
        partial = partial or est.truncated > 0
        table.add(_prov(cfg, n=n, beta=beta), t=t, s=s, epsilon=cfg.epsilon,
                  estimate=est.value, se=est.se, completed=est.completed,
                  truncated=est.truncated, limit=t / (t + s))
    return [table], [], {}, partial


def _random_comparison_pair(dim: int, rng):
    """(delta0, delta1) with delta0 >= delta1 entrywise, both PSD unit-diagonal."""
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
    delta1 = chi * delta0 + (1.0 - chi) * np.eye(dim)
    return delta0, delta1, chi


def _cmd_compare(cfg: ExperimentConfig):
    table = Table("compare", ["pair", "dim", "chi", "s", "lhs", "se", "rhs",
                              "within_bound"])

    def job(rng, s_values=cfg.s_grid):
        dim = int(rng.integers(2, 7))
        delta0, delta1, chi = _random_comparison_pair(dim, rng)
        out = []
        for s in s_values:
            mc0 = pspin.max_cdf_mc(delta0, s, cfg.replicas, rng)
            mc1 = pspin.max_cdf_mc(delta1, s, cfg.replicas, rng)
            lhs = mc0.mean - mc1.mean
            se = math.sqrt(mc0.sem ** 2 + mc1.sem ** 2)
            rhs = pspin.gaussian_comparison_rhs(delta0, delta1, s)
            out.append((dim, chi, s, lhs, se, rhs))
        return out

    results = _run_jobs([job] * cfg.pairs, cfg)
    violations = 0
    for pair_id, rows in enumerate(results):
        for dim, chi, s, lhs, se, rhs in rows:
            ok = lhs <= rhs + 3.0 * se
            violations += 0 if ok else 1
            table.add(_prov(cfg), pair=pair_id, dim=dim, chi=chi, s=s,
                      lhs=lhs, se=se, rhs=rhs, within_bound=ok)
    return [table], [], {"comparison_violations": violations}, False


def _cmd_variance(cfg: ExperimentConfig):
    table = Table("variance", ["estimate", "se", "scaling", "ratio"])
    jobs, meta = [], []
    for i, n in enumerate(cfg.n_grid):
        beta = cfg.beta_for(i)
        meta.append((n, beta))
        jobs.append(lambda rng, nn=n, bb=beta: conditions.env_replication_variance(
            nn, cfg.p, cfg.c, bb, cfg.u_grid[0], cfg.t_grid[0],
            cfg.env_replicas, cfg.inner_replicas, rng))
    results = _run_jobs(jobs, cfg)
    reports = []
    for (n, beta), rep in zip(meta, results):
        reports.append(rep)
        scaling = rep.target
        table.add(_prov(cfg, n=n, beta=beta), estimate=rep.estimate, se=rep.se,
                  scaling=scaling,
                  ratio=rep.estimate / scaling if scaling else float("nan"))
    return [table], reports, {}, False


_DISPATCH = {
    "ppp": _cmd_ppp,
    "sk-run": _cmd_skrun,
    "verify": _cmd_verify,
    "ehrenfest": _cmd_ehrenfest,
    "ageing": _cmd_ageing,
    "compare": _cmd_compare,
    "variance": _cmd_variance,
}


def _resolve_out(cfg: ExperimentConfig, command: str) -> str:
    if cfg.out:
        return cfg.out
    env_dir = os.environ.get(OUT_ENV_VAR, "")
    if env_dir:
        return os.path.join(env_dir, command)
    return os.path.join("results", command)


def run(command: str, cfg: ExperimentConfig) -> dict:
    """Execute one subcommand and write its artifacts; returns results dict."""
    if command not in _DISPATCH:
        raise ValueError(f"unknown command {command!r}")
    started = time.perf_counter()
    tables, reports, extras, partial = _DISPATCH[command](cfg)
    runtime = time.perf_counter() - started
    out_dir = _resolve_out(cfg, command)
    os.makedirs(out_dir, exist_ok=True)
    for table in tables:
        table.write_csv(out_dir)
    results = {
        "command": command,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "tables": [t.name for t in tables],
        "reports": [r.to_json_dict() for r in reports],
        "partial": partial,
        "runtime_seconds": runtime,
    }
    results.update(extras)
    with open(os.path.join(out_dir, "results.json"), "w", encoding="utf-8") as fh:
        json.dump(results, fh, sort_keys=True, indent=2)
        fh.write("\n")
    manifest = {
        "command": command,
        "config": cfg.to_json_dict(),
        "config_hash": results["config_hash"],
        "seed": cfg.seed,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "extremalclock": __version__,
        },
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return results


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extremal-clock",
        description="Clock-process and extremal-ageing verification experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--threads", type=int, default=None,
                       help="override worker count (never changes results)")
        p.add_argument("--out", default=None, help="override output directory")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.out is not None:
        overrides["out"] = args.out
    try:
        cfg = load_config(args.config, overrides)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    results = run(args.command, cfg)
    out_dir = _resolve_out(cfg, args.command)
    print(f"{args.command}: wrote {len(results['tables'])} tables to {out_dir}")
    for rep in results["reports"]:
        tag = rep["parameters"].get("functional", rep["id"])
        print(f"  condition {rep['id']} [{tag}] n={rep['n']}: "
              f"estimate={rep['estimate']:.6g} se={rep['se']:.3g} "
              f"verdict={rep['verdict']}")
    if results.get("partial"):
        print("  warning: step budget exhausted on some replicas; "
              "results flagged partial")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

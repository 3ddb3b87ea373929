"""Grid experiments: per-instance evaluation, ordered reduction and CSV reports."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .instances import ExperimentGrid, ValuationInstance, grid_instance
from .oracles import dp_solve, expected_opt
from .policies import LABELS, build_policy
from .simulator import policy_stream, simulate, valuation_stream, valuation_uniforms
from .seeding import stream_seed

INSTANCE_COLUMNS = ["k", "T", "instance_id", "policy", "mean_revenue", "se", "mean_ratio",
                    "replications", "seed"]


@dataclass
class InstanceRow:
    k: int
    T: int
    instance_id: str
    policy: str
    mean_revenue: float
    se: float
    mean_ratio: float
    replications: int
    seed: int
    ratio_se: float = 0.0
    opt_mean: float = 0.0
    opt_se: float = 0.0
    mean_sales: float = 0.0
    sales_se: float = 0.0


def evaluate_instance(instance: ValuationInstance, policies, reps: int, seed: int,
                      opt_reps: int, epsilon: float = 0.05, samples: int = 1000,
                      cap: int | None = None) -> list:
    """One row per policy; OPT is estimated once and shared by all policies."""
    key = instance.key or (0,)
    opt = expected_opt(instance, opt_reps, seed=seed)
    vseeds = [valuation_stream(seed, key, r) for r in range(reps)]
    vals = np.stack([instance.sample_valuations(valuation_uniforms(instance, s)) for s in vseeds])
    rows = []
    for name in policies:
        if name == "dp":
            tab = dp_solve(instance)
            value = float(tab.optimum)
            mean, se, n, sales = value, 0.0, 0, _dp_sales(instance, tab)
            sales_se = 0.0
            ratio_se = value * opt.se / opt.mean ** 2 if opt.mean > 0 else 0.0
        else:
            pol = build_policy(name, instance, epsilon=epsilon, samples=samples,
                               pool_seed=stream_seed(seed, "vt-pool", *key), cap=cap)
            pseeds = [policy_stream(seed, key, name, r) for r in range(reps)]
            rev, sold = simulate(instance, pol, vseeds, pseeds, valuations=vals)
            mean = float(rev.mean())
            se = float(rev.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
            n, sales = reps, float(sold.mean())
            sales_se = float(sold.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
            ratio_se = se / opt.mean if opt.mean > 0 else 0.0
        ratio = mean / opt.mean if opt.mean > 0 else float("nan")
        rows.append(InstanceRow(instance.k, instance.T, instance.name, name, mean, se, ratio, n,
                                seed, ratio_se, opt.mean, opt.se, sales, sales_se))
    return rows


def _dp_sales(instance, tab) -> float:
    """Expected units sold when following the DP argmax."""
    dist = np.zeros(instance.k + 1)
    dist[instance.k] = 1.0
    surv = instance.survival_array
    sold, m = 0.0, instance.m
    for t in range(instance.T):
        nxt = dist.copy()
        for c in range(1, instance.k + 1):
            j = tab.argmax[t][c]
            if j <= m:
                flow = dist[c] * surv[t][j - 1]
                nxt[c] -= flow
                nxt[c - 1] += flow
                sold += flow
        dist = nxt
    return float(sold)


def _grid_task(args):
    grid, k, T, idx, policies, reps, seed, opt_reps, epsilon, samples = args
    inst = grid_instance(grid, k, T, idx)
    return evaluate_instance(inst, policies, reps, seed, opt_reps, epsilon, samples)


def worker_count() -> int:
    env = os.environ.get("RM_THREADS")
    limit = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), limit))
        except ValueError:
            pass
    return 1


def run_experiment(grid: ExperimentGrid, policies, reps: int = 200, seed: int | None = None,
                   opt_reps: int = 1000, epsilon: float = 0.05, samples: int = 1000,
                   workers: int | None = None, progress=None) -> "SimulationReport":
    """Evaluates every policy on every grid instance and reduces in canonical order."""
    seed = grid.seed if seed is None else seed
    tasks = [(grid, k, T, idx, tuple(policies), reps, seed, opt_reps, epsilon, samples)
             for k, T in grid.cells() for idx in range(grid.instances_per_length)]
    workers = worker_count() if workers is None else workers
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = ex.map(_grid_task, tasks, chunksize=max(1, len(tasks) // (8 * workers)))
            for i, res in enumerate(results):
                rows.extend(res)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, task in enumerate(tasks):
            rows.extend(_grid_task(task))
            if progress:
                progress(i + 1, len(tasks))
    return SimulationReport(rows, list(policies), str(grid.ladder))


@dataclass
class SimulationReport:
    rows: list
    policies: list
    ladder: str = ""
    anomaly_sigmas: float = 4.0
    meta: dict = field(default_factory=dict)

    def _select(self, policy, k=None, T=None):
        return [r for r in self.rows
                if r.policy == policy and (k is None or r.k == k) and (T is None or r.T == T)]

    def summary(self, policy, k=None, T=None):
        """Mean ratio over instances and its Monte Carlo standard error."""
        sel = self._select(policy, k, T)
        if not sel:
            return float("nan"), float("nan"), 0
        n = len(sel)
        mean = math.fsum(r.mean_ratio for r in sel) / n
        se = math.sqrt(math.fsum(r.ratio_se ** 2 for r in sel)) / n
        return mean, se, n

    def sales_summary(self, policy, k=None, T=None):
        """Mean units sold per instance and its standard error."""
        sel = self._select(policy, k, T)
        n = len(sel)
        if not n:
            return float("nan"), float("nan")
        return (math.fsum(r.mean_sales for r in sel) / n,
                math.sqrt(math.fsum(r.sales_se ** 2 for r in sel)) / n)

    def paired(self, a: str, b: str, k=None, T=None):
        """Mean ratio difference a - b with the pooled standard error."""
        ma, sa, _ = self.summary(a, k, T)
        mb, sb, _ = self.summary(b, k, T)
        return ma - mb, math.hypot(sa, sb)

    @property
    def inventories(self):
        return sorted({r.k for r in self.rows})

    def horizons(self, k):
        return sorted({r.T for r in self.rows if r.k == k})

    def anomalies(self) -> list:
        return [r for r in self.rows if r.mean_ratio > 1 + self.anomaly_sigmas * r.ratio_se]

    def best(self, k, T, exclude=("dp",), among=None):
        pool = [p for p in (among or self.policies) if p not in exclude]
        return max(pool, key=lambda p: self.summary(p, k, T)[0])

    def write(self, out_dir) -> list:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "instances.csv", out / "summary.csv", out / "series.csv"]
        with open(paths[0], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(INSTANCE_COLUMNS)
            for r in self.rows:
                w.writerow([r.k, r.T, r.instance_id, r.policy, repr(r.mean_revenue), repr(r.se),
                            repr(r.mean_ratio), r.replications, r.seed])
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ladder", "k", "statistic"] + [LABELS.get(p, p) for p in self.policies])
            for k in self.inventories:
                stats = [self.summary(p, k) for p in self.policies]
                w.writerow([self.ladder, k, "mean_ratio"] + [f"{m:.6f}" for m, _, _ in stats])
                w.writerow([self.ladder, k, "se"] + [f"{s:.6f}" for _, s, _ in stats])
        with open(paths[2], "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ladder", "k", "T", "policy", "mean_ratio", "se", "instances"])
            for k in self.inventories:
                for T in self.horizons(k):
                    for p in self.policies:
                        m, s, n = self.summary(p, k, T)
                        w.writerow([self.ladder, k, T, p, f"{m:.6f}", f"{s:.6f}", n])
        return paths


def write_ladder_comparison(reports, path) -> None:
    """One row per (ladder, k, policy); the data behind the price-set comparison figure."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ladder", "k", "policy", "mean_ratio", "se", "instances"])
        for rep in reports:
            for k in rep.inventories:
                for p in rep.policies:
                    m, s, n = rep.summary(p, k)
                    w.writerow([rep.ladder, k, p, f"{m:.6f}", f"{s:.6f}", n])


def row_dicts(report: SimulationReport) -> list:
    return [asdict(r) for r in report.rows]

"""Experiment campaigns: configuration, orchestration, persistence, checks.

A campaign is a grid of parameter points driven through one estimator task.
Every row is a pure function of (config, row index): row r draws its replicas
from streams keyed by ``master_seed + r + 1``, reductions are deterministic,
and reruns reproduce the output files byte for byte.  Wall-clock timings are
kept in memory (and an optional side log), never in the reproducible outputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, estimators as est
from .disorder import make_spec, sample_env, truncation_context
from .partition_dp import PolymerParams, enumerate_partition, exp_form_equivalence, partition
from .renewal import (intersection_kernel, intersection_residuals, make_kernel,
                      mass_table, renewal_residuals, sample_bridge)

TASKS = ("quench", "moments", "second-moment", "certify-deloc", "certify-irrel",
         "hc-scan", "fit", "theorem-2.1", "theorem-2.2")

WORKERS_ENV = "PINNING_WORKERS"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    alpha: float
    horizon: int
    infinite_normalizer: bool
    gamma: float
    sweep: dict
    n: int
    replicas: int
    master_seed: int
    parallelism: int
    csv_path: str
    json_path: str
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "model": {"alpha": self.alpha, "horizon": self.horizon,
                      "infinite_normalizer": self.infinite_normalizer},
            "disorder": {"gamma": self.gamma},
            "sweep": self.sweep,
            "run": {"n": self.n, "replicas": self.replicas,
                    "master_seed": self.master_seed, "parallelism": self.parallelism},
            "outputs": {"csv_path": self.csv_path, "json_path": self.json_path},
            "params": self.params,
        }

    def canonical(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        # execution details (worker count, output paths) stay out of the
        # hash so identical science reproduces identical rows
        payload = self.to_dict()
        payload.pop("outputs")
        payload["run"].pop("parallelism")
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class CampaignResult:
    rows: list
    fits: dict
    config_hash: str
    wall_times: list


def _grid_values(raw, key: str) -> list:
    if isinstance(raw, (list, tuple)):
        vals = [float(x) for x in raw]
    elif isinstance(raw, dict):
        extra = set(raw) - {"min", "max", "points", "scale"}
        if extra:
            raise ConfigError(f"sweep.{key}: unknown field {sorted(extra)[0]!r}")
        scale = raw.get("scale", "log")
        pts = int(raw["points"])
        if scale == "log":
            vals = np.logspace(math.log10(raw["min"]), math.log10(raw["max"]), pts).tolist()
        elif scale == "linear":
            vals = np.linspace(raw["min"], raw["max"], pts).tolist()
        else:
            raise ConfigError(f"sweep.{key}.scale: unknown scale {scale!r}")
    else:
        raise ConfigError(f"sweep.{key}: expected a list or a min/max/points mapping")
    if not vals:
        raise ConfigError(f"sweep.{key}: empty grid")
    return vals


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {"task", "model", "disorder", "sweep", "run", "outputs", "params"}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
    task = data.get("task")
    if task not in TASKS:
        raise ConfigError(f"task: expected one of {TASKS}, got {task!r}")
    model = data.get("model", {})
    run = data.get("run", {})
    outputs = data.get("outputs", {})
    sweep = {k: _grid_values(v, k) for k, v in data.get("sweep", {}).items()}
    for key in sweep:
        if key not in ("beta", "h", "n"):
            raise ConfigError(f"sweep.{key}: only beta, h, and n can be swept")
    try:
        cfg = ExperimentConfig(
            task=task,
            alpha=float(model["alpha"]),
            horizon=int(model.get("horizon", run.get("n", 1024))),
            infinite_normalizer=bool(model.get("infinite_normalizer", False)),
            gamma=float(data.get("disorder", {}).get("gamma", 1.5)),
            sweep=sweep,
            n=int(run.get("n", 1024)),
            replicas=int(run.get("replicas", 64)),
            master_seed=int(run.get("master_seed", 0)),
            parallelism=int(run.get("parallelism", 1)),
            csv_path=str(outputs.get("csv_path", f"{task}.csv")),
            json_path=str(outputs.get("json_path", f"{task}.json")),
            params=dict(data.get("params", {})),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc.args[0]}") from None
    if cfg.parallelism < 1:
        raise ConfigError("run.parallelism must be at least 1")
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def preset_config(name: str, out_dir: str = ".") -> ExperimentConfig:
    """Built-in parameter regimes for the two phenomenology campaigns."""
    if name == "theorem-2.1":
        data = {
            "task": "theorem-2.1",
            "model": {"alpha": 0.4, "horizon": 8192, "infinite_normalizer": True},
            "disorder": {"gamma": 1.8},
            "sweep": {"n": [2 ** e for e in range(8, 14)],
                      "h": {"min": 3e-3, "max": 0.1, "points": 8, "scale": "log"}},
            "run": {"n": 8192, "replicas": 192, "master_seed": 20240817,
                    "parallelism": 1},
            "outputs": {"csv_path": os.path.join(out_dir, "theorem-2.1.csv"),
                        "json_path": os.path.join(out_dir, "theorem-2.1.json")},
            "params": {"p": 1.3, "beta": 0.1},
        }
    elif name == "theorem-2.2":
        data = {
            "task": "theorem-2.2",
            "model": {"alpha": 0.9, "horizon": 4096},
            "disorder": {"gamma": 1.5},
            "sweep": {"beta": {"min": 0.15, "max": 0.8, "points": 6, "scale": "log"}},
            "run": {"n": 4096, "replicas": 48, "master_seed": 20240818,
                    "parallelism": 1},
            "outputs": {"csv_path": os.path.join(out_dir, "theorem-2.2.csv"),
                        "json_path": os.path.join(out_dir, "theorem-2.2.json")},
            "params": {"tol_factor": 0.25, "c2": 0.02, "cert_replicas": 1500},
        }
    else:
        raise ConfigError(f"unknown preset {name!r}")
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# row execution


def _kernel_for(cfg: ExperimentConfig):
    return make_kernel(cfg.alpha, cfg.horizon, infinite_normalizer=cfg.infinite_normalizer)


def _grid_points(cfg: ExperimentConfig) -> list:
    betas = cfg.sweep.get("beta", [cfg.params.get("beta", 0.0)])
    hs = cfg.sweep.get("h", [cfg.params.get("h", 0.0)])
    ns = cfg.sweep.get("n", [cfg.n])
    return [{"beta": float(b), "h": float(h), "n": int(n)}
            for b in betas for h in hs for n in ns]


def _run_row(cfg: ExperimentConfig, index: int) -> dict:
    point = _grid_points(cfg)[index]
    seed = cfg.master_seed + index + 1
    spec = make_spec(cfg.gamma)
    kernel = _kernel_for(cfg)
    row = {"row": index, "alpha": cfg.alpha, "gamma": cfg.gamma,
           "beta": point["beta"], "h": point["h"], "n": point["n"],
           "replicas": cfg.replicas, "seed": seed,
           "config": cfg.config_hash(), "version": __version__}
    task = cfg.task
    if task == "quench":
        fe = est.quenched_free_energy(kernel, spec, point["beta"], point["h"],
                                      point["n"], cfg.replicas, seed)
        row.update(value=fe.value, stderr=fe.stderr, raw_mean=fe.raw_mean,
                   annealed_value=fe.annealed_value)
    elif task == "moments":
        me = est.fractional_moment(kernel, spec, float(cfg.params["p"]),
                                   point["beta"], point["h"], point["n"],
                                   cfg.replicas, seed)
        row.update(point_estimate=me.point_estimate, ci_low=me.ci_low,
                   ci_high=me.ci_high, method=me.method)
    elif task == "second-moment":
        ctx = truncation_context(spec, cfg.alpha, point["beta"],
                                 float(cfg.params.get("c1", 0.05)),
                                 float(cfg.params.get("delta", 0.0)))
        mass = mass_table(kernel, max(ctx.n_beta, 2))
        ik = intersection_kernel(mass, max(ctx.n_beta, 2))
        exact = est.exact_second_moment_truncated(ctx, ik, ctx.n_beta)
        cop = est.copachi_check(ctx, ik)
        row.update(n_beta=ctx.n_beta, h_beta=ctx.h_beta, chi=ctx.chi,
                   exact_second_moment=exact, bounded_by_two=exact <= 2.0,
                   copachi=cop.holds)
    elif task == "certify-deloc":
        h = point["h"]
        if h == 0.0:
            h = est.h2_reference(cfg.alpha, cfg.gamma, point["beta"],
                                 float(cfg.params.get("c2", 0.02)))
        k = int(cfg.params.get("k", 0)) or est.k_for_reward(h, cfg.alpha)
        cert = est.rho_certificate(kernel, spec, point["beta"], h, k,
                                   cfg.replicas, seed)
        row.update(h=h, k=k, theta=cert.theta, rho_upper=cert.rho_upper,
                   certified=cert.certified)
    elif task == "certify-irrel":
        mass = mass_table(kernel, cfg.horizon)
        ik = intersection_kernel(mass, min(cfg.horizon, len(mass.u) - 1))
        cert = est.irrelevance_certificate(
            kernel, mass, ik, spec, point["beta"], float(cfg.params["q"]),
            int(cfg.params.get("L", 64)), int(cfg.params.get("n_max", 512)),
            cfg.replicas, seed)
        row.update(q=float(cfg.params["q"]), L=int(cfg.params.get("L", 64)),
                   term1=cert.term1, term2=cert.term2, product=cert.product,
                   certified=cert.certified,
                   term1_tail_fraction=cert.term1_tail_fraction,
                   term2_tail_fraction=cert.term2_tail_fraction)
    elif task == "hc-scan":
        tol = float(cfg.params.get("tol", 0.0)) or \
            float(cfg.params.get("tol_factor", 0.25)) * est.h2_reference(
                cfg.alpha, cfg.gamma, point["beta"], 0.1)
        lo, hi = est.critical_point(kernel, spec, point["beta"], point["n"],
                                    cfg.replicas, tol, seed)
        row.update(h_c_low=lo, h_c_high=hi, tol=tol)
    elif task == "fit":
        fit = est.fit_exponent(np.asarray(cfg.params["xs"], dtype=float),
                               np.asarray(cfg.params["ys"], dtype=float),
                               window=str(cfg.params.get("window", "")))
        row.update(slope=fit.slope, intercept=fit.intercept, stderr=fit.stderr)
    else:
        raise ConfigError(f"task {task!r} has no direct row runner")
    return row


def _row_worker(args):
    payload, index = args
    cfg = config_from_dict(json.loads(payload))
    return index, _run_row(cfg, index)


def _composite_subconfigs(cfg: ExperimentConfig):
    """Expand the phenomenology presets into their member campaigns."""
    base = json.loads(cfg.canonical())
    if cfg.task == "theorem-2.1":
        moments = dict(base)
        moments.update(task="moments",
                       sweep={"n": cfg.sweep["n"]},
                       params={"p": cfg.params["p"], "beta": cfg.params["beta"]})
        quench = dict(base)
        quench.update(task="quench", sweep={"h": cfg.sweep["h"]},
                      params={"beta": cfg.params["beta"]})
        return [("moments", config_from_dict(moments)),
                ("quench", config_from_dict(quench))]
    if cfg.task == "theorem-2.2":
        scan = dict(base)
        scan.update(task="hc-scan", sweep={"beta": cfg.sweep["beta"]},
                    params=dict(cfg.params))
        deloc = dict(base)
        deloc.update(task="certify-deloc", sweep={"beta": [0.5]},
                     params={"c2": cfg.params.get("c2", 0.02)})
        deloc["run"] = dict(base["run"],
                            replicas=int(cfg.params.get("cert_replicas", 1500)))
        return [("hc-scan", config_from_dict(scan)),
                ("certify-deloc", config_from_dict(deloc))]
    return [(cfg.task, cfg)]


def run_campaign(config: ExperimentConfig) -> CampaignResult:
    """Run every grid point, write CSV rows and a JSON summary atomically.

    Rows are computed by a process pool when parallelism > 1 (the worker
    count can be overridden through the PINNING_WORKERS variable) and folded
    in row order, so the outputs are identical for any worker count.
    """
    members = _composite_subconfigs(config)
    all_rows = []
    wall = []
    fits = {}
    workers = int(os.environ.get(WORKERS_ENV, config.parallelism))
    for subtask, cfg in members:
        points = _grid_points(cfg)
        jobs = [(cfg.canonical(), i) for i in range(len(points))]
        t0 = time.perf_counter()
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = sorted(pool.map(_row_worker, jobs))
        else:
            results = [_row_worker(j) for j in jobs]
        wall.append((subtask, time.perf_counter() - t0))
        rows = [r for _, r in sorted(results)]
        for r in rows:
            r["task"] = subtask
        all_rows.extend(rows)
        fits.update(_summary_fits(subtask, rows))
    _write_outputs(config, all_rows, fits)
    return CampaignResult(rows=all_rows, fits=fits,
                          config_hash=config.config_hash(), wall_times=wall)


def _summary_fits(task: str, rows: list) -> dict:
    out = {}
    if task == "hc-scan" and len(rows) >= 4:
        xs = np.log([r["beta"] for r in rows])
        ys = np.log([0.5 * (r["h_c_low"] + r["h_c_high"]) for r in rows])
        fit = est.fit_exponent(xs, ys, window="log h_c vs log beta")
        out["shiftee"] = {"slope": fit.slope, "stderr": fit.stderr,
                          "intercept": fit.intercept}
    elif task == "quench":
        pos = [r for r in rows if r["value"] > 0]
        if len(pos) >= 4:
            fit = est.fit_exponent(np.log([r["h"] for r in pos]),
                                   np.log([r["value"] for r in pos]),
                                   window="log value vs log h (positive rows)")
            out["freene"] = {"slope": fit.slope, "stderr": fit.stderr,
                             "intercept": fit.intercept}
    elif task == "moments" and len(rows) >= 4:
        fit = est.fit_exponent(np.log([r["n"] for r in rows]),
                               np.array([r["point_estimate"] for r in rows]),
                               window="estimate vs log n")
        out["moment-trend"] = {"slope": fit.slope, "stderr": fit.stderr}
    return out


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_outputs(config: ExperimentConfig, rows: list, fits: dict) -> None:
    header = sorted({k for r in rows for k in r})
    tmp = f"{config.csv_path}.tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in rows:
            writer.writerow([_format_cell(r.get(k, "")) for k in header])
    os.replace(tmp, config.csv_path)
    summary = {
        "config_hash": config.config_hash(),
        "version": __version__,
        "task": config.task,
        "rows": len(rows),
        "fits": fits,
        "certified_rows": sum(1 for r in rows if r.get("certified")),
    }
    tmp = f"{config.json_path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    os.replace(tmp, config.json_path)


# ---------------------------------------------------------------------------
# verification suites


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def check_renewal_identities(kernel, n: int = 4096, tol: float = 1e-12) -> SuiteResult:
    t0 = time.perf_counter()
    closure = abs(float(kernel.probs.sum()) + kernel.tail_mass - 1.0)
    mass = mass_table(kernel, n)
    res = renewal_residuals(kernel, mass)
    worst = float(np.abs(res).max())
    return SuiteResult(
        "renewal-identities", worst <= tol and closure <= tol,
        f"max renewal-equation residual {worst:.3e}, kernel mass defect "
        f"{closure:.3e} (tol {tol:g})",
        time.perf_counter() - t0)


def check_intersection_roundtrip(kernel, n: int = 2048, tol: float = 1e-9) -> SuiteResult:
    t0 = time.perf_counter()
    mass = mass_table(kernel, n)
    ik = intersection_kernel(mass, n // 2)
    worst = float(np.abs(intersection_residuals(ik, mass)).max())
    return SuiteResult("intersection-roundtrip", worst <= tol,
                       f"max round-trip residual {worst:.3e} (tol {tol:g})",
                       time.perf_counter() - t0)


def check_bridge_marginals(kernel, n: int = 48, bridges: int = 20000,
                           seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    mass = mass_table(kernel, n)
    counts = np.zeros(n + 1)
    for b in range(bridges):
        pts = sample_bridge(mass, n, seed, substream=b, kernel=kernel)
        counts[pts] += 1
    freq = counts / bridges
    target = mass.u[: n + 1] * mass.u[n::-1] / mass.u[n]
    sigma = np.sqrt(np.maximum(target * (1 - target), 1e-12) / bridges)
    z = np.abs(freq[1:n] - target[1:n]) / sigma[1:n]
    worst = float(z.max())
    return SuiteResult("bridge-marginals", worst <= 4.0,
                       f"worst marginal deviation {worst:.2f} sigma over {bridges} bridges",
                       time.perf_counter() - t0)


def check_oracle_equivalence(seed: int = 0, instances: int = 20) -> SuiteResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(instances):
        alpha = float(rng.choice([0.4, 0.8, 1.2]))
        gamma = float(rng.choice([1.3, 1.7]))
        n = int(rng.integers(2, 13))
        kernel = make_kernel(alpha, n + int(rng.integers(0, 4)),
                             infinite_normalizer=bool(rng.integers(0, 2)))
        spec = make_spec(gamma)
        env = sample_env(spec, n, seed=seed + trial)
        params = PolymerParams(beta=float(rng.uniform(0, 0.9)),
                               h=float(rng.uniform(-1, 1)), n=n)
        got = partition(params, env, kernel)
        want = enumerate_partition(params, env, kernel)
        worst = max(worst,
                    abs(got.log_z_constrained - want.log_z_constrained),
                    abs(got.log_z_free - want.log_z_free),
                    abs(got.expected_contacts - want.expected_contacts))
        if not exp_form_equivalence(params, env, kernel):
            return SuiteResult("oracle-equivalence", False,
                               f"exponential-form mismatch on instance {trial}",
                               time.perf_counter() - t0)
    return SuiteResult("oracle-equivalence", worst <= 1e-9,
                       f"worst |DP - enumeration| {worst:.3e} over {instances} instances",
                       time.perf_counter() - t0)


def check_annealed_identities(seed: int = 0, replicas: int = 4000,
                              n: int = 128) -> SuiteResult:
    t0 = time.perf_counter()
    kernel = make_kernel(0.5, n)
    spec = make_spec(1.6)
    mass = mass_table(kernel, n)
    params = PolymerParams(beta=0.2, h=0.0, n=n)
    rows = est._env_rows(spec, replicas, n, seed)
    from .partition_dp import log_partition_batch
    lzc, lzf = log_partition_batch(params, rows, kernel)
    free = est.median_of_means(np.exp(lzf))
    cons = est.median_of_means(np.exp(lzc))
    ok = free.ci_low <= 1.0 <= free.ci_high and cons.ci_low <= mass.u[n] <= cons.ci_high
    return SuiteResult(
        "annealed-identities", ok,
        f"E[Zf]: [{free.ci_low:.4f}, {free.ci_high:.4f}] vs 1; "
        f"E[Zc]: [{cons.ci_low:.5f}, {cons.ci_high:.5f}] vs u(n)={mass.u[n]:.5f}",
        time.perf_counter() - t0)


def check_paley_zygmund(seed: int = 0, replicas: int = 2000, n: int = 128) -> SuiteResult:
    t0 = time.perf_counter()
    kernel = make_kernel(0.4, n)
    spec = make_spec(1.8)
    logzf = est._batched_free_logz(kernel, spec,
                                   PolymerParams(beta=0.1, h=0.0, n=n),
                                   replicas, seed)
    pz = est.paley_zygmund_check(np.exp(logzf), p=1.2, theta=0.5)
    return SuiteResult("paley-zygmund", pz.holds,
                       f"P[X >= E[X]/2] = {pz.lhs:.4f} >= bound {pz.rhs:.4f}",
                       time.perf_counter() - t0)


def verify(seed: int = 0, quick: bool = True) -> int:
    """Run the invariant suites and print one line per suite with timing.

    Returns a process exit status: 0 when every suite passes, 1 otherwise.
    """
    kernel = make_kernel(0.5, 4096 if quick else 1 << 14,
                         infinite_normalizer=True)
    suites = [
        check_renewal_identities(kernel, 4096 if quick else 1 << 14),
        check_intersection_roundtrip(kernel, 2048 if quick else 4096),
        check_bridge_marginals(make_kernel(0.5, 48), seed=seed),
        check_oracle_equivalence(seed=seed),
        check_annealed_identities(seed=seed),
        check_paley_zygmund(seed=seed),
    ]
    ok = True
    for s in suites:
        status = "PASS" if s.passed else "FAIL"
        print(f"[{status}] {s.name}: {s.detail} ({s.seconds:.2f}s)")
        ok &= s.passed
    return 0 if ok else 1

"""Monte Carlo risk estimation over parameter grids.

A sweep draws, for each grid point and replicate, a truth assignment
uniformly from the configured space, samples a graph, runs the chosen
solver, and records the mis-match ratio.  Determinism contract:

- every replicate's generator is seeded by a hash of
  (master seed, the point's parameters, replicate index), so results do
  not depend on evaluation order or worker count, and adding grid
  points never perturbs other points' draws;
- rows are written in (point, replicate) order regardless of completion
  order;
- wall-clock timings are kept in the in-memory records but written to
  the CSV only when `record_runtime` is set, so default sweeps are
  byte-identical across reruns.

CSV column order:
    n,K,a,b,beta,space,estimator,penalty,w,replicate,seed,
    r_num,r_den,r,nI_over_K,nI_over_betaK,runtime_ms,status
Failed replicates carry status != "ok" and empty r fields; summaries
exclude them and report their count.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .bounds import BETA_LIMIT, bound_report
from .core import ModelParams, SpaceKind, SpaceVariant, renyi_divergence
from .estimator import (
    EnumerationCapError,
    DEFAULT_CLASS_CAP,
    Penalty,
    lambda_unified,
    lambda_weighted,
    objective,
    solve_exhaustive,
    solve_greedy,
)
from .loss import mismatch_ratio
from .sampler import InfeasibleSpaceError, sample_assignment, sample_graph

__all__ = [
    "GridPoint",
    "ExperimentConfig",
    "RiskRecord",
    "SweepResult",
    "replicate_seed",
    "run_replicate",
    "sweep",
    "CSV_COLUMNS",
]

CSV_COLUMNS = [
    "n",
    "K",
    "a",
    "b",
    "beta",
    "space",
    "estimator",
    "penalty",
    "w",
    "replicate",
    "seed",
    "r_num",
    "r_den",
    "r",
    "nI_over_K",
    "nI_over_betaK",
    "runtime_ms",
    "status",
]


@dataclass(frozen=True)
class GridPoint:
    n: int
    k: int
    a: float
    b: float
    beta: float = 1.0
    # test mode: admit the degenerate corner (a=n, b=0); requires a fixed penalty
    allow_degenerate: bool = False

    def params(self) -> ModelParams:
        return ModelParams(
            n=self.n, k=self.k, a=self.a, b=self.b, beta=self.beta,
            validate=not self.allow_degenerate,
        )

    def key(self) -> str:
        """Canonical string identifying the point (seed derivation input)."""
        return f"{self.n},{self.k},{self.a!r},{self.b!r},{self.beta!r}"


@dataclass(frozen=True)
class ExperimentConfig:
    points: tuple[GridPoint, ...]
    space: SpaceKind
    solver: str = "exhaustive"          # "exhaustive" | "greedy"
    restarts: int = 10                  # greedy only
    max_sweeps: int = 20                # greedy only
    class_cap: int = DEFAULT_CLASS_CAP  # exhaustive only
    penalty_kind: str = "unified"       # "unified" | "weighted" | "fixed"
    w: float = 0.5                      # weighted only
    fixed_lambda: float = 0.5           # fixed only (degenerate test mode)
    replicates: int = 1
    master_seed: int = 0
    output: str = "results.csv"
    record_runtime: bool = field(default=False)

    def __post_init__(self):
        if not self.points:
            raise ValueError("config needs at least one grid point")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if self.solver not in ("exhaustive", "greedy"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.penalty_kind not in ("unified", "weighted", "fixed"):
            raise ValueError(f"unknown penalty kind {self.penalty_kind!r}")
        for pt in self.points:
            pt.params()  # raises on invalid rates
            if pt.allow_degenerate and self.penalty_kind != "fixed":
                raise ValueError("degenerate test points need a fixed penalty")
            if self.penalty_kind == "weighted" and pt.k == 2 and self.w != 0.5:
                raise ValueError("K=2 admits only the w=1/2 penalty")

    def penalty_for(self, pt: GridPoint):
        if self.penalty_kind == "unified":
            return lambda_unified(pt.a, pt.b, pt.n)
        if self.penalty_kind == "fixed":
            return Penalty(lam=self.fixed_lambda, w=0.5, t_star=math.nan)
        return lambda_weighted(pt.a, pt.b, pt.n, self.w, k=pt.k)

    @property
    def summary_path(self) -> str:
        out = Path(self.output)
        return str(out.with_name(out.stem + ".summary.json"))

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        points = tuple(
            GridPoint(
                n=int(p["n"]),
                k=int(p["k"]),
                a=float(p["a"]),
                b=float(p["b"]),
                beta=float(p.get("beta", 1.0)),
            )
            for p in data["points"]
        )
        space_cfg = data.get("space", {"kind": "equal_size", "delta": 0.0})
        kind = SpaceKind(SpaceVariant(space_cfg["kind"]), float(space_cfg.get("delta", 0.1)))
        est = data.get("estimator", {"solver": "exhaustive"})
        pen = data.get("penalty", {"kind": "unified"})
        return ExperimentConfig(
            points=points,
            space=kind,
            solver=est.get("solver", "exhaustive"),
            restarts=int(est.get("restarts", 10)),
            max_sweeps=int(est.get("max_sweeps", 20)),
            class_cap=int(est.get("class_cap", DEFAULT_CLASS_CAP)),
            penalty_kind=pen.get("kind", "unified"),
            w=float(pen.get("w", 0.5)),
            fixed_lambda=float(pen.get("lambda", 0.5)),
            replicates=int(data.get("replicates", 1)),
            master_seed=int(data.get("master_seed", 0)),
            output=data.get("output", "results.csv"),
            record_runtime=bool(data.get("record_runtime", False)),
        )

    @staticmethod
    def from_json(path: str | Path) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class RiskRecord:
    point: GridPoint
    replicate: int
    seed: int
    status: str
    r: Optional[Fraction]
    nI_over_K: float
    nI_over_betaK: float
    # wall-clock; excluded from equality so the determinism contract
    # (same seed, point, index -> identical record) is meaningful
    runtime_ms: float = field(compare=False, default=0.0)
    solver: str = "exhaustive"
    objective_value: Optional[float] = None


def replicate_seed(master_seed: int, point: GridPoint, replicate_index: int) -> int:
    """64-bit seed derived by hashing (master seed, point key, index).

    Counter-based: independent of evaluation order, stable across
    platforms, and unaffected by adding or removing other grid points.
    """
    key = f"{master_seed}|{point.key()}|{replicate_index}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _space_label(kind: SpaceKind) -> str:
    if kind.variant is SpaceVariant.EQUAL_SIZE:
        return f"equal_size({kind.delta!r})"
    return kind.variant.value


def run_replicate(
    point: GridPoint, replicate_index: int, config: ExperimentConfig
) -> RiskRecord:
    """One Monte Carlo replicate; fully determined by (master seed, point, index)."""
    seed = replicate_seed(config.master_seed, point, replicate_index)
    rng = np.random.Generator(np.random.PCG64(seed))
    params = point.params()
    try:
        divergence = renyi_divergence(point.a, point.b, point.n)
    except ValueError:
        if not point.allow_degenerate:
            raise
        divergence = math.inf  # a=n, b=0: perfectly separable
    n_i_k = point.n * divergence / point.k
    n_i_bk = point.n * divergence / (point.beta * point.k)
    start = time.perf_counter()
    try:
        sigma0 = sample_assignment(params, config.space, rng)
        graph = sample_graph(sigma0, params, rng)
        penalty = config.penalty_for(point)
        if config.solver == "exhaustive":
            result = solve_exhaustive(graph, params, config.space, penalty, cap=config.class_cap)
            sigma_hat, obj = result.assignment, result.objective
        else:
            best = None
            for _ in range(max(1, config.restarts)):
                init = sample_assignment(params, config.space, rng)
                cand = solve_greedy(
                    graph, init, penalty, config.space,
                    max_sweeps=config.max_sweeps, beta=point.beta,
                )
                cand_obj = objective(graph, cand, penalty)
                if best is None or cand_obj > best[1]:
                    best = (cand, cand_obj)
            sigma_hat, obj = best
        r = mismatch_ratio(sigma0, sigma_hat)
        status = "ok"
    except EnumerationCapError:
        r, obj, status = None, None, "cap_exceeded"
    except InfeasibleSpaceError:
        r, obj, status = None, None, "infeasible"
    runtime_ms = (time.perf_counter() - start) * 1000.0
    return RiskRecord(
        point=point,
        replicate=replicate_index,
        seed=seed,
        status=status,
        r=r,
        nI_over_K=n_i_k,
        nI_over_betaK=n_i_bk,
        runtime_ms=runtime_ms,
        solver=config.solver,
        objective_value=obj,
    )


@dataclass(frozen=True)
class SweepResult:
    records: tuple[RiskRecord, ...]
    summary: dict
    csv_path: str
    summary_path: str

    @property
    def any_point_failed(self) -> bool:
        return any(p["ok"] == 0 for p in self.summary["points"])


def _record_row(rec: RiskRecord, config: ExperimentConfig) -> list[str]:
    pt = rec.point
    ok = rec.status == "ok"
    return [
        str(pt.n),
        str(pt.k),
        repr(pt.a),
        repr(pt.b),
        repr(pt.beta),
        _space_label(config.space),
        config.solver,
        config.penalty_kind,
        repr(config.w if config.penalty_kind == "weighted" else 0.5),
        str(rec.replicate),
        str(rec.seed),
        str(rec.r.numerator) if ok else "",
        str(rec.r.denominator) if ok else "",
        repr(float(rec.r)) if ok else "",
        repr(rec.nI_over_K),
        repr(rec.nI_over_betaK),
        repr(rec.runtime_ms) if config.record_runtime else "",
        rec.status,
    ]


def _point_summary(pt: GridPoint, recs: list[RiskRecord], config: ExperimentConfig) -> dict:
    ok = [r for r in recs if r.status == "ok"]
    failed = len(recs) - len(ok)
    entry: dict = {
        "n": pt.n,
        "k": pt.k,
        "a": pt.a,
        "b": pt.b,
        "beta": pt.beta,
        "space": _space_label(config.space),
        "estimator": config.solver,
        "penalty": config.penalty_kind,
        "w": config.w if config.penalty_kind == "weighted" else 0.5,
        "replicates": len(recs),
        "ok": len(ok),
        "failed": failed,
        "nI_over_K": recs[0].nI_over_K if recs else None,
        "nI_over_betaK": recs[0].nI_over_betaK if recs else None,
    }
    if ok:
        mean = sum((r.r for r in ok), Fraction(0)) / len(ok)
        entry["mean_r_num"] = mean.numerator
        entry["mean_r_den"] = mean.denominator
        entry["mean_r"] = float(mean)
        floats = [float(r.r) for r in ok]
        if len(floats) > 1:
            mu = float(mean)
            var = sum((x - mu) ** 2 for x in floats) / (len(floats) - 1)
            entry["stderr_r"] = math.sqrt(var / len(floats))
        else:
            entry["stderr_r"] = None
        if mean > 0:
            entry["log_mean_r"] = math.log(mean.numerator) - math.log(mean.denominator)
            entry["rate_ratio"] = -entry["log_mean_r"] / entry["nI_over_K"]
        else:
            entry["log_mean_r"] = None
            entry["rate_ratio"] = None
    else:
        entry.update(
            mean_r_num=None, mean_r_den=None, mean_r=None,
            stderr_r=None, log_mean_r=None, rate_ratio=None,
        )
    if 1.0 <= pt.beta < BETA_LIMIT and not pt.allow_degenerate:
        entry["bounds"] = bound_report(pt.params()).as_dict()
    return entry


def sweep(config: ExperimentConfig, threads: int = 1) -> SweepResult:
    """Run all (point, replicate) tasks, write the CSV and summary JSON.

    Replicates are independent and may be evaluated concurrently; the
    writer serializes rows in (point, replicate) order regardless of
    completion order.
    """
    tasks = [(pt, rep) for pt in config.points for rep in range(config.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda t: run_replicate(t[0], t[1], config), tasks))
    else:
        records = [run_replicate(pt, rep, config) for pt, rep in tasks]

    lines = [",".join(CSV_COLUMNS)]
    for rec in records:
        lines.append(",".join(_record_row(rec, config)))
    csv_path = Path(config.output)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    per_point = []
    for pt in config.points:
        recs = [r for r in records if r.point == pt]
        per_point.append(_point_summary(pt, recs, config))
    summary = {
        "master_seed": config.master_seed,
        "replicates": config.replicates,
        "points": per_point,
    }
    Path(config.summary_path).write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return SweepResult(
        records=tuple(records),
        summary=summary,
        csv_path=str(csv_path),
        summary_path=config.summary_path,
    )

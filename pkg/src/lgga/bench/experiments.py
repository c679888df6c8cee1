"""Experiment harnesses: classic GA vs LGGA, data-efficiency sweeps, export.

Every run is seeded from a key built out of (problem, seed or trial, size,
arm), so any single run can be repeated in isolation and gives the same
outcome. Runs may execute in a process pool; results are always collected
in key order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..dataset import Dataset, sample_from_oracle
from ..engine import RunConfig, run
from ..expr import evaluate_batch, semantically_equivalent, to_text
from .problems import BenchmarkProblem, get_problem

NO_DISC = "NoDisc"
DISC = "Disc"

# desk-scale stand-in for the 15 minute budget given to commercial tools
DEFAULT_CONSUMER_TIMEOUT = 90.0


def _key(*parts) -> int:
    return zlib.crc32(":".join(str(p) for p in parts).encode())


def _rng(*parts) -> np.random.Generator:
    return np.random.default_rng(_key(*parts))


def _problem(p) -> BenchmarkProblem:
    return p if isinstance(p, BenchmarkProblem) else get_problem(p)


def solves(problem: BenchmarkProblem, expr) -> bool:
    return semantically_equivalent(expr, problem.ground_truth, problem.ranges, np.random.default_rng(0))


def heldout_mse(problem: BenchmarkProblem, expr, n: int = 1000) -> float:
    """MSE against fresh oracle samples shared by every method."""
    ds = sample_from_oracle(problem, n, _rng(problem.name, "test"))
    with np.errstate(over="ignore", invalid="ignore"):
        m = float(np.mean((evaluate_batch(expr, ds.X).values - ds.y) ** 2))
    return m if math.isfinite(m) else float("inf")


def _map(fn: Callable, jobs: list, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


# Experiment 1 ---------------------------------------------------------------


@dataclass
class TrialResult:
    seed: int
    mode: str
    solved: bool
    expression: str
    train_mse: float
    test_mse: float
    generations: int
    dataset_size: int
    seconds: float


@dataclass
class ExperimentResult:
    problem: str
    lgga: list = field(default_factory=list)
    classic: list = field(default_factory=list)

    @property
    def lgga_solves(self) -> int:
        return sum(t.solved for t in self.lgga)

    @property
    def classic_solves(self) -> int:
        return sum(t.solved for t in self.classic)

    @property
    def lgga_solved(self) -> bool:
        return self.lgga_solves > 0

    @property
    def classic_solved(self) -> bool:
        return self.classic_solves > 0

    @property
    def m_star(self) -> list:
        return [t.dataset_size for t in self.lgga]

    @property
    def mse_ratio(self) -> float | None:
        """Mean held-out MSE of LGGA over that of classic; None unless both failed."""
        if self.lgga_solved or self.classic_solved or not self.lgga:
            return None
        a = np.mean([t.test_mse for t in self.lgga])
        b = np.mean([t.test_mse for t in self.classic])
        return float(a / b) if b > 0 and math.isfinite(a / b) else None

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "lgga_solves": self.lgga_solves,
            "classic_solves": self.classic_solves,
            "lgga_solved": self.lgga_solved,
            "classic_solved": self.classic_solved,
            "m_star": self.m_star,
            "mse_ratio": self.mse_ratio,
            "lgga": [asdict(t) for t in self.lgga],
            "classic": [asdict(t) for t in self.classic],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _trial(problem, dataset, mode, seed, config) -> tuple:
    t0 = time.monotonic()
    res = run(dataset, problem.truths, problem.alphabet, config.replace(mode=mode, seed=seed))
    trial = TrialResult(
        seed=seed, mode=mode, solved=solves(problem, res.best),
        expression=to_text(res.best, problem.alphabet),
        train_mse=res.reports[-1].best_mse, test_mse=heldout_mse(problem, res.best),
        generations=len(res.reports), dataset_size=len(res.dataset),
        seconds=round(time.monotonic() - t0, 3),
    )
    return trial, res


def _exp1_job(job) -> tuple:
    name, seed, m, config = job
    p = get_problem(name)
    initial = sample_from_oracle(p, m, _rng(name, "exp1", seed, "initial"))
    lg, res = _trial(p, initial, "lgga_full", seed, config)
    # same data budget m*, but drawn at random
    fresh = sample_from_oracle(p, len(res.dataset), _rng(name, "exp1", seed, "random"))
    cl, _ = _trial(p, fresh, "classic", seed, config)
    return lg, cl


def experiment_classic_vs_lgga(problems: Sequence, seeds: int = 15, m: int = 100,
                               config: RunConfig | None = None, workers: int = 1,
                               progress: Callable | None = None) -> list:
    """Per problem and seed: LGGA from ``m`` oracle points (ending with m*
    points), then classic GA on a fresh random dataset of size m*."""
    config = config or RunConfig()
    names = [_problem(p).name for p in problems]
    jobs = [(n, s, m, config) for n in names for s in range(seeds)]
    out = {n: ExperimentResult(n) for n in names}
    for (n, s, _, _), (lg, cl) in zip(jobs, _map(_exp1_job, jobs, workers)):
        out[n].lgga.append(lg)
        out[n].classic.append(cl)
        if progress:
            progress(n, s, lg, cl)
    return [out[n] for n in names]


def experiment1_table(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "lgga_solves", "classic_solves", "lgga_solved", "classic_solved",
                "mean_m_star", "mse_ratio"])
    for r in results:
        ratio = "" if r.mse_ratio is None else f"{r.mse_ratio:.4g}"
        w.writerow([r.problem, r.lgga_solves, r.classic_solves, r.lgga_solved, r.classic_solved,
                    f"{np.mean(r.m_star):.1f}" if r.m_star else "", ratio])
    return buf.getvalue()


# Augmented datasets ---------------------------------------------------------


def augment(problem, initial: Dataset, config: RunConfig | None = None) -> tuple:
    """Run lgga_full on ``initial``; returns (augmented dataset, run result)."""
    p = _problem(problem)
    config = (config or RunConfig()).replace(mode="lgga_full")
    res = run(initial, p.truths, p.alphabet, config)
    return res.dataset, res


def augmented_of_size(problem, size: int, config: RunConfig, rng: np.random.Generator) -> Dataset:
    """A dataset of exactly ``size`` points: ceil(size/2) oracle points plus
    truth-generated ones. If augmentation yields too few, the shortfall is
    made up with more oracle points; surplus generated points are dropped in
    the order they were produced."""
    p = _problem(problem)
    m0 = max(1, math.ceil(size / 2))
    initial = sample_from_oracle(p, m0, rng)
    aug, _ = augment(p, initial, config)
    if len(aug) >= size:
        return aug.subset(range(size))
    for pt in sample_from_oracle(p, size - len(aug), rng):
        aug.append(pt)
    return aug


# Experiment 2 ---------------------------------------------------------------


@dataclass
class SweepResult:
    problem: str
    max_points: int
    lgga: list = field(default_factory=list)   # per trial: int, or None for NoDisc
    rand: list = field(default_factory=list)
    evaluations: int = 0

    @staticmethod
    def _summary(vals: list) -> str:
        found = [v for v in vals if v is not None]
        if not found:
            return NO_DISC
        mean = np.mean(found)
        half = (max(found) - min(found)) / 2
        s = f"{mean:.3g} ± {half:.3g}"
        return s if len(found) == len(vals) else f"{s} ({len(found)}/{len(vals)})"

    @property
    def lgga_summary(self) -> str:
        return self._summary(self.lgga)

    @property
    def rand_summary(self) -> str:
        return self._summary(self.rand)

    @property
    def solved_at_all(self) -> bool:
        return any(v is not None for v in self.lgga + self.rand)

    @property
    def lgga_never_worse(self) -> bool:
        """m'_LGGA <= m''_RAND in every trial (NoDisc counts as infinite)."""
        inf = math.inf
        return all((a if a is not None else inf) <= (b if b is not None else inf)
                   for a, b in zip(self.lgga, self.rand))

    @property
    def efficiency(self):
        """(m'' - m') / m'' in percent from the trial means, or a Disc/NoDisc marker."""
        a = [v for v in self.lgga if v is not None]
        b = [v for v in self.rand if v is not None]
        if not a:
            return NO_DISC
        if not b:
            return DISC
        return data_efficiency(float(np.mean(a)), float(np.mean(b)))

    @property
    def trial_efficiencies(self) -> list:
        return [data_efficiency(a, b) for a, b in zip(self.lgga, self.rand)
                if a is not None and b is not None]

    def to_dict(self) -> dict:
        return {
            "problem": self.problem, "max_points": self.max_points,
            "lgga": self.lgga, "rand": self.rand,
            "lgga_summary": self.lgga_summary, "rand_summary": self.rand_summary,
            "efficiency": self.efficiency, "lgga_never_worse": self.lgga_never_worse,
            "evaluations": self.evaluations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def data_efficiency(m_lgga: float, m_rand: float) -> float:
    if m_rand <= 0:
        raise ValueError("m_rand must be positive")
    return 100.0 * (m_rand - m_lgga) / m_rand


def minimal_size(solves_at: Callable[[int], bool], max_points: int, confirm: int = 2) -> int | None:
    """Smallest size in [1, max_points] at which ``solves_at`` holds.

    Halves the size until a failure brackets the boundary, bisects the
    bracket, then checks up to ``confirm`` sizes just below the answer and
    moves down if one of them also solves. None when max_points fails.
    """
    memo: dict = {}

    def ok(s: int) -> bool:
        if s not in memo:
            memo[s] = bool(solves_at(s))
        return memo[s]

    if max_points < 1 or not ok(max_points):
        return None
    hi, lo = max_points, 0
    s = max_points
    while s > 1:
        s = max(1, s // 2)
        if ok(s):
            hi = s
        else:
            lo = s
            break
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    moved = True
    while moved:
        moved = False
        for s in range(hi - 1, max(0, hi - 1 - confirm), -1):
            if ok(s):
                hi, moved = s, True
                break
    return hi


def _consume(problem, data: Dataset, consumer: RunConfig, seed: int) -> bool:
    res = run(data, (), problem.alphabet, consumer.replace(mode="classic", seed=seed))
    return solves(problem, res.best)


def _sweep_job(job) -> tuple:
    name, trial, arm, max_points, augment_cfg, consumer_cfg, confirm = job
    p = get_problem(name)
    calls = [0]

    def solves_at(size: int) -> bool:
        calls[0] += 1
        rng = _rng(name, "exp2", trial, size, arm)
        if arm == "lgga":
            data = augmented_of_size(p, size, augment_cfg.replace(seed=_key(name, trial, size)), rng)
        else:
            data = sample_from_oracle(p, size, rng)
        return _consume(p, data, consumer_cfg, _key(name, "consumer", trial, size))

    return minimal_size(solves_at, max_points, confirm), calls[0]


def data_efficiency_sweep(problem, config: RunConfig | None = None, max_points: int = 64,
                          trials: int = 5, augment_config: RunConfig | None = None,
                          confirm: int = 2, workers: int = 1) -> SweepResult:
    """Smallest augmented and random dataset sizes at which the consumer
    (the classic-mode engine, standing in for an external SR tool) recovers
    the target, per trial.

    ``config`` configures the consumer; its ``timeout_secs`` defaults to a
    desk-scale 90 s. ``augment_config`` configures dataset generation.
    """
    p = _problem(problem)
    consumer = config or RunConfig(mode="classic")
    if consumer.timeout_secs is None:
        consumer = consumer.replace(timeout_secs=DEFAULT_CONSUMER_TIMEOUT)
    augment_config = augment_config or RunConfig()
    jobs = [(p.name, t, arm, max_points, augment_config, consumer, confirm)
            for t in range(trials) for arm in ("lgga", "rand")]
    result = SweepResult(p.name, max_points)
    for (_, _, arm, *_), (m, calls) in zip(jobs, _map(_sweep_job, jobs, workers)):
        getattr(result, arm).append(m)
        result.evaluations += calls
    return result


def table2_csv(results: Sequence[SweepResult]) -> str:
    """Rows shaped like the published comparison: LGGA, No LGGA, DE %."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["equation", "LGGA", "No LGGA", "DE %"])
    for r in results:
        p = get_problem(r.problem)
        de = r.efficiency
        w.writerow([p.formula, r.lgga_summary, r.rand_summary,
                    de if isinstance(de, str) else f"{de:.4g}"])
    return buf.getvalue()


# Export ---------------------------------------------------------------------


def export_augmented(problem, initial_m: int, config: RunConfig | None, path,
                     strip_provenance: bool = False) -> Dataset:
    """Augment ``initial_m`` oracle points and write the result as CSV, plus
    ``<path>.json`` with the run's metadata. Same seed, same bytes."""
    p = _problem(problem)
    config = (config or RunConfig()).replace(mode="lgga_full")
    initial = sample_from_oracle(p, initial_m, _rng(p.name, "export", config.seed))
    aug, res = augment(p, initial, config)
    path = Path(path)
    aug.save_csv(path, include_provenance=not strip_provenance)
    meta = {
        "problem": p.name,
        "formula": p.formula,
        "truths": list(p.truth_dsl),
        "initial_m": initial_m,
        "final_m": len(aug),
        "generated": aug.n_generated,
        "best_expression": to_text(res.best, p.alphabet),
        "generations": len(res.reports),
        "stop_reason": res.reports[-1].stop_reason,
        "config": config.to_dict(),
    }
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2) + "\n")
    return aug

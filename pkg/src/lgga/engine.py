"""The truth-guided genetic programming loop.

One generation:

1. score every individual on the current dataset
   (MSE + lambda * TruthError, or MSE alone in classic mode);
2. pick the best performer;
3. in ``lgga_full`` mode, derive counterexamples for every dataset point
   and every truth the best performer violates, and append the new ones;
4. select parents (elitism + tournaments) and apply crossover/mutation;
5. top the population up with freshly generated random trees.

Points appended in step 3 take effect from the next generation. The run
stops at the generation limit, on timeout, or once the best performer's
MSE is below ``epsilon_mse`` and it produced no new counterexamples.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import Dataset
from .expr import Alphabet, Expr, crossover, evaluate_batch, mutate, ramped_half_and_half, to_text
from .truths import DEFAULT_VIOLATION_THRESHOLD, TruthProgram

log = logging.getLogger(__name__)

MODES = ("classic", "lgga_loss_only", "lgga_full")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "lgga_full"
    population_size: int = 300
    num_generations: int = 100
    lambda_truth: float = 1.0
    epsilon_mse: float = 1e-4
    tournament_size: int = 7
    p_crossover: float = 0.9
    p_mutation: float = 0.1
    elitism: int = 1
    fresh_blood_fraction: float = 0.05
    max_depth: int = 17
    init_depth: tuple = (2, 6)
    mutation_weights: tuple = (0.5, 0.3, 0.2)
    constant_sigma: float = 0.1
    mutation_subtree_depth: int = 2
    internal_node_bias: float = 0.9
    violation_threshold: float = DEFAULT_VIOLATION_THRESHOLD
    dedup_tol: float = 1e-9
    new_points_cap_factor: float = 2.0
    normalize_loss: bool = False
    seed: int = 0
    timeout_secs: float | None = None
    workers: int = 1

    def __post_init__(self):
        self.init_depth = tuple(self.init_depth)
        self.mutation_weights = tuple(self.mutation_weights)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("p_crossover", "p_mutation"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")
        if not 0.0 <= self.fresh_blood_fraction < 1.0:
            raise ConfigError(f"fresh_blood_fraction must be in [0, 1), got {self.fresh_blood_fraction}")
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if self.num_generations < 1:
            raise ConfigError("num_generations must be >= 1")
        if self.lambda_truth < 0:
            raise ConfigError("lambda_truth must be >= 0")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")
        if not 0 <= self.elitism < self.population_size:
            raise ConfigError("elitism must be in [0, population_size)")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        lo, hi = self.init_depth
        if not 0 <= lo <= hi <= self.max_depth:
            raise ConfigError(f"init_depth {self.init_depth} must lie within [0, max_depth]")
        w = self.mutation_weights
        if len(w) != 3 or min(w) < 0 or sum(w) <= 0:
            raise ConfigError("mutation_weights needs three nonnegative weights with a positive sum")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.timeout_secs is not None and self.timeout_secs <= 0:
            raise ConfigError("timeout_secs must be positive")

    def replace(self, **changes) -> "RunConfig":
        d = asdict(self)
        d.update(changes)
        return RunConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init_depth"] = list(self.init_depth)
        d["mutation_weights"] = list(self.mutation_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)


@dataclass
class GenerationReport:
    generation: int
    best_expr: str
    best_mse: float
    best_truth_error: float
    total_loss: float
    dataset_size: int
    added: int
    stop_reason: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


class RunResult(NamedTuple):
    best: Expr
    dataset: Dataset
    reports: list


def _mse(values: np.ndarray, y: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        m = float(np.mean((values - y) ** 2))
    return m if math.isfinite(m) else float(np.finfo(float).max)


def total_loss(candidate: Expr, dataset: Dataset, truths: Sequence, lambda_truth: float = 1.0,
               mode: str = "lgga_full") -> float:
    """MSE plus ``lambda_truth`` times the Truth Error; classic mode drops the truth term."""
    if len(dataset) == 0:
        raise ValueError("loss needs a nonempty dataset")
    prog = TruthProgram(list(truths), dataset.X, dataset.y)
    predicted = prog.predict(candidate)
    mse = prog.mse(candidate, predicted)
    if mode == "classic" or lambda_truth == 0 or not truths:
        return mse
    return mse + lambda_truth * prog.truth_error(candidate, predicted)


def combine_losses(mse: np.ndarray, te: np.ndarray, lambda_truth: float, normalize: bool = False) -> np.ndarray:
    """Weighted sum of the two loss terms, optionally each divided by its population median."""
    mse = np.asarray(mse, dtype=float)
    te = np.asarray(te, dtype=float)
    if normalize:
        m_mse, m_te = np.median(mse), np.median(te)
        mse = mse / (m_mse if m_mse > 0 else 1.0)
        te = te / (m_te if m_te > 0 else 1.0)
    with np.errstate(over="ignore"):
        out = mse + lambda_truth * te
    return np.nan_to_num(out, nan=np.finfo(float).max, posinf=np.finfo(float).max)


def tournament(losses: np.ndarray, size: int, rng: np.random.Generator) -> int:
    contenders = rng.integers(0, len(losses), size)
    return int(contenders[np.argmin(losses[contenders])])


def elite_indices(losses: np.ndarray, k: int) -> list:
    return [int(i) for i in np.argsort(losses, kind="stable")[:k]]


def select(population: Sequence, losses, config: RunConfig, rng: np.random.Generator,
           n: int | None = None) -> list:
    """Parent pool of size ``n`` (default: population size).

    The first ``config.elitism`` entries are the best individuals, copied
    unchanged; the rest are tournament winners (lowest loss wins).
    """
    losses = np.asarray(losses, dtype=float)
    if len(population) != len(losses):
        raise ValueError("population and losses differ in length")
    n = len(population) if n is None else n
    elites = elite_indices(losses, min(config.elitism, n))
    pool = [population[i] for i in elites]
    while len(pool) < n:
        pool.append(population[tournament(losses, config.tournament_size, rng)])
    return pool


def vary(parents: list, alphabet: Alphabet, config: RunConfig, rng: np.random.Generator) -> list:
    """Pairwise crossover then per-individual mutation, each with its probability."""
    out = list(parents)
    for i in range(1, len(out), 2):
        if rng.random() < config.p_crossover:
            out[i - 1], out[i] = crossover(out[i - 1], out[i], rng, config)
    for i in range(len(out)):
        if rng.random() < config.p_mutation:
            out[i] = mutate(out[i], alphabet, rng, config)
    return out


class Engine:
    """Runs one search. Not safe to share between threads mid-run."""

    def __init__(self, truths: Sequence, alphabet: Alphabet, config: RunConfig):
        self.truths = list(truths)
        self.alphabet = alphabet
        self.config = config
        for t in self.truths:
            t.check_arity(alphabet.arity)

    @property
    def uses_truth_loss(self) -> bool:
        return self.config.mode != "classic" and bool(self.truths)

    @property
    def augments(self) -> bool:
        return self.config.mode == "lgga_full" and bool(self.truths)

    def _score(self, expr: Expr, program: TruthProgram) -> tuple:
        if self.uses_truth_loss:
            predicted = program.predict(expr)
            return _mse(predicted[0], program.y), program.truth_error(expr, predicted)
        return _mse(evaluate_batch(expr, program.X).values, program.y), 0.0

    def score_population(self, population: Sequence, program: TruthProgram, cache: dict) -> tuple:
        """(mse, truth_error) arrays for ``population``.

        ``cache`` maps ``id(expr)`` to ``(expr, scores)``; survivors copied
        unchanged between generations are the same objects, so they are
        not re-evaluated. The stored expr keeps the id from being reused.
        Entries for trees no longer in the population are dropped.
        """
        todo = {}
        for e in population:
            hit = cache.get(id(e))
            if (hit is None or hit[0] is not e) and id(e) not in todo:
                todo[id(e)] = e
        if todo:
            items = list(todo.values())
            if self.config.workers > 1 and len(items) > 1:
                with ThreadPoolExecutor(self.config.workers) as ex:
                    results = list(ex.map(lambda e: self._score(e, program), items))
            else:
                results = [self._score(e, program) for e in items]
            for e, r in zip(items, results):
                cache[id(e)] = (e, r)
        live = {id(e): cache[id(e)] for e in population}
        cache.clear()
        cache.update(live)
        mse = np.array([live[id(e)][1][0] for e in population])
        te = np.array([live[id(e)][1][1] for e in population])
        return mse, te

    def run(self, dataset: Dataset, rng: np.random.Generator | None = None) -> RunResult:
        cfg = self.config
        if len(dataset) == 0:
            raise ValueError("run needs a nonempty dataset")
        if dataset.arity != self.alphabet.arity:
            raise ValueError(f"dataset arity {dataset.arity} != alphabet arity {self.alphabet.arity}")
        rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        ds = dataset.copy()
        cap = max(1, int(math.ceil(cfg.new_points_cap_factor * len(dataset))))
        lam = cfg.lambda_truth if self.uses_truth_loss else 0.0
        n_fresh = int(round(cfg.fresh_blood_fraction * cfg.population_size))
        n_fresh = min(n_fresh, cfg.population_size - max(cfg.elitism, 1))
        start = time.monotonic()

        population = ramped_half_and_half(self.alphabet, cfg.population_size, cfg.init_depth, rng)
        program = TruthProgram(self.truths, ds.X, ds.y)
        cache: dict = {}
        reports = []
        best = population[0]

        for gen in range(cfg.num_generations):
            mse, te = self.score_population(population, program, cache)
            losses = combine_losses(mse, te, lam, cfg.normalize_loss)
            bi = int(np.argmin(losses))
            best, best_mse = population[bi], float(mse[bi])
            best_te = float(te[bi]) if self.uses_truth_loss else (
                program.truth_error(best) if self.truths else 0.0)

            added = 0
            if self.augments:
                found = program.counterexamples(best, cfg.violation_threshold, gen)
                added = ds.append_dedup(found, cfg.dedup_tol, limit=cap)
                if added:
                    program = TruthProgram(self.truths, ds.X, ds.y)
                    cache.clear()

            reason = None
            if best_mse < cfg.epsilon_mse and added == 0:
                reason = "epsilon"
            elif gen == cfg.num_generations - 1:
                reason = "generations"
            elif cfg.timeout_secs is not None and time.monotonic() - start > cfg.timeout_secs:
                reason = "timeout"
            reports.append(GenerationReport(
                gen, to_text(best, self.alphabet), best_mse, best_te,
                best_mse + lam * best_te, len(ds), added, reason,
            ))
            log.debug("gen %d best=%s mse=%.3g te=%.3g n=%d +%d", gen, reports[-1].best_expr,
                      best_mse, best_te, len(ds), added)
            if reason is not None:
                break

            pool = select(population, losses, cfg, rng, cfg.population_size - n_fresh)
            k = min(cfg.elitism, len(pool))
            offspring = vary(pool[k:], self.alphabet, cfg, rng)
            fresh = ramped_half_and_half(self.alphabet, n_fresh, cfg.init_depth, rng)
            population = pool[:k] + offspring + fresh

        return RunResult(best, ds, reports)


def run(dataset: Dataset, truths: Sequence, alphabet: Alphabet, config: RunConfig,
        rng: np.random.Generator | None = None) -> RunResult:
    """Search for an expression fitting ``dataset``; see :class:`Engine`."""
    return Engine(truths, alphabet, config).run(dataset, rng)


def write_reports(reports: Sequence[GenerationReport], path) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in reports))

"""Labelled datasets with provenance, deduplicated growth and CSV persistence.

CSV layout: a header naming the input variables, then ``y``, then an
optional ``provenance`` column holding ``original`` or
``gen:<truth_id>:<generation>``. Floats are written with 17 significant
digits so a save/load round trip is bit-exact.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Provenance:
    truth_id: str | None = None
    generation: int | None = None

    @property
    def is_original(self) -> bool:
        return self.truth_id is None

    def __str__(self) -> str:
        if self.truth_id is None:
            return "original"
        return f"gen:{self.truth_id}:{self.generation}"

    @classmethod
    def parse(cls, text: str) -> "Provenance":
        text = text.strip()
        if text in ("", "original"):
            return ORIGINAL
        if text.startswith("gen:"):
            body, _, gen = text[4:].rpartition(":")
            if body and gen.lstrip("-").isdigit():
                return cls(body, int(gen))
        raise DatasetError(f"bad provenance value {text!r}")


ORIGINAL = Provenance()


def generated(truth_id: str, generation: int = 0) -> Provenance:
    return Provenance(truth_id, generation)


def _projection(arity: int) -> np.ndarray:
    # fixed irrational-ish weights so distinct rows rarely share a key
    return 1.0 + np.sqrt(np.arange(2, arity + 2, dtype=float)) % 1.0


def _key_radius(keys: np.ndarray, tol: float, w: np.ndarray) -> np.ndarray:
    # rows within tol in max-norm have keys within tol * sum(w); the second
    # term bounds the rounding error of the dot product
    return tol * w.sum() + 1e-12 * (1.0 + np.abs(keys))


def _near_rows(C: np.ndarray, X: np.ndarray, tol: float) -> np.ndarray:
    """For each row of C, whether some row of X is within tol in max-norm."""
    w = _projection(X.shape[1])
    kx, kc = X @ w, C @ w
    order = np.argsort(kx, kind="stable")
    sk = kx[order]
    r = _key_radius(kc, tol, w)
    lo = np.searchsorted(sk, kc - r, "left")
    hi = np.searchsorted(sk, kc + r, "right")
    near = np.zeros(len(C), dtype=bool)
    width = hi - lo
    if not width.any():
        return near
    cand = np.flatnonzero(width)
    span = int(width[cand].max())
    if span <= 64:
        idx = lo[cand, None] + np.arange(span)
        valid = idx < hi[cand, None]
        rows = X[order[np.minimum(idx, len(sk) - 1)]]
        close = np.abs(rows - C[cand, None, :]).max(axis=2) <= tol
        near[cand] = (close & valid).any(axis=1)
        return near
    for i in cand:
        near[i] = bool((np.abs(X[order[lo[i]:hi[i]]] - C[i]).max(axis=1) <= tol).any())
    return near


@dataclass(frozen=True)
class DataPoint:
    inputs: tuple
    label: float
    provenance: Provenance = ORIGINAL

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(float(v) for v in self.inputs))
        object.__setattr__(self, "label", float(self.label))
        if not all(math.isfinite(v) for v in self.inputs) or not math.isfinite(self.label):
            raise DatasetError(f"data point values must be finite: {self.inputs} -> {self.label}")


class Dataset:
    """Ordered labelled points of uniform arity.

    Inputs and labels are kept as numpy arrays (``X``, ``y``). Growing the
    dataset rebinds those arrays rather than writing into them, so an array
    obtained before an append is an immutable snapshot.
    """

    def __init__(self, var_names: Sequence[str], points: Iterable[DataPoint] = ()):
        self.var_names = tuple(var_names)
        if len(set(self.var_names)) != len(self.var_names) or not self.var_names:
            raise DatasetError(f"variable names must be distinct and nonempty: {self.var_names}")
        self.X = np.empty((0, self.arity))
        self.y = np.empty(0)
        self.provenance: list = []
        pts = list(points)
        if pts:
            self._extend(pts)

    @property
    def arity(self) -> int:
        return len(self.var_names)

    def __len__(self) -> int:
        return self.y.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> DataPoint:
        return DataPoint(tuple(self.X[i]), float(self.y[i]), self.provenance[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.var_names == other.var_names
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and self.provenance == other.provenance
        )

    def __repr__(self) -> str:
        return f"Dataset({list(self.var_names)}, n={len(self)}, generated={self.n_generated})"

    @property
    def points(self) -> list:
        return list(self)

    @property
    def n_original(self) -> int:
        return sum(1 for p in self.provenance if p.is_original)

    @property
    def n_generated(self) -> int:
        return len(self) - self.n_original

    @classmethod
    def from_arrays(cls, var_names, X, y, provenance=None) -> "Dataset":
        ds = cls(var_names)
        X = np.asarray(X, dtype=float).reshape(-1, len(ds.var_names))
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DatasetError(f"{X.shape[0]} input rows but {y.shape[0]} labels")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DatasetError("dataset values must be finite")
        ds.X, ds.y = X.copy(), y.copy()
        ds.provenance = list(provenance) if provenance is not None else [ORIGINAL] * len(y)
        return ds

    def copy(self) -> "Dataset":
        return Dataset.from_arrays(self.var_names, self.X, self.y, self.provenance)

    def subset(self, indices) -> "Dataset":
        idx = list(indices)
        return Dataset.from_arrays(self.var_names, self.X[idx], self.y[idx], [self.provenance[i] for i in idx])

    def _extend(self, pts: list) -> None:
        for p in pts:
            if len(p.inputs) != self.arity:
                raise DatasetError(f"point has {len(p.inputs)} inputs, dataset arity is {self.arity}")
        self.X = np.vstack([self.X, np.array([p.inputs for p in pts], dtype=float)])
        self.y = np.concatenate([self.y, np.array([p.label for p in pts], dtype=float)])
        self.provenance = self.provenance + [p.provenance for p in pts]

    def append(self, point: DataPoint) -> None:
        self._extend([point])

    def append_dedup(self, points: Iterable[DataPoint], tol: float = 1e-9, limit: int | None = None) -> int:
        """Append each point whose inputs are farther than ``tol`` (max-norm)
        from every point already present, including ones accepted earlier in
        this call. Stops after ``limit`` acceptances. Returns the count added.
        """
        pts = list(points)
        for p in pts:
            if len(p.inputs) != self.arity:
                raise DatasetError(f"point has {len(p.inputs)} inputs, dataset arity is {self.arity}")
        if not pts:
            return 0
        C = np.array([p.inputs for p in pts], dtype=float).reshape(len(pts), self.arity)
        fresh = ~_near_rows(C, self.X, tol) if len(self) else np.ones(len(pts), dtype=bool)
        w = _projection(self.arity)
        keys = C @ w
        radius = _key_radius(keys, tol, w)
        accepted = []
        seen_keys, seen_rows = [], []   # accepted so far, sorted by key
        for i in np.flatnonzero(fresh):
            if limit is not None and len(accepted) >= limit:
                break
            k, x = keys[i], C[i]
            lo = bisect.bisect_left(seen_keys, k - radius[i])
            hi = bisect.bisect_right(seen_keys, k + radius[i])
            if any(np.max(np.abs(seen_rows[j] - x)) <= tol for j in range(lo, hi)):
                continue
            j = bisect.bisect_right(seen_keys, k)
            seen_keys.insert(j, k)
            seen_rows.insert(j, x)
            accepted.append(pts[i])
        if accepted:
            self._extend(accepted)
        return len(accepted)

    # CSV ------------------------------------------------------------------

    def to_csv_text(self, include_provenance: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = list(self.var_names) + ["y"] + (["provenance"] if include_provenance else [])
        w.writerow(header)
        for i in range(len(self)):
            row = [_fmt(v) for v in self.X[i]] + [_fmt(self.y[i])]
            if include_provenance:
                row.append(str(self.provenance[i]))
            w.writerow(row)
        return buf.getvalue()

    def save_csv(self, path, include_provenance: bool = True) -> None:
        Path(path).write_text(self.to_csv_text(include_provenance))

    @classmethod
    def from_csv_text(cls, text: str) -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r and any(c.strip() for c in r)]
        if not rows:
            raise DatasetError("empty CSV: a header row is required")
        header = [h.strip() for h in rows[0]]
        has_prov = header[-1] == "provenance"
        data_cols = header[:-1] if has_prov else header
        if len(data_cols) < 2 or data_cols[-1] != "y":
            raise DatasetError(f"header must list input variables then 'y' (optionally 'provenance'), got {header}")
        names = data_cols[:-1]
        X, y, prov = [], [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(header):
                raise DatasetError(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
            try:
                vals = [float(c) for c in row[: len(data_cols)]]
            except ValueError as exc:
                raise DatasetError(f"row {lineno}: non-numeric cell ({exc})") from None
            if not all(math.isfinite(v) for v in vals):
                raise DatasetError(f"row {lineno}: values must be finite")
            X.append(vals[:-1])
            y.append(vals[-1])
            prov.append(Provenance.parse(row[-1]) if has_prov else ORIGINAL)
        return cls.from_arrays(names, np.array(X, dtype=float).reshape(-1, len(names)), y, prov)

    @classmethod
    def load_csv(cls, path) -> "Dataset":
        return cls.from_csv_text(Path(path).read_text())


def _fmt(v: float) -> str:
    # 17 significant digits reproduce any double exactly
    return format(float(v), ".17g")


def load_csv(path) -> Dataset:
    return Dataset.load_csv(path)


def save_csv(dataset: Dataset, path, include_provenance: bool = True) -> None:
    dataset.save_csv(path, include_provenance)


def append_dedup(dataset: Dataset, points, tol: float = 1e-9) -> int:
    return dataset.append_dedup(points, tol)


def sample_from_oracle(problem, n: int, rng: np.random.Generator) -> Dataset:
    """Draw ``n`` inputs uniformly from the problem's ranges and label them
    with its ground-truth evaluator, redrawing rows where it is singular."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo = np.array([r[0] for r in problem.ranges], dtype=float)
    hi = np.array([r[1] for r in problem.ranges], dtype=float)
    X = np.empty((0, lo.size))
    y = np.empty(0)
    for _ in range(1000):
        need = n - len(y)
        if need <= 0:
            break
        Xc = rng.uniform(lo, hi, size=(need, lo.size))
        with np.errstate(all="ignore"):
            yc = np.asarray(problem.evaluate(Xc), dtype=float)
        ok = np.isfinite(yc) & problem.admissible(Xc)
        X = np.vstack([X, Xc[ok]])
        y = np.concatenate([y, yc[ok]])
    if len(y) < n:
        raise RuntimeError(f"could not draw {n} nonsingular points for {problem.name}")
    return Dataset.from_arrays(problem.var_names, X, y)

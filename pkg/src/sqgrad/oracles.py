"""Set-function oracles over {0,1}^d with exact query accounting.

Every oracle counts each evaluated vertex, atomically, whether queries
arrive one at a time or in batches.  Estimator code never peeks inside
an oracle; the counter is the ground truth for query budgets.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, DimensionMismatchError, DomainError

__all__ = [
    "Oracle",
    "TableOracle",
    "SymmetricSliceOracle",
    "KnapsackOracle",
    "make_knapsack",
    "hamming_weight",
    "ProblemSpec",
    "parse_problem",
]


def hamming_weight(y) -> int:
    """Number of ones in a binary vector."""
    y = np.asarray(y)
    return int(np.sum(y != 0))


class Oracle:
    """Base class: dimension, vectorised evaluation, call counting."""

    def __init__(self, d: int):
        if int(d) < 1:
            raise DomainError("oracle dimension must be at least 1")
        self.d = int(d)
        self._lock = threading.Lock()
        self._calls = 0

    # ---------- queries ----------

    def query(self, y) -> float:
        """Evaluate one vertex; increments the counter by exactly 1."""
        y = self._checked(np.asarray(y, dtype=float)[None, :])
        with self._lock:
            self._calls += 1
        return float(self._values(y)[0])

    def query_batch(self, ys) -> np.ndarray:
        """Evaluate a (n, d) batch; increments the counter by n."""
        ys = self._checked(np.asarray(ys, dtype=float))
        with self._lock:
            self._calls += ys.shape[0]
        return self._values(ys)

    def _checked(self, ys: np.ndarray) -> np.ndarray:
        if ys.ndim != 2 or ys.shape[1] != self.d:
            raise DimensionMismatchError(
                f"expected keys of shape (n, {self.d}), got {ys.shape}"
            )
        if not np.all((ys == 0.0) | (ys == 1.0)):
            raise DomainError("oracle keys must be 0/1 vectors")
        return ys

    def _values(self, ys: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # ---------- accounting ----------

    @property
    def call_count(self) -> int:
        with self._lock:
            return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0


class TableOracle(Oracle):
    """Dense table of 2^d values, indexed by the key's bit pattern.

    Key (y_1, ..., y_d) maps to the integer with y_1 as the most
    significant bit, matching the ``bits`` column of the CSV format
    (index 1 leftmost).
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=float).ravel()
        d = int(math.log2(values.size)) if values.size else 0
        if values.size < 2 or (1 << d) != values.size:
            raise DomainError("table length must be a power of two, at least 2")
        super().__init__(d)
        self._table = values
        self._powers = 1 << np.arange(d - 1, -1, -1, dtype=np.int64)

    @classmethod
    def from_function(cls, d: int, fn: Callable) -> "TableOracle":
        """Tabulate fn over all vertices (fn never sees the counter)."""
        if not 1 <= int(d) <= 25:
            raise DomainError("from_function supports 1 <= d <= 25")
        d = int(d)
        shifts = np.arange(d - 1, -1, -1, dtype=np.int64)
        idx = np.arange(1 << d, dtype=np.int64)
        bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(float)
        values = np.array([float(fn(row)) for row in bits])
        return cls(values)

    @classmethod
    def from_csv(cls, path) -> "TableOracle":
        """Load a complete table from CSV with columns ``bits,value``."""
        rows: dict[str, float] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"bits", "value"} <= set(
                reader.fieldnames
            ):
                raise ConfigError(f"{path}: expected CSV columns bits,value")
            for row in reader:
                bits = row["bits"].strip()
                if not bits or set(bits) - {"0", "1"}:
                    raise ConfigError(f"{path}: bad bits field {row['bits']!r}")
                if bits in rows:
                    raise ConfigError(f"{path}: duplicate bits {bits!r}")
                try:
                    rows[bits] = float(row["value"])
                except ValueError as exc:
                    raise ConfigError(
                        f"{path}: bad value {row['value']!r} for bits {bits!r}"
                    ) from exc
        if not rows:
            raise ConfigError(f"{path}: empty table")
        d = len(next(iter(rows)))
        if any(len(b) != d for b in rows) or len(rows) != (1 << d):
            raise ConfigError(f"{path}: table must list all 2^{d} keys exactly once")
        values = np.empty(1 << d)
        for bits, val in rows.items():
            values[int(bits, 2)] = val
        return cls(values)

    def _values(self, ys: np.ndarray) -> np.ndarray:
        idx = (ys.astype(np.int64) @ self._powers).astype(np.int64)
        return self._table[idx].astype(float)


class SymmetricSliceOracle(Oracle):
    """Objective that depends on the key only through its hamming weight S.

    First matching branch wins:

    * S = d                      -> 3   (isolated spike at the top)
    * |S - floor(d/2)| <= floor(0.133 d) -> 18  (wide middle plateau)
    * S <= floor(0.233 d)        -> -2  (penalised bottom band)
    * otherwise                  -> 0
    """

    def __init__(self, d: int):
        super().__init__(d)
        self._half = d // 2
        self._band = math.floor(0.133 * d)
        self._low = math.floor(0.233 * d)

    def _values(self, ys: np.ndarray) -> np.ndarray:
        s = ys.sum(axis=1)
        return np.select(
            [
                s == self.d,
                np.abs(s - self._half) <= self._band,
                s <= self._low,
            ],
            [3.0, 18.0, -2.0],
            default=0.0,
        )


class KnapsackOracle(Oracle):
    """Reward for packing close to half the total weight.

    With weights w and target T = floor(sum(w) / 2), a key of packed
    weight S scores 20 when |S - T| <= 2, -5 when S > T + 2 (overfull),
    and 0 when S < T - 2 (underfull).
    """

    def __init__(self, weights):
        weights = np.asarray(weights)
        if weights.ndim != 1 or weights.size < 1:
            raise DomainError("weights must be a nonempty 1-D array")
        if not np.all((weights == weights.astype(int)) & (weights >= 1)):
            raise DomainError("weights must be positive integers")
        super().__init__(weights.size)
        self.weights = weights.astype(np.int64)
        self.target = int(self.weights.sum()) // 2

    def _values(self, ys: np.ndarray) -> np.ndarray:
        s = ys @ self.weights
        t = self.target
        return np.select(
            [np.abs(s - t) <= 2, s > t + 2],
            [20.0, -5.0],
            default=0.0,
        )


def make_knapsack(d: int, rng: np.random.Generator) -> KnapsackOracle:
    """Fresh knapsack instance with weights drawn uniformly from {1..9}."""
    if int(d) < 1:
        raise DomainError("d must be at least 1")
    return KnapsackOracle(rng.integers(1, 10, size=int(d)))


@dataclass(frozen=True)
class ProblemSpec:
    """A named problem family; ``make`` builds one instance per trial.

    ``randomized`` marks families whose instances depend on the
    generator (knapsack draws fresh weights per trial); for the others
    every trial may share a single oracle object.
    """

    name: str
    d: int
    randomized: bool
    make: Callable[[np.random.Generator], Oracle]


def parse_problem(text: str) -> ProblemSpec:
    """Parse ``slice:<d>``, ``knapsack:<d>`` or ``table:<path>``."""
    text = str(text).strip()
    kind, sep, arg = text.partition(":")
    kind = kind.lower()
    if not sep or not arg:
        raise ConfigError(f"cannot parse problem {text!r}")
    if kind in ("slice", "knapsack"):
        try:
            d = int(arg)
        except ValueError as exc:
            raise ConfigError(f"bad dimension in {text!r}") from exc
        if d < 1:
            raise ConfigError(f"dimension must be positive in {text!r}")
        if kind == "slice":
            return ProblemSpec(text, d, False, lambda rng: SymmetricSliceOracle(d))
        return ProblemSpec(text, d, True, lambda rng: make_knapsack(d, rng))
    if kind == "table":
        oracle = TableOracle.from_csv(arg)

        def _clone(rng: np.random.Generator, _table=oracle._table) -> Oracle:
            return TableOracle(_table)

        return ProblemSpec(text, oracle.d, False, _clone)
    raise ConfigError(f"unknown problem kind {kind!r} in {text!r}")

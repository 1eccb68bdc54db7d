"""Numeric tables with named columns and per-row weights.

CSV layout used everywhere: one header row with the column names
(``x0..x{d-1}`` by default), float values formatted with the shortest
round-trip representation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import LengthError


def format_float(x) -> str:
    """Shortest decimal string that parses back to the same float."""
    return repr(float(x))


@dataclass
class Dataset:
    """An n x d table. Weights default to the uniform distribution 1/n."""

    values: np.ndarray
    columns: tuple[str, ...] = ()
    weights: np.ndarray | None = None
    discrete: tuple[bool, ...] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        n, d = self.values.shape
        if not self.columns:
            self.columns = tuple(f"x{j}" for j in range(d))
        else:
            self.columns = tuple(self.columns)
        if len(self.columns) != d:
            raise LengthError(f"{len(self.columns)} column names for {d} columns")
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n) if n else np.empty(0)
        else:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            if self.weights.shape != (n,):
                raise LengthError(f"weights shape {self.weights.shape}, expected ({n},)")
        if self.discrete is not None:
            self.discrete = tuple(bool(b) for b in self.discrete)
            if len(self.discrete) != d:
                raise LengthError(f"{len(self.discrete)} discrete flags for {d} columns")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.values:
                writer.writerow([format_float(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [[float(v) for v in row] for row in reader if row]
        values = np.asarray(rows, dtype=np.float64)
        if values.size == 0:
            values = values.reshape(0, len(header))
        return cls(values=values, columns=tuple(header))

"""Strictly positive edge pmfs, with an optional exact rational form."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exact import to_fraction
from .multigraph import Multigraph

SUM_TOL = 1e-12


class BetaRescaledWarning(UserWarning):
    """Edge weights did not sum to one and were normalized."""


@dataclass(frozen=True)
class BetaPmf:
    values: np.ndarray = field(compare=False)
    exact: tuple | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("beta must be a nonempty vector")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("beta must be strictly positive")
        if self.exact is not None:
            ex = tuple(to_fraction(x) for x in self.exact)
            if sum(ex) != 1:
                raise ValueError("exact beta must sum to exactly 1")
            object.__setattr__(self, "exact", ex)
        elif abs(v.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"beta sums to {v.sum()!r}, not 1")

    def __len__(self):
        return self.values.size

    @classmethod
    def uniform(cls, g_or_m) -> "BetaPmf":
        m = g_or_m.n_edges if isinstance(g_or_m, Multigraph) else int(g_or_m)
        q = Fraction(1, m)
        return cls(np.full(m, 1.0 / m), (q,) * m)

    @classmethod
    def from_weights(cls, weights: Sequence, rescale: bool = True, warn: bool = True) -> "BetaPmf":
        """Build from positive weights, normalizing when they do not sum to one.

        Rational inputs (ints, Fractions, decimal or ``p/q`` strings) keep an
        exact form; floats are taken at face value.
        """
        raw = list(weights)
        exact = None
        if all(isinstance(x, (int, Fraction, str)) for x in raw):
            fr = [to_fraction(x) for x in raw]
            if any(x <= 0 for x in fr):
                raise ValueError("beta must be strictly positive")
            total = sum(fr)
            if total != 1:
                if not rescale:
                    raise ValueError(f"beta sums to {total}, not 1")
                if warn:
                    warnings.warn(f"beta sums to {total}; rescaled to a pmf", BetaRescaledWarning, stacklevel=2)
                fr = [x / total for x in fr]
            exact = tuple(fr)
            vals = np.array([float(x) for x in fr])
        else:
            vals = np.asarray([float(x) for x in raw])
            if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
                raise ValueError("beta must be strictly positive")
            total = vals.sum()
            if abs(total - 1.0) > SUM_TOL:
                if not rescale:
                    raise ValueError(f"beta sums to {total!r}, not 1")
                if warn:
                    warnings.warn(f"beta sums to {total!r}; rescaled to a pmf", BetaRescaledWarning, stacklevel=2)
            vals = vals / total
        return cls(vals, exact)

    def target(self, rank: int) -> np.ndarray:
        """(|V|-1) * beta: the edge usage vector a fair tree law must match."""
        return rank * self.values

    def exact_target(self, rank: int) -> list[Fraction] | None:
        return None if self.exact is None else [rank * x for x in self.exact]

    def restrict(self, edge_ids) -> "BetaPmf":
        """Renormalized restriction to a subset of edges (ids in the given order)."""
        ids = list(edge_ids)
        if self.exact is not None:
            sub = [self.exact[i] for i in ids]
            tot = sum(sub)
            fr = tuple(x / tot for x in sub)
            return BetaPmf(np.array([float(x) for x in fr]), fr)
        sub = self.values[ids]
        return BetaPmf(sub / sub.sum())

    def mass(self, edge_ids):
        """beta(E') exactly when possible."""
        if self.exact is not None:
            return sum((self.exact[i] for i in edge_ids), Fraction(0))
        return float(self.values[list(edge_ids)].sum())

    def as_strings(self) -> list[str] | None:
        return None if self.exact is None else [str(x) for x in self.exact]

"""Search for sparse {0,1} combiners that stay valid.

Random growth until the combiner decomposes a random H, then greedy
removal of ones in shuffled sweeps. Results are upper bounds on the true
minimum; nothing here certifies optimality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dims, PreconditionError, RngSpec, as_rng, numeric_rank, sample_gaussian
from .solver import lossless_feasible, t_opt, try_decompose
from .validity import validate_combiner


@dataclass
class SearchResult:
    a: np.ndarray
    ones: int
    sum_modules: int
    valid: bool
    iterations: int
    T: int

    def to_row(self, dims: Dims, seed: int) -> dict:
        return dict(M=dims.M, K=dims.K, L=dims.L, T=self.T, ones=self.ones,
                    sum_modules=self.sum_modules, valid=int(self.valid),
                    seed=seed, iterations=self.iterations)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _cover(M: int, T: int, L: int, g: np.random.Generator) -> np.ndarray:
    """Fewest ones hitting every row and column, with the rows of each
    L-row block on distinct columns (so every block has a full matching)."""
    a = np.zeros((M, T))
    uncovered = list(g.permutation(T))
    for start in range(0, M, L):
        take = uncovered[:L]
        uncovered = uncovered[L:]
        rest = [c for c in g.permutation(T) if c not in take]
        cols = take + rest[:L - len(take)]
        cols = [cols[i] for i in g.permutation(L)]
        for i, c in enumerate(cols):
            a[start + i, c] = 1
    for c in uncovered:
        a[g.integers(M), c] = 1
    return a


def random_sparse_a(dims: Dims, ones_fraction: float, rng: RngSpec | int) -> np.ndarray:
    """Random {0,1} combiner with ``round(ones_fraction * M * T)`` ones.

    Every row and column holds a one and each block's rows start on
    distinct columns. Validity is not checked.
    """
    M, T, L = dims.M, dims.T, dims.L
    if not 0 < ones_fraction <= 1:
        raise PreconditionError("ones_fraction must lie in (0, 1]")
    if L > T:
        raise PreconditionError(f"L={L} > T={T}: no block can reach rank L")
    n = _round_half_up(ones_fraction * M * T)
    if n < max(M, T):
        raise PreconditionError(f"{n} ones cannot cover {M} rows and {T} columns")
    g = as_rng(rng).generator()
    a = _cover(M, T, L, g)
    free = np.flatnonzero(a.ravel() == 0)
    extra = n - int(a.sum())
    if extra > 0:
        a.ravel()[g.choice(free, size=extra, replace=False)] = 1
    elif extra < 0:
        # only possible when M > T columns force stacking; not with the cover above
        raise PreconditionError(f"cover needs {int(a.sum())} ones, budget is {n}")
    return a


def _structurally_ok(a: np.ndarray, L: int) -> bool:
    if not (a.any(axis=1).all() and a.any(axis=0).all()):
        return False
    return all(numeric_rank(a[s:s + L]) == L for s in range(0, a.shape[0], L))


class _Oracle:
    """Single-draw validity test with a fixed H (one draw decides a.s.)."""

    def __init__(self, dims: Dims, rng: RngSpec):
        self.dims = dims
        self.h = sample_gaussian(rng.child(0), dims.M, dims.K)
        self.rng = rng.child(1)
        self.calls = 0

    def __call__(self, a: np.ndarray) -> bool:
        if not _structurally_ok(a, self.dims.L):
            return False
        self.calls += 1
        return try_decompose(self.h, a, self.dims, self.rng.child(self.calls)) is not None


def _grow(dims: Dims, oracle: _Oracle, g: np.random.Generator, budget: int):
    a = _cover(dims.M, dims.T, dims.L, g)
    zeros = list(g.permutation(np.flatnonzero(a.ravel() == 0)))
    while oracle.calls < budget:
        if oracle(a):
            return a
        if not zeros:
            return None
        a.ravel()[zeros.pop()] = 1
    return None


def _prune(a: np.ndarray, oracle: _Oracle, g: np.random.Generator, budget: int):
    """Drop ones in shuffled sweeps until no single removal stays valid."""
    while True:
        removed = False
        for idx in g.permutation(np.flatnonzero(a.ravel() == 1)):
            if oracle.calls >= budget:
                return a, False
            a.ravel()[idx] = 0
            if oracle(a):
                removed = True
            else:
                a.ravel()[idx] = 1
        if not removed:
            return a, True


def minimize_ones(dims: Dims, rng: RngSpec | int, budget: int = 4000,
                  restarts: int | None = None) -> SearchResult:
    """Sparsest valid {0,1} combiner found within ``budget`` validity tests.

    Each restart grows a random valid combiner and prunes it to a
    1-minimal one; the sparsest result is re-confirmed with three fresh
    H draws.
    """
    if not lossless_feasible(dims):
        raise PreconditionError(f"{dims} does not satisfy the lossless bound")
    rng = as_rng(rng)
    best = None
    total = 0
    r = 0
    while total < budget and (restarts is None or r < restarts):
        sub = rng.child(r)
        g = sub.generator()
        oracle = _Oracle(dims, sub.child(7))
        remaining = budget - total
        a = _grow(dims, oracle, g, remaining)
        if a is not None:
            a, minimal = _prune(a, oracle, g, remaining)
            if minimal and (best is None or a.sum() < best.sum()):
                best = a.copy()
        total += max(oracle.calls, 1)
        r += 1
    if best is None:
        raise SearchFailure(f"no valid combiner found within {budget} tests")
    valid = validate_combiner(best, dims, rng.child(10**6), trials=3).valid
    ones = int(best.sum())
    return SearchResult(best, ones, max(ones - dims.T, 0), valid, total, dims.T)


class SearchFailure(RuntimeError):
    pass


def valid_fraction(dims: Dims, ones_fraction: float, trials: int,
                   rng: RngSpec | int) -> tuple[float, float]:
    """Share of random sparse combiners that are valid, with its standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_rng(rng)
    hits = 0
    for i in range(trials):
        a = random_sparse_a(dims, ones_fraction, rng.child(i, 0))
        hits += validate_combiner(a, dims, rng.child(i, 1)).valid
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)


def default_dims(M: int, K: int, L: int) -> Dims:
    return Dims(M, K, L, t_opt(M, K, L))

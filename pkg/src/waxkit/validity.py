"""Validity of a fixed combiner A.

A is valid when almost every H admits H = W A X. One random H decides
this with probability one, so :func:`validate_combiner` is a handful of
decomposition attempts. The rank checks are necessary conditions only;
they can prove a combiner invalid but never valid.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    DimensionError,
    Dims,
    PreconditionError,
    RngSpec,
    as_cmatrix,
    as_rng,
    numeric_rank,
    sample_gaussian,
)
from .solver import SUCCESS_TOL, WaxInfeasible, lossless_feasible, wax_decompose

ENUM_CAP = 10_000


@dataclass
class Verdict:
    valid: bool
    trials: int
    residuals: list[float] = field(default_factory=list)
    failed_condition: str | None = None

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "trials": self.trials,
            "residuals": [float(r) for r in self.residuals],
            "failed_condition": self.failed_condition,
        }


def validate_combiner(a, dims: Dims, rng: RngSpec | int | None = None,
                      trials: int = 1) -> Verdict:
    a = as_cmatrix(a, "A")
    dims.require_square()
    if a.shape != (dims.M, dims.T):
        raise DimensionError(f"A is {a.shape}, expected ({dims.M}, {dims.T})")
    if not lossless_feasible(dims):
        raise PreconditionError(
            f"T={dims.T} is below the lossless bound for M={dims.M}, K={dims.K}, L={dims.L}"
        )
    rng = as_rng(rng)
    residuals = []
    for i in range(trials):
        h = sample_gaussian(rng.child(i, 0), dims.M, dims.K)
        try:
            f = wax_decompose(h, a, dims, rng.child(i, 1))
        except WaxInfeasible as exc:
            residuals.append(exc.diagnostics.get("best_residual", math.inf))
            return Verdict(False, i + 1, residuals, "decomposition")
        residuals.append(f.residual)
    assert all(r <= SUCCESS_TOL for r in residuals)
    return Verdict(True, trials, residuals)


@dataclass
class RankCheck:
    """Outcome of a necessary-condition scan.

    ``witness`` lists the offending block indices (block-rank) or
    ``(block, row)`` pairs (row-rank). ``exhaustive`` is False when the
    selections were sampled, in which case a pass only means no
    violation was found.
    """

    passed: bool
    condition: str
    checked: int
    exhaustive: bool
    witness: list | None = None
    rank: int | None = None
    required: float | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "condition": self.condition,
            "checked": self.checked,
            "exhaustive": self.exhaustive,
            "witness": self.witness,
            "rank": self.rank,
            "required": self.required,
        }


def _block_subsets(P: int, cap: int, g: np.random.Generator):
    total = 2 ** P - 1
    if total <= cap:
        for f in range(1, P + 1):
            yield from itertools.combinations(range(P), f)
        return
    # singles and pairs first: they carry most violations in practice
    budget = cap
    for f in (1, 2):
        n = math.comb(P, f)
        if n > budget:
            break
        yield from itertools.combinations(range(P), f)
        budget -= n
    for _ in range(budget):
        f = int(g.integers(3, P + 1)) if P >= 3 else P
        yield tuple(sorted(g.choice(P, size=f, replace=False).tolist()))


def check_block_rank(a, dims: Dims, subset_size_cap: int = ENUM_CAP,
                     rng: RngSpec | int | None = None) -> RankCheck:
    """rank of every F-block submatrix must reach min(F L, K)."""
    a = as_cmatrix(a, "A")
    dims.require_square()
    L, K, P = dims.L, dims.K, dims.M // dims.L
    if a.shape[0] != dims.M:
        raise DimensionError(f"A has {a.shape[0]} rows, expected M={dims.M}")
    g = as_rng(rng).generator()
    exhaustive = 2 ** P - 1 <= subset_size_cap
    checked = 0
    for subset in _block_subsets(P, subset_size_cap, g):
        checked += 1
        rows = np.concatenate([np.arange(p * L, (p + 1) * L) for p in subset])
        need = min(len(subset) * L, K)
        r = numeric_rank(a[rows])
        if r < need:
            return RankCheck(False, "block-rank", checked, exhaustive,
                             list(subset), r, need)
    return RankCheck(True, "block-rank", checked, exhaustive)


def _row_selections(a: np.ndarray, dims: Dims, cap: int, g: np.random.Generator):
    L, P = dims.L, dims.M // dims.L
    total = (L + 1) ** P - 1
    if total <= cap:
        for choice in itertools.product(range(-1, L), repeat=P):
            sel = [(p, r) for p, r in enumerate(choice) if r >= 0]
            if sel:
                yield sel
        return
    # identical rows spread over distinct blocks are the textbook violation
    groups: dict[bytes, list[tuple[int, int]]] = {}
    for m in range(dims.M):
        groups.setdefault(a[m].tobytes(), []).append((m // L, m % L))
    budget = cap
    for members in groups.values():
        seen, sel = set(), []
        for p, r in members:
            if p not in seen:
                seen.add(p)
                sel.append((p, r))
        if len(sel) > 1 and budget > 0:
            budget -= 1
            yield sel
    for _ in range(budget):
        size = int(g.integers(1, P + 1))
        blocks = sorted(g.choice(P, size=size, replace=False).tolist())
        yield [(p, int(g.integers(L))) for p in blocks]


def check_row_rank(a, dims: Dims, subset_size_cap: int = ENUM_CAP,
                   rng: RngSpec | int | None = None) -> RankCheck:
    """R rows from R distinct blocks must have rank > R (K - L) / K."""
    a = as_cmatrix(a, "A")
    dims.require_square()
    L, K = dims.L, dims.K
    if a.shape[0] != dims.M:
        raise DimensionError(f"A has {a.shape[0]} rows, expected M={dims.M}")
    g = as_rng(rng).generator()
    exhaustive = (L + 1) ** (dims.M // L) - 1 <= subset_size_cap
    checked = 0
    for sel in _row_selections(a, dims, subset_size_cap, g):
        checked += 1
        R = len(sel)
        r = numeric_rank(a[[p * L + i for p, i in sel]])
        # rank > R (K - L) / K  <=>  rank * K > R (K - L)
        if not r * K > R * (K - L):
            return RankCheck(False, "row-rank", checked, exhaustive,
                             [list(s) for s in sel], r, R * (K - L) / K)
    return RankCheck(True, "row-rank", checked, exhaustive)


# -- sparsity bound ---------------------------------------------------------

@dataclass(frozen=True)
class SparsityBound:
    """``r_max`` is None when unbounded (L = K)."""

    r_max: int | None
    Q: int
    min_ones: int

    def to_dict(self) -> dict:
        return {"r_max": self.r_max, "Q": self.Q, "min_ones": self.min_ones}


def max_block_repeats(K: int, L: int) -> int | None:
    """ceil(K / (K - L) - 1), or None for L = K."""
    if L >= K:
        return None
    return (K - 1) // (K - L)


def ones_lower_bound(m: int, k: int, l: int, t: int) -> SparsityBound:
    """Fewest ones a valid {0,1} combiner can carry.

    Rows are filled cheapest first: every row pattern with one 1, each
    usable r_max times, then patterns with two 1s, and so on.
    """
    if t < l or l > k:
        raise PreconditionError(f"need L <= T and L <= K (got L={l}, K={k}, T={t})")
    r = max_block_repeats(k, l)
    if r is None:
        return SparsityBound(None, 1, m)
    covered, q = 0, 0
    while covered < m:
        q += 1
        if q > t:
            raise PreconditionError(f"no {m}-row combiner fits within T={t} columns")
        covered += r * math.comb(t, q)
    bound = sum(r * (j - q) * math.comb(t, j) for j in range(1, q)) + q * m
    return SparsityBound(r, q, bound)


# -- rank-profile condition -------------------------------------------------

PROFILE_BUDGET = 24


class BudgetError(RuntimeError):
    """Requested enumeration exceeds the allowed budget."""


@dataclass(frozen=True)
class RankProfileCap:
    B_S: int
    required_rank: int
    rank: int
    passed: bool
    profile: tuple[tuple[int, ...], ...] = ()


def max_profile_length(K: int, L: int, alloc, max_b: int) -> tuple[int, tuple]:
    """Largest B with an admissible 0/1 rank profile J (B x P).

    Blocks with a_p = 0 impose nothing and are dropped. For the rest,
    row b of J must keep the intersection of admissible subspaces at
    least b-dimensional, and column p may increase the rank of H_p N at
    most L - a_p times. Depth-first search over rows; each row tries all
    2^P patterns.
    """
    active = [a for a in alloc if a > 0]
    P = len(active)
    if P * max_b > PROFILE_BUDGET:
        raise BudgetError(f"P * max_b = {P * max_b} exceeds budget {PROFILE_BUDGET}")
    caps = [L - a for a in active]
    deficit = L * sum(1 for c in caps if c < L)
    patterns = list(itertools.product((0, 1), repeat=P))

    @functools.lru_cache(maxsize=None)
    def longest(b: int, used: tuple[int, ...]) -> tuple[int, tuple]:
        # rows 1..b-1 are placed; try to place row b
        if b > max_b:
            return 0, ()
        best = (0, ())
        for j in patterns:
            if any(used[p] + j[p] > caps[p] for p in range(P)):
                continue
            lhs = K - deficit + sum(used) + sum(j[p] * (L - used[p]) for p in range(P))
            if lhs >= b:
                n, rest = longest(b + 1, tuple(u + x for u, x in zip(used, j)))
                if n + 1 > best[0]:
                    best = (n + 1, (j,) + rest)
                    if b + n == max_b:
                        break
        return best

    return longest(1, (0,) * P)


def rank_profile_cap(a_sub, dims: Dims, row_allocation, max_b: int | None = None
                     ) -> RankProfileCap:
    """Rank requirement from admissible rank profiles for a row selection of A.

    ``row_allocation[p]`` rows of ``a_sub`` come from block p (in block
    order). The selection must have rank at least K - B_S.
    """
    a_sub = as_cmatrix(a_sub, "A_sub")
    alloc = [int(x) for x in row_allocation]
    if len(alloc) != dims.M // dims.L:
        raise DimensionError(f"row_allocation needs {dims.M // dims.L} entries")
    if any(x < 0 or x > dims.L for x in alloc):
        raise DimensionError("each a_p must lie in [0, L]")
    if sum(alloc) != a_sub.shape[0]:
        raise DimensionError("row_allocation does not sum to the selected row count")
    if max_b is None:
        max_b = dims.K
    b_s, prof = max_profile_length(dims.K, dims.L, alloc, min(max_b, dims.K))
    required = dims.K - b_s
    r = numeric_rank(a_sub) if a_sub.shape[0] else 0
    return RankProfileCap(b_s, required, r, r >= required, prof)

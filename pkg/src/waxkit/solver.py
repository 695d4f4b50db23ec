"""WAX decomposition H = W A X.

W is block diagonal (one block per panel), A is a fixed combiner and X is
the CPU-side matrix. The decomposition is found through the equivalent
homogeneous system ``A X - What H = 0`` with ``W = What^{-1}``: any
null-space vector whose What blocks are invertible gives a solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .model import (
    BlockDiag,
    DimensionError,
    Dims,
    PreconditionError,
    RngSpec,
    as_cmatrix,
    as_rng,
    matrix_from_obj,
    matrix_to_json,
    null_space,
    numeric_rank,
    panel_blocks,
)

SUCCESS_TOL = 1e-8
MAX_BLOCK_COND = 1e10


class WaxInfeasible(Exception):
    """No WAX decomposition was found; ``diagnostics`` says why."""

    def __init__(self, reason: str, diagnostics: dict):
        super().__init__(reason)
        self.reason = reason
        self.diagnostics = diagnostics


# -- dimension arithmetic ----------------------------------------------------

def t_opt(M: int, K: int, L: int) -> int:
    """Smallest T admitting a lossless decomposition for generic A, H."""
    return max(M * (K - L) // K + 1, K)


def lossless_feasible(dims: Dims) -> bool:
    """T > max(M (K-L) / K, K - 1), in exact integer arithmetic."""
    return dims.T * dims.K > dims.M * (dims.K - dims.L) and dims.T >= dims.K


@dataclass(frozen=True)
class DimensionPlan:
    t_opt: int | None = None
    l_opt: int | None = None
    m_max: float | int | None = None
    infeasible: tuple[str, ...] = ()


def plan_dimensions(m: int | None = None, k: int | None = None,
                    l: int | None = None, t: int | None = None) -> DimensionPlan:
    """Derive whichever of (T_opt, L_opt, M_max) the given values determine.

    ``m_max`` is ``math.inf`` when L >= K. A quantity that cannot be met
    (T < K for lossless planning, no divisor L of M that works) is left
    as ``None`` with an entry in ``infeasible``.
    """
    if k is None:
        raise ValueError("K is required")
    for name, v in (("M", m), ("K", k), ("L", l), ("T", t)):
        if v is not None and v < 1:
            raise ValueError(f"{name} must be positive, got {v}")
    out: dict = {}
    notes: list[str] = []
    if m is not None and l is not None:
        out["t_opt"] = t_opt(m, k, l)
    if m is not None and t is not None:
        if t < k:
            notes.append(f"l_opt: T={t} < K={k}, no lossless L exists")
        else:
            cands = [c for c in range(1, min(k, m) + 1)
                     if m % c == 0 and t * k > m * (k - c)]
            if cands:
                out["l_opt"] = cands[0]
            else:
                notes.append(f"l_opt: no divisor of M={m} satisfies the bound")
    if t is not None and l is not None:
        if t < k:
            notes.append(f"m_max: T={t} < K={k}, no lossless M exists")
        elif l >= k:
            out["m_max"] = math.inf
        else:
            out["m_max"] = (t * k - 1) // (k - l)
    return DimensionPlan(**out, infeasible=tuple(notes))


# -- panels with fewer antennas than outputs (N < L) -----------------------

def transform_matrix(dims: Dims) -> np.ndarray:
    """T_{L,N} = I_{M/L} kron (1_{L/N} kron I_L), shape (L P) x M."""
    M, L, N = dims.M, dims.L, dims.N
    if L < N or L % N or M % L:
        raise DimensionError(f"need L mod N = 0 and M mod L = 0 (M={M}, L={L}, N={N})")
    rep = np.kron(np.ones((L // N, 1)), np.eye(L))
    return np.kron(np.eye(M // L), rep)


def expand_combiner(a_tilde, dims: Dims) -> np.ndarray:
    """Map an M x T combiner for panels of L antennas to the (L P) x T
    combiner seen by panels of N antennas with L outputs each."""
    a_tilde = as_cmatrix(a_tilde, "A_tilde")
    if a_tilde.shape[0] != dims.M:
        raise DimensionError(f"A_tilde has {a_tilde.shape[0]} rows, expected M={dims.M}")
    M, L, N = dims.M, dims.L, dims.N
    if L < N or L % N or M % L:
        raise DimensionError(f"need L mod N = 0 and M mod L = 0 (M={M}, L={L}, N={N})")
    # each L-row group of A_tilde is repeated L/N times
    groups = panel_blocks(a_tilde, L)
    return np.vstack([g for g in groups for _ in range(L // N)])


def contract_combiner(a, dims: Dims) -> np.ndarray:
    """Inverse of :func:`expand_combiner`; rejects A without that structure."""
    a = as_cmatrix(a, "A")
    M, L, N = dims.M, dims.L, dims.N
    rep = L // N
    if a.shape[0] != L * dims.P:
        raise DimensionError(f"A has {a.shape[0]} rows, expected L*P={L * dims.P}")
    groups = panel_blocks(a, L)
    out = []
    for q in range(M // L):
        first = groups[q * rep]
        for g in groups[q * rep + 1:(q + 1) * rep]:
            if not np.array_equal(g, first):
                raise PreconditionError(
                    "A is not an expanded combiner; build it with expand_combiner"
                )
        out.append(first)
    return np.vstack(out)


def lift_panel_weights(w_tilde: BlockDiag, dims: Dims) -> BlockDiag:
    """Turn the square-layout L x L blocks into P = M/N blocks of N x L.

    Rows of the square solution are dealt out N at a time; the result W
    satisfies W T_{L,N} = W_tilde.
    """
    rows = np.vstack(w_tilde.blocks)  # M x L, row m holds row m's nonzeros
    return BlockDiag(tuple(panel_blocks(rows, dims.N)))


# -- vectorized system -------------------------------------------------------

def selection_matrix(M: int, L: int) -> sparse.csr_matrix:
    """0/1 map from the ML free entries [vec(W_1); ...; vec(W_P)] into vec
    of the dense M x M block-diagonal matrix (column-major vec)."""
    if M % L:
        raise DimensionError(f"M={M} is not a multiple of L={L}")
    P = M // L
    rows, cols = [], []
    for p in range(P):
        for j in range(L):
            for i in range(L):
                r, c = p * L + i, p * L + j
                rows.append(c * M + r)
                cols.append(p * L * L + j * L + i)
    data = np.ones(len(rows), dtype=np.int8)
    return sparse.csr_matrix((data, (rows, cols)), shape=(M * M, M * L))


@dataclass(frozen=True)
class SystemMatrix:
    """B = [I_K kron A, -(H^T kron I_M) P_sel]; B u = vec(A X - What H)."""

    B: np.ndarray
    P_sel: sparse.csr_matrix
    dims: Dims

    @property
    def B1(self) -> np.ndarray:
        return self.B[:, :self.dims.T * self.dims.K]

    @property
    def B2(self) -> np.ndarray:
        return self.B[:, self.dims.T * self.dims.K:]


def _check_shapes(h: np.ndarray, a: np.ndarray, dims: Dims):
    if h.shape != (dims.M, dims.K):
        raise DimensionError(f"H is {h.shape}, expected ({dims.M}, {dims.K})")
    if a.shape != (dims.M, dims.T):
        raise DimensionError(f"A is {a.shape}, expected ({dims.M}, {dims.T})")


def build_system(h, a, dims: Dims) -> SystemMatrix:
    dims.require_square()
    h, a = as_cmatrix(h, "H"), as_cmatrix(a, "A")
    _check_shapes(h, a, dims)
    M, K, L, T = dims.M, dims.K, dims.L, dims.T
    B = np.zeros((M * K, T * K + M * L), dtype=np.complex128)
    B[:, :T * K] = np.kron(np.eye(K), a)
    # vec(What H)[k*M + p*L + i] = sum_j What_p[i, j] H[p*L + j, k]
    for p in range(M // L):
        for j in range(L):
            for i in range(L):
                col = T * K + p * L * L + j * L + i
                B[np.arange(K) * M + p * L + i, col] = -h[p * L + j, :]
    return SystemMatrix(B=B, P_sel=selection_matrix(M, L), dims=dims)


def unpack_u(u: np.ndarray, dims: Dims) -> tuple[np.ndarray, BlockDiag]:
    """Split u = [vec(X); vec(What_1); ...] into X and the What blocks."""
    T, K, L = dims.T, dims.K, dims.L
    x = u[:T * K].reshape(K, T).T
    w = u[T * K:].reshape(dims.M // L, L, L).transpose(0, 2, 1)
    return x, BlockDiag(tuple(w))


def pack_u(x: np.ndarray, w_hat: BlockDiag) -> np.ndarray:
    parts = [x.T.ravel()] + [b.T.ravel() for b in w_hat.blocks]
    return np.concatenate(parts)


# -- decomposition -----------------------------------------------------------

@dataclass
class WaxFactors:
    W: BlockDiag
    X: np.ndarray
    residual: float
    nullspace_dim: int
    attempts: int
    diagnostics: dict = field(default_factory=dict)

    def product(self, a) -> np.ndarray:
        return self.W.dense() @ as_cmatrix(a) @ self.X

    def to_dict(self) -> dict:
        import json
        return {
            "W_blocks": [json.loads(matrix_to_json(b)) for b in self.W.blocks],
            "X": json.loads(matrix_to_json(self.X)),
            "residual": float(self.residual),
            "nullspace_dim": int(self.nullspace_dim),
            "attempts": int(self.attempts),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "WaxFactors":
        return cls(
            W=BlockDiag(tuple(matrix_from_obj(b) for b in obj["W_blocks"])),
            X=matrix_from_obj(obj["X"]),
            residual=float(obj["residual"]),
            nullspace_dim=int(obj["nullspace_dim"]),
            attempts=int(obj.get("attempts", 1)),
        )


def _reduced_nullspace(h_blocks, a_blocks, dims: Dims):
    """Null space of B parameterised by vec(X) alone.

    With every H_p of full row rank, What_p is pinned down by X as
    A_p X H_p^+, and A_p X must vanish on null(H_p). Stacking
    (N_p^T kron A_p) over panels gives an M(K-L) x TK system whose null
    space maps one-to-one onto null(B).
    """
    K, L = dims.K, dims.L
    rows = []
    for hp, ap in zip(h_blocks, a_blocks):
        if L == K:
            break
        _, _, vh = np.linalg.svd(hp, full_matrices=True)
        n_p = vh[L:].conj().T  # K x (K - L)
        rows.append(np.kron(n_p.T, ap))
    if not rows:
        return np.eye(dims.T * K, dtype=np.complex128)
    return null_space(np.vstack(rows))


def wax_decompose(h, a, dims: Dims, rng: RngSpec | int | None = None,
                  max_attempts: int = 10, method: str = "reduced") -> WaxFactors:
    """Compute H = W A X, or raise :class:`WaxInfeasible`.

    ``method="reduced"`` eliminates What through the panel-wise row-space
    condition (fast); ``method="svd"`` takes the null space of the full B
    from its SVD. Both draw random unit-norm combinations of the null
    basis and retry when a What block is singular.

    For N < L, ``a`` must be an expanded combiner (see
    :func:`expand_combiner`); the square problem is solved and the
    panel weights lifted back to N x L blocks.
    """
    h = as_cmatrix(h, "H")
    a = as_cmatrix(a, "A")
    if not dims.square:
        a_sq = contract_combiner(a, dims)
        sq = dims.with_(N=dims.L)
        f = wax_decompose(h, a_sq, sq, rng, max_attempts, method)
        w = lift_panel_weights(f.W, dims)
        resid = _residual(w, a, f.X, h)
        return WaxFactors(w, f.X, resid, f.nullspace_dim, f.attempts, f.diagnostics)

    dims.require_square()
    _check_shapes(h, a, dims)
    L = dims.L
    h_blocks = panel_blocks(h, L)
    a_blocks = panel_blocks(a, L)
    for p, hp in enumerate(h_blocks):
        if numeric_rank(hp) < L:
            raise PreconditionError(f"H block {p} has rank < L={L}")

    if method == "reduced":
        basis = _reduced_nullspace(h_blocks, a_blocks, dims)
        pinvs = [hp.conj().T @ np.linalg.inv(hp @ hp.conj().T) for hp in h_blocks]
    elif method == "svd":
        basis = null_space(build_system(h, a, dims).B)
    else:
        raise ValueError(f"unknown method {method!r}")

    dim = basis.shape[1]
    diag = {"nullspace_dim": dim, "method": method}
    if dim == 0:
        raise WaxInfeasible("empty null space", {**diag, "attempts": 0})

    g = as_rng(rng).generator()
    best = math.inf
    worst_cond = 0.0
    for attempt in range(1, max_attempts + 1):
        c = g.standard_normal(dim) + 1j * g.standard_normal(dim)
        v = basis @ (c / np.linalg.norm(c))
        if method == "reduced":
            x = v.reshape(dims.K, dims.T).T
            w_hat = BlockDiag(tuple(ap @ x @ pinv for ap, pinv in zip(a_blocks, pinvs)))
        else:
            x, w_hat = unpack_u(v, dims)
        cond = w_hat.max_cond()
        worst_cond = max(worst_cond, cond)
        if not np.isfinite(cond) or cond >= MAX_BLOCK_COND:
            continue
        w = w_hat.inverse()
        resid = _residual(w, a, x, h)
        best = min(best, resid)
        if resid <= SUCCESS_TOL:
            return WaxFactors(w, x, resid, dim, attempt, {**diag, "max_cond": cond})
    raise WaxInfeasible(
        "no null-space combination gave invertible, accurate W",
        {**diag, "attempts": max_attempts, "best_residual": best,
         "max_block_cond": worst_cond},
    )


def _residual(w: BlockDiag, a, x, h) -> float:
    return float(np.linalg.norm(w.dense() @ a @ x - h) / np.linalg.norm(h))


def try_decompose(h, a, dims: Dims, rng=None, **kw) -> WaxFactors | None:
    try:
        return wax_decompose(h, a, dims, rng, **kw)
    except WaxInfeasible:
        return None


def apply_processing(y, w: BlockDiag, a, x) -> np.ndarray:
    """z = X^H A^H W^H y, computed panel by panel first."""
    y = as_cmatrix(y, "y")
    a = as_cmatrix(a, "A")
    x = as_cmatrix(x, "X")
    n_rows = w.block_shape[0]
    if y.shape[0] != w.shape[0]:
        raise DimensionError(f"y has {y.shape[0]} rows, W expects {w.shape[0]}")
    if a.shape[0] != w.shape[1] or x.shape[0] != a.shape[1]:
        raise DimensionError("W, A, X shapes do not chain")
    local = [b.conj().T @ yp for b, yp in zip(w.blocks, panel_blocks(y, n_rows))]
    combined = a.conj().T @ np.vstack(local)
    return x.conj().T @ combined

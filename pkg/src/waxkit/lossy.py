"""Rates when no lossless decomposition exists.

All rates are in bits. The CPU matrix X is left out of every rate
evaluation: it acts after the combiner and cannot add information, so
the figure of merit is I(A^H W^H y; s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .model import (
    BlockDiag,
    DimensionError,
    Dims,
    InvalidInputError,
    PreconditionError,
    RngSpec,
    as_cmatrix,
    as_rng,
    default_rank_tol,
    numeric_rank,
    panel_blocks,
    sample_gaussian,
)
from .solver import MAX_BLOCK_COND, build_system, unpack_u, wax_decompose

LN2 = np.log(2.0)


class DegenerateInputError(RuntimeError):
    pass


@dataclass(frozen=True)
class RateReport:
    i_lossless: float
    i_achieved: float
    relative: float
    method: str
    snr: float

    @classmethod
    def build(cls, i_lossless: float, i_achieved: float, method: str, snr: float):
        # I(z; s) <= I(y; s) exactly; only round-off can exceed it
        if i_lossless < i_achieved <= i_lossless * (1 + 1e-9):
            i_achieved = i_lossless
        rel = 100.0 * i_achieved / i_lossless if i_lossless > 0 else 100.0
        return cls(float(i_lossless), float(i_achieved), float(rel), method, float(snr))


@dataclass
class LossyResult:
    w: BlockDiag
    report: RateReport
    x: np.ndarray | None = None
    eigenvalue: float | None = None
    panels: list[int] | None = None


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def _logdet_psd(m: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return float(val) / LN2


def mutual_info_y(h, snr: float) -> float:
    """log2 det(I_K + snr H^H H), equal to log2 det(I_M + snr H H^H)."""
    h = as_cmatrix(h, "H")
    if snr <= 0:
        raise ValueError("snr must be positive")
    k = h.shape[1]
    return max(_logdet_psd(np.eye(k) + snr * (h.conj().T @ h)), 0.0)


def _row_space(f: np.ndarray) -> np.ndarray:
    """Orthonormal basis (M x r) of the row space of f, rank-truncated."""
    _, s, vh = np.linalg.svd(f, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((f.shape[1], 0), dtype=np.complex128)
    r = int(np.sum(s > default_rank_tol(f.shape) * s[0]))
    return vh[:r].conj().T


def mutual_info_z(h, a, w: BlockDiag, snr: float) -> float:
    """I(F y; s) with F = A^H W^H and noise coloured by F F^H.

    Whitening on the row space of F reduces this to
    log2 det(I + snr H^H Pi H), Pi the projector onto that row space.
    """
    h = as_cmatrix(h, "H")
    a = as_cmatrix(a, "A")
    if snr <= 0:
        raise ValueError("snr must be positive")
    wd = w.dense()
    if wd.shape[0] != h.shape[0] or wd.shape[1] != a.shape[0]:
        raise DimensionError("H, W, A shapes do not chain")
    q = _row_space(a.conj().T @ wd.conj().T)
    if q.shape[1] == 0:
        return 0.0
    g = q.conj().T @ h
    return max(_logdet_psd(np.eye(q.shape[1]) + snr * (g @ g.conj().T)), 0.0)


def _check_panels(h: np.ndarray, dims: Dims):
    for p, hp in enumerate(panel_blocks(h, dims.L)):
        if numeric_rank(hp) < dims.L:
            raise PreconditionError(f"H block {p} has rank < L={dims.L}")


def approx_mf(h, a, dims: Dims, snr: float, candidates: int = 5) -> LossyResult:
    """Min-norm fit of A X ~ What H: the right singular vector of B with
    the smallest singular value (the lowest eigenvector of B^H B).

    If a What block of the best vector is singular, the next ones are
    tried, up to ``candidates``. With T < L every block of the minimiser
    has rank T, and W takes the block pseudo-inverses instead.
    """
    h, a = as_cmatrix(h, "H"), as_cmatrix(a, "A")
    dims.require_square()
    if dims.L > dims.K:
        raise PreconditionError(f"L={dims.L} > K={dims.K}")
    _check_panels(h, dims)
    B = build_system(h, a, dims).B
    _, s, vh = np.linalg.svd(B, full_matrices=True)
    n = B.shape[1]
    eig = np.zeros(n)
    eig[:s.size] = s ** 2
    order = np.argsort(eig, kind="stable")
    i_y = mutual_info_y(h, snr)
    if dims.T < dims.L:
        # blocks of the minimiser have rank T < L; use their pseudo-inverses
        idx = order[0]
        x, w_hat = unpack_u(vh[idx].conj(), dims)
        w = BlockDiag(tuple(np.linalg.pinv(b, rcond=default_rank_tol(b.shape))
                            for b in w_hat.blocks))
        i_z = mutual_info_z(h, a, w, snr)
        return LossyResult(w, RateReport.build(i_y, i_z, "min-norm", snr), x, float(eig[idx]))
    for idx in order[:candidates]:
        x, w_hat = unpack_u(vh[idx].conj(), dims)
        if w_hat.max_cond() >= MAX_BLOCK_COND:
            continue
        w = w_hat.inverse()
        i_z = mutual_info_z(h, a, w, snr)
        return LossyResult(w, RateReport.build(i_y, i_z, "min-norm", snr), x, float(eig[idx]))
    raise DegenerateInputError(f"all {candidates} candidate vectors have singular blocks")


def select_panels(h, dims: Dims, t: int | None = None) -> tuple[list[int], Dims]:
    """Keep the largest number of strongest panels that make T lossless."""
    h = as_cmatrix(h, "H")
    dims.require_square()
    t = dims.T if t is None else t
    K, L, P = dims.K, dims.L, dims.M // dims.L
    if t < K:
        raise PreconditionError(f"panel selection needs T >= K (T={t}, K={K})")
    if L >= K:
        keep = P
    else:
        # largest P' with T K > P' L (K - L)
        keep = min(P, (t * K - 1) // (L * (K - L)))
    norms = [np.linalg.norm(hp) for hp in panel_blocks(h, L)]
    order = sorted(range(P), key=lambda p: (-norms[p], p))
    chosen = sorted(order[:keep])
    return chosen, Dims(keep * L, K, L, t)


def panel_select_rate(h, a, dims: Dims, snr: float,
                      rng: RngSpec | int | None = None) -> LossyResult:
    h, a = as_cmatrix(h, "H"), as_cmatrix(a, "A")
    chosen, sub = select_panels(h, dims)
    rows = np.concatenate([np.arange(p * dims.L, (p + 1) * dims.L) for p in chosen])
    f = wax_decompose(h[rows], a[rows], sub, rng)
    i_z = mutual_info_z(h[rows], a[rows], f.W, snr)
    report = RateReport.build(mutual_info_y(h, snr), i_z, "panel-select", snr)
    return LossyResult(f.W, report, f.X, panels=chosen)


# -- refinement -------------------------------------------------------------

def _objective(h: np.ndarray, a: np.ndarray, snr: float, L: int, P: int):
    """Negative rate (bits) of W = diag(blocks) and its real gradient.

    Uses I = log det(G^H C G) - log det(G^H G) with G = W A and
    C = I + snr H H^H, valid while G has full column rank.
    """
    T = a.shape[1]
    a_blocks = a.reshape(P, L, T)
    a_blocks_h = a_blocks.conj().transpose(0, 2, 1)
    hh = h.conj().T
    n = P * L * L

    def f(theta):
        blocks = (theta[:n] + 1j * theta[n:]).reshape(P, L, L)
        g = np.einsum("pij,pjt->pit", blocks, a_blocks).reshape(P * L, T)
        hg = hh @ g
        s2 = g.conj().T @ g
        s1 = s2 + snr * (hg.conj().T @ hg)
        try:
            c1 = linalg.cho_factor(s1, lower=True)
            c2 = linalg.cho_factor(s2, lower=True)
        except linalg.LinAlgError:
            return np.inf, np.zeros_like(theta)
        val = 2 * (np.sum(np.log(np.abs(np.diag(c1[0])))) - np.sum(np.log(np.abs(np.diag(c2[0])))))
        cg = g + snr * (h @ hg)
        # C G S1^{-1} - G S2^{-1}, via solves on the Hermitian factors
        grad_g = linalg.cho_solve(c1, cg.conj().T).conj().T - linalg.cho_solve(c2, g.conj().T).conj().T
        gw = np.einsum("pit,ptj->pij", grad_g.reshape(P, L, T), a_blocks_h)
        grad = 2 * np.concatenate([gw.real.ravel(), gw.imag.ravel()])
        return -val / LN2, -grad / LN2

    return f


def refine_rate(h, a, dims: Dims, snr: float, w0: BlockDiag, eval_budget: int = 2000,
                rng: RngSpec | int | None = None, restarts: int = 0) -> LossyResult:
    """Local ascent of the combiner-output rate over the W blocks.

    L-BFGS on the real and imaginary block entries with an analytic
    gradient; one objective+gradient evaluation counts against
    ``eval_budget``. ``restarts`` perturbed restarts (seeded by ``rng``)
    spend what is left of the budget. Never returns a worse W than w0.
    """
    h, a = as_cmatrix(h, "H"), as_cmatrix(a, "A")
    dims.require_square()
    L, P = dims.L, dims.M // dims.L
    i_y = mutual_info_y(h, snr)
    start = mutual_info_z(h, a, w0, snr)
    best_w, best_rate = w0, start
    if dims.T > dims.M or start >= i_y * (1 - 1e-12):
        return LossyResult(w0, RateReport.build(i_y, start, "refined", snr))

    f = _objective(h, a, snr, L, P)
    g = as_rng(rng).generator()
    used = 0
    theta0 = np.concatenate([np.stack(w0.blocks).real.ravel(), np.stack(w0.blocks).imag.ravel()])
    for attempt in range(restarts + 1):
        if used >= eval_budget:
            break
        x0 = theta0 if attempt == 0 else _perturb(theta_best, g)
        res = optimize.minimize(f, x0, jac=True, method="L-BFGS-B",
                                options={"maxfun": eval_budget - used, "maxiter": eval_budget,
                                         "ftol": 1e-9, "gtol": 1e-9})
        used += res.nfev
        n = P * L * L
        blocks = (res.x[:n] + 1j * res.x[n:]).reshape(P, L, L)
        w = BlockDiag(tuple(blocks))
        rate = mutual_info_z(h, a, w, snr)
        if rate > best_rate:
            best_w, best_rate = w, rate
        theta_best = np.concatenate([np.stack(best_w.blocks).real.ravel(),
                                     np.stack(best_w.blocks).imag.ravel()])
    return LossyResult(best_w, RateReport.build(i_y, best_rate, "refined", snr))


def _perturb(theta: np.ndarray, g: np.random.Generator, scale: float = 0.05) -> np.ndarray:
    return theta + scale * np.linalg.norm(theta) / np.sqrt(theta.size) * g.standard_normal(theta.size)


# -- Monte Carlo trial -------------------------------------------------------

def rate_trial(dims: Dims, snr: float, rng: RngSpec | int, eval_budget: int = 2000
               ) -> list[RateReport]:
    """One (A, H) draw: min-norm, refined and (if T >= K) panel selection."""
    rng = as_rng(rng)
    a = sample_gaussian(rng.child(0), dims.M, dims.T)
    h = sample_gaussian(rng.child(1), dims.M, dims.K)
    mn = approx_mf(h, a, dims, snr)
    ref = refine_rate(h, a, dims, snr, mn.w, eval_budget, rng.child(2))
    out = [mn.report, ref.report]
    if dims.T >= dims.K:
        out.append(panel_select_rate(h, a, dims, snr, rng.child(3)).report)
    return out


def check_finite(*arrays):
    for x in arrays:
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("non-finite input")

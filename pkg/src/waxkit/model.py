"""Core types shared across waxkit: system dimensions, block-diagonal
panel weights, seeded random streams, and the matrix JSON format.

Matrices are plain ``numpy`` complex128 arrays throughout; ``as_cmatrix``
is the single entry point that validates shape and finiteness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EPS = np.finfo(float).eps


class DimensionError(ValueError):
    """Inconsistent or unsupported matrix / system dimensions."""


class InvalidInputError(ValueError):
    """Non-finite or otherwise malformed numerical input."""


class PreconditionError(ValueError):
    """An operation was called outside the regime where it is defined."""


@dataclass(frozen=True)
class Dims:
    """System dimensions.

    M antennas, K users, L outputs per panel, N antennas per panel and T
    CPU inputs. ``N`` defaults to ``L`` (the square layout used by the
    solver). Divisibility is checked here; the ``L <= K`` style
    restrictions belong to the individual operations.
    """

    M: int
    K: int
    L: int
    T: int
    N: int | None = None

    def __post_init__(self):
        if self.N is None:
            object.__setattr__(self, "N", self.L)
        for name in ("M", "K", "L", "T", "N"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")
        if self.M % self.N:
            raise DimensionError(f"M={self.M} is not a multiple of N={self.N}")

    @property
    def P(self) -> int:
        """Number of panels, M / N."""
        return self.M // self.N

    @property
    def square(self) -> bool:
        return self.N == self.L

    def require_square(self):
        if not self.square:
            raise DimensionError(
                f"operation needs the N = L layout, got N={self.N}, L={self.L}"
            )
        if self.M % self.L:
            raise DimensionError(f"M={self.M} is not a multiple of L={self.L}")

    def with_(self, **changes) -> "Dims":
        d = dict(M=self.M, K=self.K, L=self.L, T=self.T, N=self.N)
        if "L" in changes and "N" not in changes and self.square:
            changes["N"] = changes["L"]
        d.update(changes)
        return Dims(**d)

    def to_dict(self) -> dict:
        return dict(M=self.M, K=self.K, L=self.L, N=self.N, T=self.T)


@dataclass(frozen=True)
class RngSpec:
    """Deterministic random stream.

    Streams are Philox generators keyed by ``SeedSequence(seed,
    spawn_key=(stream, *path))``, so ``(seed, stream)`` pairs give
    independent, platform-stable sequences. ``path`` holds sub-stream
    indices created with :meth:`child`.
    """

    seed: int
    stream: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream < 0:
            raise ValueError("stream must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *index: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream, self.path + tuple(int(i) for i in index))


def as_rng(rng: RngSpec | int | None) -> RngSpec:
    if rng is None:
        return RngSpec(0)
    if isinstance(rng, RngSpec):
        return rng
    return RngSpec(int(rng))


def as_cmatrix(m, name: str = "matrix", ndim: int = 2) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim == 1 and ndim == 2:
        a = a.reshape(-1, 1)
    if a.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has NaN or Inf entries")
    return a


def sample_gaussian(rng: RngSpec | int, rows: int, cols: int) -> np.ndarray:
    """IID CN(0, 1) matrix: real and imaginary parts N(0, 1/2)."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"cannot sample a {rows}x{cols} matrix")
    g = as_rng(rng).generator()
    re = g.standard_normal((rows, cols))
    im = g.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def default_rank_tol(shape: Sequence[int]) -> float:
    return max(shape) * EPS


def numeric_rank(m, rel_tol: float | None = None) -> int:
    """Number of singular values above ``rel_tol * sigma_max``."""
    a = as_cmatrix(m)
    if a.size == 0:
        raise DimensionError("numeric_rank of an empty matrix")
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    tol = default_rank_tol(a.shape) if rel_tol is None else rel_tol
    return int(np.sum(s > tol * s[0]))


def null_space(m, rel_tol: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical right null space."""
    a = np.asarray(m)
    rows, cols = a.shape
    if rows == 0:
        return np.eye(cols, dtype=np.complex128)
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    tol = default_rank_tol(a.shape) if rel_tol is None else rel_tol
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    return vh[rank:].conj().T


@dataclass(frozen=True)
class BlockDiag:
    """Block-diagonal matrix stored as its P diagonal blocks.

    Blocks are L x L in the square layout, N x L otherwise; block p
    occupies rows ``[p*rows, (p+1)*rows)`` and columns ``[p*L, (p+1)*L)``
    of the dense expansion.
    """

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(as_cmatrix(b, "block") for b in self.blocks)
        if not blocks:
            raise DimensionError("BlockDiag needs at least one block")
        shape = blocks[0].shape
        if any(b.shape != shape for b in blocks):
            raise DimensionError("all blocks must share one shape")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def identity(cls, p: int, l: int) -> "BlockDiag":
        return cls(tuple(np.eye(l, dtype=np.complex128) for _ in range(p)))

    @property
    def P(self) -> int:
        return len(self.blocks)

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.blocks[0].shape

    @property
    def shape(self) -> tuple[int, int]:
        r, c = self.block_shape
        return (r * self.P, c * self.P)

    def dense(self) -> np.ndarray:
        r, c = self.block_shape
        out = np.zeros(self.shape, dtype=np.complex128)
        for p, b in enumerate(self.blocks):
            out[p * r:(p + 1) * r, p * c:(p + 1) * c] = b
        return out

    def scaled(self, c: complex) -> "BlockDiag":
        return BlockDiag(tuple(c * b for b in self.blocks))

    def inverse(self) -> "BlockDiag":
        return BlockDiag(tuple(np.linalg.inv(b) for b in self.blocks))

    def max_cond(self) -> float:
        return max(float(np.linalg.cond(b)) for b in self.blocks)


def panel_blocks(m: np.ndarray, rows: int) -> list[np.ndarray]:
    """Split ``m`` into consecutive row blocks of height ``rows``."""
    if m.shape[0] % rows:
        raise DimensionError(f"{m.shape[0]} rows do not split into blocks of {rows}")
    return [m[i:i + rows] for i in range(0, m.shape[0], rows)]


# -- matrix JSON -------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def matrix_to_json(m) -> str:
    a = as_cmatrix(m)
    data = ", ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in a.ravel(order="C"))
    return f'{{"rows": {a.shape[0]}, "cols": {a.shape[1]}, "data": [{data}]}}'


def matrix_from_obj(obj: dict) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"not a matrix object: {exc}") from exc
    if len(data) != rows * cols:
        raise InvalidInputError(
            f"matrix declares {rows}x{cols} but carries {len(data)} entries"
        )
    flat = np.empty(rows * cols, dtype=np.complex128)
    for i, entry in enumerate(data):
        if isinstance(entry, (int, float)):
            flat[i] = entry
        elif len(entry) == 2:
            flat[i] = complex(float(entry[0]), float(entry[1]))
        else:
            raise InvalidInputError(f"bad entry at {i}: {entry!r}")
    return as_cmatrix(flat.reshape(rows, cols))


def matrix_from_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"invalid JSON: {exc}") from exc
    return matrix_from_obj(obj)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(fh.read())


def save_matrix(path, m) -> None:
    with open(path, "w") as fh:
        fh.write(matrix_to_json(m) + "\n")

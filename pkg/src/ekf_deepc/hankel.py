"""Block-Hankel data matrices, excitation checks and offline averaging."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class BlockHankel:
    """Block-Hankel matrix of a q-dimensional sequence with M block rows."""

    data: np.ndarray
    q: int
    M: int

    @property
    def columns(self) -> int:
        return self.data.shape[1]


def _as_sequence(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if w.ndim != 2:
        raise ValueError(f"expected a (length, q) sequence, got shape {w.shape}")
    return w


def build_block_hankel(w, M: int) -> BlockHankel:
    """Hankel matrix with ``M`` block rows and the maximal ``len(w) - M + 1`` columns.

    ``w`` has shape (N,) or (N, q); block (i, j) of the result is ``w[i + j]``.
    """
    w = _as_sequence(w)
    N, q = w.shape
    if M < 1 or M > N:
        raise ValueError(f"need 1 <= M <= len(w), got M={M}, len(w)={N}")
    # windows[j] has shape (q, M); reorder to (M, q) and flatten into column j
    windows = sliding_window_view(w, M, axis=0)
    data = windows.transpose(0, 2, 1).reshape(N - M + 1, M * q).T.copy()
    return BlockHankel(data=data, q=q, M=M)


def numerical_rank(a: np.ndarray, rank_tol: float = 1e-9) -> int:
    """Number of singular values above ``rank_tol`` times the largest one."""
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def is_persistently_exciting(h: BlockHankel, rank_tol: float = 1e-9) -> bool:
    """True when the Hankel matrix has full row rank q*M."""
    return numerical_rank(h.data, rank_tol) == h.q * h.M


def excitation_order(w, rank_tol: float = 1e-9) -> int:
    """Largest M for which ``w`` is persistently exciting (0 if none)."""
    w = _as_sequence(w)
    order = 0
    for M in range(1, len(w) + 1):
        if not is_persistently_exciting(build_block_hankel(w, M), rank_tol):
            break
        order = M
    return order


@dataclass(frozen=True)
class DataBlocks:
    """Past/future input and output Hankel blocks sharing L columns."""

    Up: np.ndarray
    Uf: np.ndarray
    Yp: np.ndarray
    Yf: np.ndarray
    Np: int
    Nf: int

    def __post_init__(self):
        L = self.Up.shape[1]
        if L < 1 or any(b.shape[1] != L for b in (self.Uf, self.Yp, self.Yf)):
            raise ValueError("all data blocks must share a positive column count")
        if self.Up.shape[0] % self.Np or self.Yp.shape[0] % self.Np:
            raise ValueError("past block heights must be multiples of Np")
        if self.Uf.shape[0] != self.m * self.Nf or self.Yf.shape[0] != self.p * self.Nf:
            raise ValueError("future block heights inconsistent with Nf")

    @property
    def m(self) -> int:
        return self.Up.shape[0] // self.Np

    @property
    def p(self) -> int:
        return self.Yp.shape[0] // self.Np

    @property
    def L(self) -> int:
        return self.Up.shape[1]

    def stacked(self) -> np.ndarray:
        """col(Up, Uf, Yp, Yf)."""
        return np.vstack([self.Up, self.Uf, self.Yp, self.Yf])

    def to_csv(self, path) -> None:
        header = f"m={self.m},p={self.p},Np={self.Np},Nf={self.Nf},L={self.L}"
        np.savetxt(path, self.stacked(), delimiter=",", header=header, fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "DataBlocks":
        with open(path) as fh:
            first = fh.readline().lstrip("#").strip()
        meta = dict(item.split("=") for item in first.split(","))
        m, p, Np, Nf, L = (int(meta[k]) for k in ("m", "p", "Np", "Nf", "L"))
        H = np.loadtxt(path, delimiter=",", ndmin=2)
        if H.shape != ((m + p) * (Np + Nf), L):
            raise ValueError(f"{path}: matrix shape {H.shape} disagrees with header {first!r}")
        a, b, c = m * Np, m * (Np + Nf), m * (Np + Nf) + p * Np
        return cls(Up=H[:a], Uf=H[a:b], Yp=H[b:c], Yf=H[c:], Np=Np, Nf=Nf)


def split_past_future(u, y, Np: int, Nf: int) -> DataBlocks:
    """Hankel matrices of depth Np + Nf for u and y, split into past and future rows."""
    u, y = _as_sequence(u), _as_sequence(y)
    if len(u) != len(y):
        raise ValueError("u and y must have the same length")
    if Np < 1 or Nf < 1:
        raise ValueError("horizons must be at least 1")
    if len(u) < Np + Nf:
        raise ValueError(f"trajectory of length {len(u)} is shorter than Np + Nf = {Np + Nf}")
    m, p = u.shape[1], y.shape[1]
    Hu = build_block_hankel(u, Np + Nf).data
    Hy = build_block_hankel(y, Np + Nf).data
    return DataBlocks(Up=Hu[:m * Np], Uf=Hu[m * Np:], Yp=Hy[:p * Np], Yf=Hy[p * Np:], Np=Np, Nf=Nf)


def average_data_blocks(blocks: Sequence[DataBlocks]) -> DataBlocks:
    """Elementwise mean of data blocks built from one shared input sequence.

    The input blocks of every member must be identical; anything else is
    rejected because the mean input would no longer be the one that was
    checked for excitation.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("need at least one DataBlocks to average")
    first = blocks[0]
    for b in blocks[1:]:
        if (b.Np, b.Nf) != (first.Np, first.Nf) or b.stacked().shape != first.stacked().shape:
            raise ValueError("data blocks differ in shape or horizons")
        if not (np.array_equal(b.Up, first.Up) and np.array_equal(b.Uf, first.Uf)):
            raise ValueError("data blocks were not generated by the same input sequence")
    if len(blocks) == 1:
        return first
    Yp = np.mean([b.Yp for b in blocks], axis=0)
    Yf = np.mean([b.Yf for b in blocks], axis=0)
    return DataBlocks(Up=first.Up.copy(), Uf=first.Uf.copy(), Yp=Yp, Yf=Yf, Np=first.Np, Nf=first.Nf)

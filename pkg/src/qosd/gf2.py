"""Bit-packed GF(2) linear algebra with replayable row-operation logs.

Rows are stored as arrays of little-endian uint64 words so that row
XORs, rank computations and syndrome transforms run word-parallel.
Two elimination routines are provided:

* :func:`gauss_eliminate` — the reference Gauss-Jordan.  It records
  every row swap and batched pivot XOR, so the reduction can be
  replayed on the original matrix (or applied to a syndrome) and the
  column permutation that repairs pivot deficiencies is returned
  explicitly.
* :func:`systematic_form` — the hot-path kernel used inside the
  decoders.  Same pivot rule, no log; the syndrome rides along as an
  augmented bit column.  Compiled with numba when available.

Both produce ``[I_r | A; 0 | 0]`` with identical pivot choices: the
first column (scanning left to right in the given order) with a 1 at or
below the current row, deficient positions repaired by swapping in the
nearest linearly independent column to the right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


def pack_rows(dense: np.ndarray, nwords: int | None = None) -> np.ndarray:
    """Pack a 0/1 matrix into (m, W) little-endian uint64 words."""
    dense = np.ascontiguousarray(dense, dtype=np.uint8)
    if dense.ndim == 1:
        dense = dense[None, :]
    m, c = dense.shape
    if nwords is None:
        nwords = max(1, (c + 63) // 64)
    packed = np.packbits(dense, axis=1, bitorder="little")
    padded = np.zeros((m, nwords * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8")


def unpack_rows(words: np.ndarray, ncols: int) -> np.ndarray:
    """Inverse of :func:`pack_rows` (uint8 0/1 matrix of width ncols)."""
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little", count=ncols)


class GF2Matrix:
    """A GF(2) matrix with word-packed rows."""

    __slots__ = ("words", "rows", "cols")

    def __init__(self, words: np.ndarray, rows: int, cols: int):
        self.words = words
        self.rows = rows
        self.cols = cols

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "GF2Matrix":
        dense = np.asarray(dense, dtype=np.uint8)
        m, c = dense.shape
        return cls(pack_rows(dense), m, c)

    def to_dense(self) -> np.ndarray:
        return unpack_rows(self.words, self.cols)

    def copy(self) -> "GF2Matrix":
        return GF2Matrix(self.words.copy(), self.rows, self.cols)

    def column(self, j: int) -> np.ndarray:
        """The j-th column as a uint8 vector."""
        w, b = divmod(j, 64)
        return ((self.words[:, w] >> np.uint64(b)) & np.uint64(1)).astype(np.uint8)

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def rank(self) -> int:
        return systematic_form(self.to_dense())[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GF2Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.words, other.words)
        )


# Row operations recorded by gauss_eliminate.  A 'xor' op carries the
# full batch of target rows cleared by one pivot.
RowOp = tuple


@dataclass
class Elimination:
    """Result of :func:`gauss_eliminate`.

    ``matrix`` has columns reordered by ``col_perm`` (position t holds
    input column ``col_perm[t]``) and equals ``[I_rank | A; 0 | 0]``.
    Replaying ``row_ops`` on the input and then gathering columns by
    ``col_perm`` reproduces ``matrix`` bit for bit.
    """

    matrix: GF2Matrix
    row_ops: list[RowOp]
    col_perm: np.ndarray
    rank: int


def apply_row_ops(row_ops: list[RowOp], vec: np.ndarray) -> np.ndarray:
    """Apply a recorded operation log to a syndrome (or any row stack)."""
    out = np.array(vec, copy=True)
    for op in row_ops:
        if op[0] == "swap":
            _, i, j = op
            out[[i, j]] = out[[j, i]]
        else:
            _, src, targets = op
            out[targets] ^= out[src]
    return out


def gauss_eliminate(mat: GF2Matrix) -> Elimination:
    """Reference Gauss-Jordan with an explicit operation log."""
    work = mat.copy()
    m, c = work.rows, work.cols
    order = np.arange(c)
    ops: list[RowOp] = []
    r = 0
    t = 0
    while r < m and t < c:
        # Nearest column at or right of t with a 1 at or below row r.
        chosen = -1
        for cc in range(t, c):
            col = work.column(order[cc])
            nz = np.nonzero(col[r:])[0]
            if nz.size:
                chosen = cc
                pivot_row = r + int(nz[0])
                break
        if chosen < 0:
            break
        if chosen != t:
            order[[t, chosen]] = order[[chosen, t]]
        if pivot_row != r:
            work.words[[r, pivot_row]] = work.words[[pivot_row, r]]
            ops.append(("swap", r, pivot_row))
        col = work.column(order[t])
        targets = np.nonzero(col)[0]
        targets = targets[targets != r]
        if targets.size:
            work.words[targets] ^= work.words[r]
            ops.append(("xor", r, targets))
        r += 1
        t += 1
    reduced = GF2Matrix.from_dense(work.to_dense()[:, order])
    return Elimination(matrix=reduced, row_ops=ops, col_perm=order, rank=r)


@njit(cache=True)
def _systematic_kernel(words, m, ncols, colmap):  # pragma: no cover - compiled
    one = np.uint64(1)
    nwords = words.shape[1]
    r = 0
    t = 0
    while r < m and t < ncols:
        # Find pivot: first column >= t with a 1 at or below row r.
        chosen = -1
        prow = -1
        c = t
        while c < ncols:
            w = c >> 6
            b = np.uint64(c & 63)
            for i in range(r, m):
                if (words[i, w] >> b) & one:
                    chosen = c
                    prow = i
                    break
            if chosen >= 0:
                break
            c += 1
        if chosen < 0:
            break
        if chosen != t:
            # Swap bit columns t and chosen across all rows.
            w1 = t >> 6
            m1 = one << np.uint64(t & 63)
            w2 = chosen >> 6
            m2 = one << np.uint64(chosen & 63)
            for i in range(m):
                v1 = words[i, w1] & m1
                v2 = words[i, w2] & m2
                if (v1 != 0) != (v2 != 0):
                    words[i, w1] ^= m1
                    words[i, w2] ^= m2
            tmp = colmap[t]
            colmap[t] = colmap[chosen]
            colmap[chosen] = tmp
        if prow != r:
            for w in range(nwords):
                tmp64 = words[r, w]
                words[r, w] = words[prow, w]
                words[prow, w] = tmp64
        w = t >> 6
        b = np.uint64(t & 63)
        for i in range(m):
            if i != r and ((words[i, w] >> b) & one):
                for ww in range(nwords):
                    words[i, ww] ^= words[r, ww]
        r += 1
        t += 1
    return r


def _systematic_python(words, m, ncols, colmap):
    """Fallback for the kernel when numba is unavailable."""
    one = np.uint64(1)
    r = 0
    t = 0
    while r < m and t < ncols:
        chosen = -1
        prow = -1
        for c in range(t, ncols):
            w, b = divmod(c, 64)
            col = (words[r:, w] >> np.uint64(b)) & one
            nz = np.nonzero(col)[0]
            if nz.size:
                chosen = c
                prow = r + int(nz[0])
                break
        if chosen < 0:
            break
        if chosen != t:
            w1, b1 = divmod(t, 64)
            w2, b2 = divmod(chosen, 64)
            v1 = (words[:, w1] >> np.uint64(b1)) & one
            v2 = (words[:, w2] >> np.uint64(b2)) & one
            diff = np.nonzero(v1 != v2)[0]
            words[diff, w1] ^= one << np.uint64(b1)
            words[diff, w2] ^= one << np.uint64(b2)
            colmap[[t, chosen]] = colmap[[chosen, t]]
        if prow != r:
            words[[r, prow]] = words[[prow, r]]
        w, b = divmod(t, 64)
        col = (words[:, w] >> np.uint64(b)) & one
        targets = np.nonzero(col)[0]
        targets = targets[targets != r]
        if targets.size:
            words[targets] ^= words[r]
        r += 1
        t += 1
    return r


def systematic_form(
    dense: np.ndarray, aug: np.ndarray | None = None
) -> tuple[np.ndarray, int, np.ndarray, np.ndarray | None]:
    """Reduce to ``[I_r | A; 0 | 0]`` with nearest-right column repair.

    Args:
        dense: (m, c) 0/1 matrix, columns already in the desired
            (e.g. reliability) order.
        aug: optional length-m syndrome carried through the row ops.

    Returns:
        (words, rank, col_order, aug_out) — ``words`` is the packed
        reduced matrix over the first c bit columns, ``col_order[t]``
        gives the input column now at position t, and ``aug_out`` is the
        transformed syndrome (None when ``aug`` is None).
    """
    dense = np.asarray(dense, dtype=np.uint8)
    m, c = dense.shape
    if aug is not None:
        stacked = np.concatenate([dense, np.asarray(aug, dtype=np.uint8)[:, None]], axis=1)
    else:
        stacked = dense
    words = pack_rows(stacked)
    colmap = np.arange(c, dtype=np.int64)
    if _HAVE_NUMBA:
        rank = int(_systematic_kernel(words, m, c, colmap))
    else:
        rank = int(_systematic_python(words, m, c, colmap))
    aug_out = None
    if aug is not None:
        w, b = divmod(c, 64)
        aug_out = ((words[:, w] >> np.uint64(b)) & np.uint64(1)).astype(np.uint8)
    return words, rank, colmap, aug_out


def gf2_rank(dense: np.ndarray) -> int:
    """Rank of a 0/1 matrix over GF(2)."""
    dense = np.asarray(dense, dtype=np.uint8)
    if dense.size == 0:
        return 0
    return systematic_form(dense)[1]


def parity_dot(words: np.ndarray, vec_words: np.ndarray) -> np.ndarray:
    """Per-row parity of ``row & vec`` for packed rows (GF(2) row.vec)."""
    return (np.bitwise_count(words & vec_words).sum(axis=1) & 1).astype(np.uint8)

"""Reliability ordering and ordered-statistics post-processing.

When belief propagation fails, the 2n error bits are sorted by
reliability and the check system is put in systematic form with the
least reliable bits as pivots.  Fixing the reliable bits from the BP
hard decision and solving for the pivots yields the order-0 estimate;
order-w additionally explores all flips of up to w reliable bits via a
depth-first walk where each child flips one zero bit after the last
flipped position.  Each candidate is produced incrementally from its
parent in O(n) by XORing a precomputed column vector, and the
minimum-Pauli-weight valid candidate wins (first found on ties).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .bp4 import BeliefState, soft_reliability_arrays
from .gf2 import pack_rows, parity_dot, systematic_form, unpack_rows

_METRICS = ("hard_then_soft", "marginal", "entropy", "max")


class OsdRankError(RuntimeError):
    """The check system has lower rank than the code guarantees."""


@dataclass(frozen=True)
class ReliabilityOrder:
    """Permutation of the 2n bit indices, least reliable first.

    Bit t < n is qubit t's X component; bit n + t is qubit t's Z
    component.
    """

    metric: str
    order: np.ndarray


def build_order(belief: BeliefState, metric: str = "hard_then_soft") -> ReliabilityOrder:
    """Rank the 2n error bits in ascending reliability.

    hard_then_soft sorts by the hard-decision run length with the soft
    reliability as tie-break; marginal uses the soft reliability alone.
    entropy and max rank whole qubits (most entropy, respectively
    smallest peak probability, first) and then expand each qubit to its
    X bit followed by its Z bit.
    """
    if metric not in _METRICS:
        raise ValueError(f"metric must be one of {_METRICS}, got {metric!r}")
    n = belief.probs.shape[0]
    if metric in ("hard_then_soft", "marginal"):
        phi_x, phi_z = soft_reliability_arrays(belief)
        phi_bits = np.concatenate([phi_x, phi_z])
        if metric == "hard_then_soft":
            eta_bits = np.concatenate([belief.run_length, belief.run_length])
            order = np.lexsort((np.arange(2 * n), phi_bits, eta_bits))
        else:
            order = np.lexsort((np.arange(2 * n), phi_bits))
    else:
        q = belief.probs
        if metric == "entropy":
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(q > 0, q * np.log(q), 0.0)
            key = terms.sum(axis=1)  # -H4, ascending = most entropy first
        else:
            key = q.max(axis=1)
        qubit_order = np.lexsort((np.arange(n), key))
        order = np.empty(2 * n, dtype=np.int64)
        order[0::2] = qubit_order
        order[1::2] = qubit_order + n
    return ReliabilityOrder(metric, order.astype(np.int64))


def osd2_budget(reliable_len: int) -> int:
    """Candidate count of a full order-2 enumeration."""
    return comb(reliable_len, 0) + comb(reliable_len, 1) + comb(reliable_len, 2)


def order_from_budget(reliable_len: int, budget: int) -> int:
    """Largest w whose full enumeration fits in ``budget`` candidates."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    total = 1
    w = 0
    while w < reliable_len:
        total += comb(reliable_len, w + 1)
        if total > budget:
            break
        w += 1
    return w


@dataclass
class OsdSystem:
    """Systematic form of one decoding instance.

    The input matrix's columns were permuted into ascending-reliability
    order and reduced to ``[I_rank | A; 0 | 0]``; ``col_order[t]`` maps
    a permuted position back to the system column it came from, and
    ``col_to_ambient`` maps system columns to bit indices of the full
    2n-bit error (these coincide for an unreduced system).  Bits of the
    ambient error outside the system are preset in ``fixed_ambient``.
    """

    n: int
    width: int
    m: int
    rank: int
    words: np.ndarray
    s_prime: np.ndarray
    col_order: np.ndarray
    hard_perm: np.ndarray
    col_to_ambient: np.ndarray
    fixed_ambient: np.ndarray
    _dense: np.ndarray | None = field(default=None, repr=False)
    _flip_masks: tuple | None = field(default=None, repr=False)

    @property
    def reliable_len(self) -> int:
        return self.width - self.rank

    @property
    def reduced_dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = unpack_rows(self.words, self.width)
        return self._dense

    @property
    def A(self) -> np.ndarray:
        """The non-identity block, shape (rank, reliable_len)."""
        return self.reduced_dense[: self.rank, self.rank :]

    def ambient_positions(self) -> np.ndarray:
        """Ambient bit index at each permuted position."""
        return self.col_to_ambient[self.col_order]

    def perm_to_system(self, vec_perm: np.ndarray) -> np.ndarray:
        out = np.zeros(self.width, dtype=np.uint8)
        out[self.col_order] = vec_perm
        return out

    def flip_masks(self) -> tuple[list[int], list[int]]:
        """Per reliable bit j, the ambient-space flip vector packed as
        (x-half, z-half) integer bitsets."""
        if self._flip_masks is None:
            n, r, rl = self.n, self.rank, self.reliable_len
            amb = self.ambient_positions()
            flips = np.zeros((rl, 2 * n), dtype=np.uint8)
            if r:
                flips[:, amb[:r]] = self.A.T
            flips[np.arange(rl), amb[r:]] ^= 1
            mx = [_bits_to_int(row) for row in flips[:, :n]]
            mz = [_bits_to_int(row) for row in flips[:, n:]]
            self._flip_masks = (mx, mz)
        return self._flip_masks


def build_system(
    matrix: np.ndarray,
    syndrome: np.ndarray,
    order: ReliabilityOrder | np.ndarray,
    hard_bits: np.ndarray,
    n: int,
    col_to_ambient: np.ndarray | None = None,
    fixed_ambient: np.ndarray | None = None,
    require_rank: int | None = None,
) -> OsdSystem | None:
    """Permute, reduce, and package one decoding instance.

    ``matrix`` rows are the GF(2) constraints with columns aligned to
    the error bits being solved for (the symplectic half-swap has
    already been applied).  Returns None when the transformed syndrome
    is inconsistent beyond the rank — impossible for a full-rank code
    system, so ``require_rank`` turns both deficiencies into errors.
    """
    matrix = np.asarray(matrix, dtype=np.uint8)
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    m, width = matrix.shape
    perm = order.order if isinstance(order, ReliabilityOrder) else np.asarray(order)
    if perm.shape[0] != width:
        raise ValueError(f"order covers {perm.shape[0]} bits, matrix has {width} columns")
    words, rank, colmap, s_t = systematic_form(matrix[:, perm], syndrome)
    if require_rank is not None and rank != require_rank:
        raise OsdRankError(f"system rank {rank}, expected {require_rank}")
    if s_t[rank:].any():
        if require_rank is not None:
            raise OsdRankError(
                "syndrome inconsistent with the check system; "
                "valid inputs cannot reach this state"
            )
        return None
    if col_to_ambient is None:
        col_to_ambient = np.arange(width, dtype=np.int64)
    if fixed_ambient is None:
        fixed_ambient = np.zeros(2 * n, dtype=np.uint8)
    return OsdSystem(
        n=n,
        width=width,
        m=m,
        rank=rank,
        words=words,
        s_prime=s_t,
        col_order=perm[colmap],
        hard_perm=hard_bits[perm[colmap]],
        col_to_ambient=np.asarray(col_to_ambient, dtype=np.int64),
        fixed_ambient=np.asarray(fixed_ambient, dtype=np.uint8),
    )


def osd0_permuted(system: OsdSystem) -> np.ndarray:
    """Order-0 solution in permuted positions: reliable bits from the
    hard decision, pivot bits solved from the transformed syndrome."""
    width, r = system.width, system.rank
    vec = np.zeros(width, dtype=np.uint8)
    vec[r:] = system.hard_perm[r:]
    if r:
        reliable_words = pack_rows(vec, nwords=system.words.shape[1])
        vec[:r] = system.s_prime[:r] ^ parity_dot(system.words[:r], reliable_words[0])
    return vec


def osd0_solution(system: OsdSystem) -> np.ndarray:
    """Order-0 estimate in system columns."""
    return system.perm_to_system(osd0_permuted(system))


def flip_candidate(system: OsdSystem, base_perm: np.ndarray, j: int) -> np.ndarray:
    """Flip reliable bit j of a permuted-space candidate in O(n): XOR
    column j of A into the pivot part and toggle the bit itself."""
    if not 0 <= j < system.reliable_len:
        raise IndexError(f"reliable-bit index {j} out of range")
    out = base_perm.copy()
    if system.rank:
        out[: system.rank] ^= system.A[:, j]
    out[system.rank + j] ^= 1
    return out


@dataclass
class OsdwResult:
    vector: np.ndarray  # system columns
    weight: int  # Pauli weight of the full (fixed + lifted) error
    order: int
    candidates: int


def osd_w(
    system: OsdSystem,
    w: int,
    max_candidates: int | None = None,
) -> OsdwResult:
    """Minimum-weight candidate over all flips of at most w reliable bits.

    Enumeration follows the DFS tree whose children flip one zero bit
    strictly after the last set bit, so each pattern is visited exactly
    once; it halts early after ``max_candidates`` candidates and
    returns the best seen so far.
    """
    if w < 0:
        raise ValueError("order w must be >= 0")
    n, r = system.n, system.rank
    amb = system.ambient_positions()
    base_perm = osd0_permuted(system)
    ambient = system.fixed_ambient.copy()
    ambient[amb] = base_perm
    bx = _bits_to_int(ambient[:n])
    bz = _bits_to_int(ambient[n:])

    best = (bx, bz)
    best_w = (bx | bz).bit_count()
    count = 1
    rl = system.reliable_len
    budget = max_candidates if max_candidates is not None else float("inf")

    if w > 0 and rl > 0 and count < budget:
        mx, mz = system.flip_masks()

        def visit(last: int, depth: int, cx: int, cz: int) -> bool:
            nonlocal count, best, best_w
            for j in range(last + 1, rl):
                if count >= budget:
                    return True
                nx = cx ^ mx[j]
                nz = cz ^ mz[j]
                count += 1
                wt = (nx | nz).bit_count()
                if wt < best_w:
                    best_w = wt
                    best = (nx, nz)
                if depth + 1 < w and visit(j, depth + 1, nx, nz):
                    return True
            return False

        visit(-1, 0, bx, bz)

    full = np.concatenate([_int_to_bits(best[0], n), _int_to_bits(best[1], n)])
    return OsdwResult(
        vector=full[system.col_to_ambient],
        weight=best_w,
        order=w,
        candidates=count,
    )


def _bits_to_int(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _int_to_bits(value: int, length: int) -> np.ndarray:
    nbytes = (length + 7) // 8
    raw = np.frombuffer(value.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little", count=length)

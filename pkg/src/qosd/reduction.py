"""Reliable-subset reduction, degeneracy shortcuts, and the ADOSD pipeline.

Bits whose hard decision never wavered (run length T or T+1) and whose
soft reliability clears a threshold are trusted as-is: the checks they
fully explain are verified and dropped, and the remaining system is
solved by OSD at a fraction of the size.  Two degeneracy facts prune
the candidate search on top of that:

* flipping reliable bit j of the order-0 output adds a zero-syndrome
  vector; it is a stabilizer exactly when it commutes with every
  logical operator, and such flips never change the error coset;
* if every column of the reduced systematic block has Hamming weight
  below d - 1, every flip vector has weight below d and is therefore a
  stabilizer, so order-w search can collapse to order 0 outright.

The combined pipeline tries the reduction, collapses the order when the
column-weight condition holds, and falls back to full-size order-w OSD
whenever the reduction fails or the reduced system is inconsistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bp4 import BeliefState, soft_reliability_arrays
from .codes import StabilizerCode
from .gf2 import systematic_form
from .osd import (
    OsdSystem,
    build_order,
    build_system,
    order_from_budget,
    osd2_budget,
    osd_w,
)
from .symplectic import lam_column_order, symplectic_rows_product


@dataclass
class HighlyReliableMask:
    """Which of the 2n error bits are trusted enough to fix."""

    selected: np.ndarray
    count: int
    threshold: float


def highly_reliable_mask(belief: BeliefState, theta: float) -> HighlyReliableMask:
    """Bit (i, a) is selected when qubit i's hard decision ran
    unchanged to the end (run length T or T+1) and phi^a(i) >= theta."""
    if not 0.5 < theta <= 1.0:
        raise ValueError(f"theta must be in (0.5, 1], got {theta}")
    stable = belief.run_length >= belief.iterations_run
    phi_x, phi_z = soft_reliability_arrays(belief)
    selected = np.concatenate([stable & (phi_x >= theta), stable & (phi_z >= theta)])
    return HighlyReliableMask(selected, int(selected.sum()), theta)


@dataclass
class ReducedSystem:
    """Output of the reliable-subset reduction.

    The column split (unselected | selected) and the row split
    (touching | not touching unselected bits) tile the syndrome matrix
    as [[h_sub, B], [0, C]]; the bottom rows were verified against the
    fixed bits and the reduced syndrome already folds B's contribution
    in.
    """

    h_sub: np.ndarray
    s_sub: np.ndarray
    unselected: np.ndarray
    selected: np.ndarray
    fixed_values: np.ndarray
    top_rows: np.ndarray
    bottom_rows: np.ndarray
    B: np.ndarray
    C: np.ndarray
    n: int

    @property
    def m_prime(self) -> int:
        return self.h_sub.shape[0]

    @property
    def width(self) -> int:
        return self.h_sub.shape[1]


def hrsr(
    code: StabilizerCode,
    syndrome: np.ndarray,
    belief: BeliefState,
    hard_bits: np.ndarray,
    theta: float,
    check_solvable: bool = True,
) -> ReducedSystem | None:
    """Shrink the decoding problem by fixing the highly reliable bits.

    Returns None (failure) when the dropped checks contradict the fixed
    bits, or — with ``check_solvable`` — when the reduced system cannot
    reproduce the reduced syndrome.  The ADOSD pipeline passes
    ``check_solvable=False`` and lets its own elimination detect the
    latter case.
    """
    n = code.n
    mask = highly_reliable_mask(belief, theta)
    selected = np.nonzero(mask.selected)[0]
    unselected = np.nonzero(~mask.selected)[0]
    M = code.H[:, lam_column_order(n)]
    syndrome = np.asarray(syndrome, dtype=np.uint8)

    touches = M[:, unselected].any(axis=1) if unselected.size else np.zeros(code.m, dtype=bool)
    top = np.nonzero(touches)[0]
    bottom = np.nonzero(~touches)[0]
    fixed_values = hard_bits[selected]

    C = M[np.ix_(bottom, selected)]
    s_bottom = (C @ fixed_values.astype(np.int64)) % 2
    if not np.array_equal(s_bottom.astype(np.uint8), syndrome[bottom]):
        return None

    B = M[np.ix_(top, selected)]
    h_sub = M[np.ix_(top, unselected)]
    s_sub = syndrome[top] ^ ((B @ fixed_values.astype(np.int64)) % 2).astype(np.uint8)

    reduced = ReducedSystem(
        h_sub=h_sub,
        s_sub=s_sub,
        unselected=unselected,
        selected=selected,
        fixed_values=fixed_values,
        top_rows=top,
        bottom_rows=bottom,
        B=B,
        C=C,
        n=n,
    )
    if check_solvable:
        _, rank, _, s_t = systematic_form(h_sub, s_sub)
        if s_t[rank:].any():
            return None
    return reduced


def lift(reduced: ReducedSystem, solution: np.ndarray) -> np.ndarray:
    """Reassemble the full 2n-bit estimate from a reduced solution and
    the fixed bits."""
    solution = np.asarray(solution, dtype=np.uint8)
    check = (reduced.h_sub @ solution.astype(np.int64)) % 2
    if not np.array_equal(check.astype(np.uint8), reduced.s_sub):
        raise ValueError("solution does not satisfy the reduced system")
    out = np.zeros(2 * reduced.n, dtype=np.uint8)
    out[reduced.unselected] = solution
    out[reduced.selected] = reduced.fixed_values
    return out


def corollary_check(A: np.ndarray, distance: int) -> bool:
    """True when every systematic-block column has weight < d - 1, in
    which case every reliable-bit flip is a stabilizer and order-w OSD
    collapses to order 0."""
    A = np.asarray(A)
    if A.size == 0:
        return True
    return bool(A.sum(axis=0).max() < distance - 1)


def flip_vectors_ambient(system: OsdSystem) -> np.ndarray:
    """All reliable-bit flip vectors as rows of a (reliable_len, 2n)
    matrix in ambient bit coordinates."""
    n, r, rl = system.n, system.rank, system.reliable_len
    amb = system.ambient_positions()
    flips = np.zeros((rl, 2 * n), dtype=np.uint8)
    if r:
        flips[:, amb[:r]] = system.A.T
    flips[np.arange(rl), amb[r:]] ^= 1
    return flips


def stabilizer_flip_check(system: OsdSystem, L: np.ndarray, j: int) -> bool:
    """Whether flipping reliable bit j multiplies in a stabilizer
    (True) or a nontrivial logical operator (False)."""
    flips = flip_vectors_ambient(system)
    if not 0 <= j < flips.shape[0]:
        raise IndexError(f"reliable-bit index {j} out of range")
    return not symplectic_rows_product(L, flips[j]).any()


def nontrivial_logical_flips(system: OsdSystem, L: np.ndarray) -> np.ndarray:
    """Boolean vector over reliable bits: True where the flip induces a
    nontrivial logical operator."""
    flips = flip_vectors_ambient(system)
    n = system.n
    prods = (
        flips[:, n:] @ L[:, :n].T.astype(np.int64)
        + flips[:, :n] @ L[:, n:].T.astype(np.int64)
    ) % 2
    return prods.any(axis=1)


@dataclass
class AdosdDiagnostics:
    stage: str  # "reduced" or "fallback"
    order_used: int
    candidates: int
    m_reduced: int
    cols_reduced: int
    fixed_bits: int
    corollary_fired: bool
    budget: int


def adosd(
    code: StabilizerCode,
    syndrome: np.ndarray,
    belief: BeliefState,
    hard_bits: np.ndarray,
    theta: float = 0.999995,
    budget: int | None = None,
    backup_order: int = 2,
    metric: str = "hard_then_soft",
) -> tuple[np.ndarray, AdosdDiagnostics]:
    """Reduce, maybe collapse to order 0, solve; fall back to full-size
    order-``backup_order`` OSD (same candidate budget) when the
    reduction fails.  Always returns a syndrome-valid estimate."""
    n, k = code.n, code.k
    if budget is None:
        budget = osd2_budget(n + k)
    order = build_order(belief, metric)

    reduced = hrsr(code, syndrome, belief, hard_bits, theta, check_solvable=False)
    system = None
    if reduced is not None:
        sub_positions = np.full(2 * n, -1, dtype=np.int64)
        sub_positions[reduced.unselected] = np.arange(reduced.unselected.size)
        sub_order = sub_positions[order.order]
        sub_order = sub_order[sub_order >= 0]
        system = build_system(
            reduced.h_sub,
            reduced.s_sub,
            sub_order,
            hard_bits[reduced.unselected],
            n=n,
            col_to_ambient=reduced.unselected,
            fixed_ambient=lift_frame(reduced),
        )

    if system is None:
        HL = code.H[:, lam_column_order(n)]
        full = build_system(HL, syndrome, order, hard_bits, n=n, require_rank=n - k)
        res = osd_w(full, backup_order, budget)
        diag = AdosdDiagnostics(
            stage="fallback",
            order_used=backup_order,
            candidates=res.candidates,
            m_reduced=code.m,
            cols_reduced=2 * n,
            fixed_bits=0,
            corollary_fired=False,
            budget=budget,
        )
        return res.vector, diag

    if code.distance_certified and code.distance > 1 and corollary_check(system.A, code.distance):
        w = 0
        fired = True
    else:
        w = order_from_budget(system.reliable_len, budget)
        fired = False
    res = osd_w(system, w, budget)
    estimate = lift(reduced, res.vector)
    diag = AdosdDiagnostics(
        stage="reduced",
        order_used=w,
        candidates=res.candidates,
        m_reduced=reduced.m_prime,
        cols_reduced=reduced.width,
        fixed_bits=reduced.selected.size,
        corollary_fired=fired,
        budget=budget,
    )
    return estimate, diag


def lift_frame(reduced: ReducedSystem) -> np.ndarray:
    """Ambient 2n-bit vector holding only the fixed bits."""
    out = np.zeros(2 * reduced.n, dtype=np.uint8)
    out[reduced.selected] = reduced.fixed_values
    return out

"""Deterministic invariant suites, runnable from the CLI.

Each check returns (name, passed, detail); the CLI prints one line per
check and exits nonzero if any fails.  The same functions back the unit
tests, so `qosd selftest` doubles as an installed-environment smoke
test.
"""

from __future__ import annotations

from itertools import product
from math import comb

import numpy as np

from . import codes as codes_mod
from .bp4 import BeliefState, BpConfig, Bp4Decoder, hard_decision_bits
from .gf2 import GF2Matrix, apply_row_ops, gauss_eliminate, pack_rows, systematic_form, unpack_rows
from .osd import build_order, build_system, osd_w, osd0_permuted, flip_candidate
from .reduction import adosd, hrsr, lift, stabilizer_flip_check
from .symplectic import (
    codes_to_bits,
    lam_column_order,
    pauli_to_bits,
    random_pauli_bits,
    symplectic_product,
    syndrome_of,
)

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _matrix_commutes(a: str, b: str) -> bool:
    ma = _PAULI_MATS[a[0]]
    mb = _PAULI_MATS[b[0]]
    for ca, cb in zip(a[1:], b[1:]):
        ma = np.kron(ma, _PAULI_MATS[ca])
        mb = np.kron(mb, _PAULI_MATS[cb])
    return bool(np.allclose(ma @ mb, mb @ ma))


def check_symplectic_commutation(seed: int = 0) -> tuple[bool, str]:
    """Symplectic product 0 <-> operators commute, against dense matrices."""
    for a, b in product("IXYZ", repeat=2):
        want = 0 if _matrix_commutes(a, b) else 1
        got = symplectic_product(pauli_to_bits(a), pauli_to_bits(b))
        if got != want:
            return False, f"single-qubit pair {a},{b}: got {got}, want {want}"
    rng = np.random.default_rng(seed)
    for n in (2, 3):
        for _ in range(50):
            va = random_pauli_bits(rng, n)
            vb = random_pauli_bits(rng, n)
            from .symplectic import bits_to_pauli

            sa, sb = bits_to_pauli(va), bits_to_pauli(vb)
            want = 0 if _matrix_commutes(sa, sb) else 1
            if symplectic_product(va, vb) != want:
                return False, f"{n}-qubit pair {sa},{sb}"
    return True, "16 single-qubit pairs + 100 random multi-qubit pairs"


def check_syndrome_stabilizer_invariance(seed: int = 1) -> tuple[bool, str]:
    """Adding any stabilizer-row combination never changes the syndrome."""
    code = codes_mod.build_rotated_surface(3)
    rng = np.random.default_rng(seed)
    for _ in range(200):
        e = random_pauli_bits(rng, code.n)
        picks = rng.integers(0, 2, size=code.m).astype(bool)
        stab = np.bitwise_xor.reduce(code.H[picks], axis=0) if picks.any() else np.zeros(2 * code.n, dtype=np.uint8)
        if not np.array_equal(syndrome_of(code.H, e), syndrome_of(code.H, e ^ stab)):
            return False, "syndrome changed under a stabilizer"
    return True, "200 random (error, stabilizer) pairs on [[9,1,3]]"


def check_elimination_replay(seed: int = 2) -> tuple[bool, str]:
    """Replaying the recorded ops + column permutation reproduces the
    reduced matrix, and matches the packed fast path bit for bit."""
    rng = np.random.default_rng(seed)
    for _ in range(25):
        m = int(rng.integers(1, 40))
        c = int(rng.integers(1, 90))
        dense = rng.integers(0, 2, size=(m, c), dtype=np.uint8)
        elim = gauss_eliminate(GF2Matrix.from_dense(dense))
        replay = apply_row_ops(elim.row_ops, dense)[:, elim.col_perm]
        if not np.array_equal(replay, elim.matrix.to_dense()):
            return False, "op-log replay mismatch"
        words, rank, order, _ = systematic_form(dense)
        if rank != elim.rank or not np.array_equal(order, elim.col_perm):
            return False, "fast path disagrees with reference"
        if not np.array_equal(unpack_rows(words, c), elim.matrix.to_dense()):
            return False, "fast path matrix mismatch"
    return True, "25 random matrices, log replay + fast-path agreement"


def check_lift_soundness(seed: int = 3) -> tuple[bool, str]:
    """Reduced solutions lift to full estimates matching the syndrome."""
    code = codes_mod.build_rotated_surface(5)
    cfg = BpConfig(error_rate=0.05)
    decoder = Bp4Decoder(code, cfg)
    rng = np.random.default_rng(seed)
    checked = 0
    trial = 0
    while checked < 50 and trial < 5000:
        trial += 1
        pauli = rng.integers(0, 4, size=code.n) * (rng.random(code.n) < 0.06)
        e = codes_to_bits(pauli)
        s = code.syndrome(e)
        out = decoder.decode(s)
        if out.success:
            continue
        hard = hard_decision_bits(out.belief)
        reduced = hrsr(code, s, out.belief, hard, theta=0.999995, check_solvable=False)
        if reduced is None:
            continue
        order = build_order(out.belief)
        sub_positions = np.full(2 * code.n, -1, dtype=np.int64)
        sub_positions[reduced.unselected] = np.arange(reduced.unselected.size)
        sub_order = sub_positions[order.order]
        sub_order = sub_order[sub_order >= 0]
        system = build_system(
            reduced.h_sub, reduced.s_sub, sub_order,
            hard[reduced.unselected], n=code.n, col_to_ambient=reduced.unselected,
        )
        if system is None:
            continue
        solution = osd_w(system, 0).vector
        estimate = lift(reduced, solution)
        if not np.array_equal(syndrome_of(code.H, estimate), s):
            return False, f"lifted estimate misses syndrome at trial {trial}"
        checked += 1
    return checked >= 50, f"{checked} reduced instances lifted and verified"


def check_dfs_candidate_counts() -> tuple[bool, str]:
    """DFS visits exactly sum_i C(rl, i) candidates when unbudgeted."""
    code = codes_mod.build_rotated_surface(3)
    cfg = BpConfig(error_rate=0.1)
    decoder = Bp4Decoder(code, cfg)
    HL = code.H[:, lam_column_order(code.n)]
    s = code.syndrome(pauli_to_bits("XIIIIIIII"))
    out = decoder.decode(s)
    order = build_order(out.belief)
    system = build_system(
        HL, s, order, hard_decision_bits(out.belief),
        n=code.n, require_rank=code.n - code.k,
    )
    rl = system.reliable_len
    for w in range(4):
        want = sum(comb(rl, i) for i in range(w + 1))
        got = osd_w(system, w).candidates
        if got != want:
            return False, f"w={w}: visited {got}, want {want}"
    return True, f"orders 0..3 on reliable length {rl}"


def check_proposition_oracle(seed: int = 4) -> tuple[bool, str]:
    """Flip classification == brute force (zero syndrome + commutes with
    all logicals) for every reliable column, random systems on [[9,1,3]]."""
    code = codes_mod.build_rotated_surface(3)
    HL = code.H[:, lam_column_order(code.n)]
    rng = np.random.default_rng(seed)
    from .reduction import flip_vectors_ambient

    for _ in range(20):
        e = random_pauli_bits(rng, code.n)
        s = code.syndrome(e)
        perm = rng.permutation(2 * code.n)
        hard = rng.integers(0, 2, size=2 * code.n, dtype=np.uint8)
        system = build_system(HL, s, perm, hard, n=code.n, require_rank=code.n - code.k)
        flips = flip_vectors_ambient(system)
        for j in range(system.reliable_len):
            got = stabilizer_flip_check(system, code.L, j)
            g = flips[j]
            zero_syn = not syndrome_of(code.H, g).any()
            commutes = not syndrome_of(code.L, g).any()
            if not zero_syn:
                return False, f"flip vector {j} has nonzero syndrome"
            if got != commutes:
                return False, f"column {j}: classifier {got}, brute force {commutes}"
    return True, "20 random systems x all reliable columns on [[9,1,3]]"


def check_flip_oracle(seed: int = 5) -> tuple[bool, str]:
    """Incremental flip == from-scratch re-solve with the bit toggled."""
    rng = np.random.default_rng(seed)
    code = codes_mod.build_rotated_surface(3)
    HL = code.H[:, lam_column_order(code.n)]
    for _ in range(100):
        e = random_pauli_bits(rng, code.n)
        s = code.syndrome(e)
        perm = rng.permutation(2 * code.n)
        hard = rng.integers(0, 2, size=2 * code.n, dtype=np.uint8)
        system = build_system(HL, s, perm, hard, n=code.n, require_rank=code.n - code.k)
        base = osd0_permuted(system)
        j = int(rng.integers(0, system.reliable_len))
        flipped = flip_candidate(system, base, j)
        hard2 = hard.copy()
        hard2[system.col_order[system.rank + j]] ^= 1
        system2 = build_system(HL, s, system.col_order, hard2, n=code.n,
                               require_rank=code.n - code.k)
        if not np.array_equal(system.perm_to_system(flipped), osd_w(system2, 0).vector):
            return False, "incremental flip differs from re-solve"
    return True, "100 random (system, flip) pairs"


ALL_CHECKS = [
    ("symplectic-commutation-oracle", check_symplectic_commutation),
    ("syndrome-stabilizer-invariance", check_syndrome_stabilizer_invariance),
    ("gaussian-elimination-replay", check_elimination_replay),
    ("hrsr-lift-soundness", check_lift_soundness),
    ("dfs-candidate-counts", check_dfs_candidate_counts),
    ("proposition-flip-oracle", check_proposition_oracle),
    ("incremental-flip-oracle", check_flip_oracle),
]


def run_all() -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in ALL_CHECKS:
        ok, detail = fn()
        results.append((name, ok, detail))
    return results

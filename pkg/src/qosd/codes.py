"""Stabilizer code constructions, invariant checks, and file import/export.

Builds the benchmark code families (rotated surface, rotated toric,
bivariate bicycle) and loads arbitrary stabilizer codes from QCODE v1
text files.  Every constructed or loaded code is validated against the
structural invariants: stabilizers commute pairwise, stabilizers commute
with logicals, rank(H) = n - k, and the logical rows pair up
symplectically (rank(L Lam L^T) = 2k).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import symplectic
from .gf2 import gf2_rank, systematic_form
from .symplectic import ResidualSyndromeError, symplectic_rows_product, syndrome_of


class CodeConstructionError(ValueError):
    """A code construction or loaded file violates a structural invariant."""


@dataclass(frozen=True, eq=False)
class StabilizerCode:
    """An [[n, k, d]] stabilizer code in binary symplectic form.

    H holds one stabilizer generator per row (m x 2n), L the logical
    operators ordered X_1..X_k, Z_1..Z_k (2k x 2n).  ``distance`` is
    metadata: it is verified only for small constructed codes, and
    ``distance_certified`` records whether degeneracy shortcuts that
    depend on it may be trusted.
    """

    name: str
    n: int
    k: int
    distance: int
    H: np.ndarray
    L: np.ndarray
    distance_certified: bool = True

    @property
    def m(self) -> int:
        return self.H.shape[0]

    def syndrome(self, e: np.ndarray) -> np.ndarray:
        return syndrome_of(self.H, e)

    def validate(self) -> None:
        """Raise CodeConstructionError if any invariant fails."""
        n, k = self.n, self.k
        if self.H.shape[1] != 2 * n:
            raise CodeConstructionError(f"H has {self.H.shape[1]} columns, expected {2 * n}")
        if self.L.shape != (2 * k, 2 * n):
            raise CodeConstructionError(f"L has shape {self.L.shape}, expected {(2 * k, 2 * n)}")
        comm = _pairwise_symplectic(self.H, self.H)
        bad = np.argwhere(comm)
        if bad.size:
            i, j = bad[0]
            raise CodeConstructionError(f"stabilizer rows {i} and {j} anticommute")
        cross = _pairwise_symplectic(self.H, self.L)
        bad = np.argwhere(cross)
        if bad.size:
            i, j = bad[0]
            raise CodeConstructionError(f"stabilizer row {i} anticommutes with logical row {j}")
        r = gf2_rank(self.H)
        if r != n - k:
            raise CodeConstructionError(f"rank(H) = {r}, expected n - k = {n - k}")
        gram = _pairwise_symplectic(self.L, self.L)
        if gf2_rank(gram) != 2 * k:
            raise CodeConstructionError("logical rows do not span 2k symplectic pairs")

    def is_logical_error(self, e: np.ndarray, estimate: np.ndarray | None) -> bool:
        """Classify a decode attempt; a failed decode counts as logical.

        Raises ResidualSyndromeError when the estimate does not even
        match the true error's syndrome — valid decoder outputs always
        do, so that indicates a decoder bug rather than a logical error.
        """
        if estimate is None:
            return True
        residual = np.bitwise_xor(e, estimate)
        if syndrome_of(self.H, residual).any():
            raise ResidualSyndromeError("estimate does not match the observed syndrome")
        return bool(symplectic_rows_product(self.L, residual).any())


def _pairwise_symplectic(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of symplectic products A_i . Lam . B_j over GF(2)."""
    n = A.shape[1] // 2
    ax, az = A[:, :n].astype(np.int64), A[:, n:].astype(np.int64)
    bx, bz = B[:, :n].astype(np.int64), B[:, n:].astype(np.int64)
    return ((ax @ bz.T + az @ bx.T) % 2).astype(np.uint8)


def _pauli_row(n: int, xs: list[int], zs: list[int]) -> np.ndarray:
    row = np.zeros(2 * n, dtype=np.uint8)
    row[xs] = 1
    row[[n + q for q in zs]] = 1
    return row


# ---------------------------------------------------------------------------
# Rotated surface code
# ---------------------------------------------------------------------------


def build_rotated_surface(d: int) -> StabilizerCode:
    """[[d^2, 1, d]] rotated surface code, d odd and >= 3.

    Checkerboard of weight-4 plaquettes with weight-2 boundary checks:
    X-type halves on the top/bottom edges, Z-type on the left/right.
    The logical pair is a Z string along the top row and an X string
    down the left column.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError(f"rotated surface code needs odd d >= 3, got {d}")
    n = d * d

    def q(r: int, c: int) -> int:
        return r * d + c

    x_checks: list[list[int]] = []
    z_checks: list[list[int]] = []
    for r in range(d - 1):
        for c in range(d - 1):
            plaq = [q(r, c), q(r, c + 1), q(r + 1, c), q(r + 1, c + 1)]
            (z_checks if (r + c) % 2 == 0 else x_checks).append(plaq)
    for c in range(0, d - 2, 2):
        x_checks.append([q(0, c), q(0, c + 1)])
    for c in range(1, d - 1, 2):
        x_checks.append([q(d - 1, c), q(d - 1, c + 1)])
    for r in range(1, d - 1, 2):
        z_checks.append([q(r, 0), q(r + 1, 0)])
    for r in range(0, d - 2, 2):
        z_checks.append([q(r, d - 1), q(r + 1, d - 1)])

    H = np.vstack(
        [_pauli_row(n, qs, []) for qs in x_checks]
        + [_pauli_row(n, [], qs) for qs in z_checks]
    )
    logical_x = _pauli_row(n, [q(r, 0) for r in range(d)], [])
    logical_z = _pauli_row(n, [], [q(0, c) for c in range(d)])
    L = np.vstack([logical_x, logical_z])

    code = StabilizerCode(f"rotated_surface_d{d}", n, 1, d, H, L)
    code.validate()
    return code


# ---------------------------------------------------------------------------
# Rotated toric code
# ---------------------------------------------------------------------------


def build_rotated_toric(d: int) -> StabilizerCode:
    """[[d^2, 2, d]] rotated toric code, d even and >= 2.

    Checkerboard of weight-4 plaquettes on a periodic d x d qubit grid.
    One face of each type is a product of the others; one dependent row
    is kept so m = n - k + 1.
    """
    if d < 2 or d % 2 == 1:
        raise ValueError(f"rotated toric code needs even d >= 2, got {d}")
    n = d * d

    def q(r: int, c: int) -> int:
        return (r % d) * d + (c % d)

    x_checks: list[list[int]] = []
    z_checks: list[list[int]] = []
    for r in range(d):
        for c in range(d):
            plaq = [q(r, c), q(r, c + 1), q(r + 1, c), q(r + 1, c + 1)]
            (z_checks if (r + c) % 2 == 0 else x_checks).append(plaq)
    # Drop one Z face; the X faces keep their single dependency.
    z_checks = z_checks[:-1]

    H = np.vstack(
        [_pauli_row(n, qs, []) for qs in x_checks]
        + [_pauli_row(n, [], qs) for qs in z_checks]
    )
    L = logical_matrix_from_checks(H, n, 2)
    code = StabilizerCode(f"rotated_toric_d{d}", n, 2, d, H, L)
    code.validate()
    return code


# ---------------------------------------------------------------------------
# Bivariate bicycle codes
# ---------------------------------------------------------------------------


def _circulant_sum(l: int, m: int, terms: list[tuple[int, int]]) -> np.ndarray:
    """Sum over terms of x^i y^j where x, y are the cyclic shifts of
    size l and m acting on the l*m group algebra."""
    size = l * m
    mat = np.zeros((size, size), dtype=np.uint8)
    for i, j in terms:
        xi = np.roll(np.eye(l, dtype=np.uint8), i % l, axis=1)
        yj = np.roll(np.eye(m, dtype=np.uint8), j % m, axis=1)
        mat ^= np.kron(xi, yj)
    return mat


def build_bivariate_bicycle(
    l: int,
    m: int,
    a_terms: list[tuple[int, int]],
    b_terms: list[tuple[int, int]],
    name: str | None = None,
    distance: int | None = None,
    distance_certified: bool = False,
) -> StabilizerCode:
    """CSS code with H_X = [A | B], H_Z = [B^T | A^T] from two
    three-term bivariate polynomials over cyclic groups of sizes l, m.

    Dependent stabilizer rows are removed so exactly n - k independent
    generators are emitted.  The logical matrix comes from symplectic
    completion of the check kernel.
    """
    if len(a_terms) != 3 or len(b_terms) != 3:
        raise ValueError("bivariate bicycle polynomials need exactly 3 terms each")
    half = l * m
    n = 2 * half
    A = _circulant_sum(l, m, [tuple(t) for t in a_terms])
    B = _circulant_sum(l, m, [tuple(t) for t in b_terms])
    hx = np.concatenate([A, B], axis=1)
    hz = np.concatenate([B.T, A.T], axis=1)

    k = n - gf2_rank(hx) - gf2_rank(hz)
    if k == 0:
        raise CodeConstructionError("degenerate polynomials: the construction has k = 0")

    rows_x = np.zeros((half, 2 * n), dtype=np.uint8)
    rows_x[:, :n] = hx
    rows_z = np.zeros((half, 2 * n), dtype=np.uint8)
    rows_z[:, n:] = hz
    H_full = np.vstack([rows_x, rows_z])
    H = _independent_rows(H_full, n - k)

    L = logical_matrix_from_checks(H, n, k)
    code = StabilizerCode(
        name or f"bb_{n}_{k}",
        n,
        k,
        distance if distance is not None else 0,
        H,
        L,
        distance_certified=distance_certified and distance is not None,
    )
    code.validate()
    return code


def _independent_rows(mat: np.ndarray, count: int) -> np.ndarray:
    """First ``count`` linearly independent rows, scanning top to bottom."""
    _, rank, order, _ = systematic_form(mat.T)
    if rank < count:
        raise CodeConstructionError(f"row space has rank {rank} < {count}")
    keep = np.sort(order[:rank][:count])
    return mat[keep]


def bb_preset_names() -> list[str]:
    return sorted(_bb_presets())


def build_bb_preset(name: str) -> StabilizerCode:
    """Construct one of the bundled bivariate bicycle parameter sets."""
    presets = _bb_presets()
    if name not in presets:
        raise ValueError(f"unknown BB preset {name!r}; available: {sorted(presets)}")
    p = presets[name]
    code = build_bivariate_bicycle(
        p["l"],
        p["m"],
        p["a_terms"],
        p["b_terms"],
        name=f"bb_{name}",
        distance=p["d"],
        distance_certified=True,
    )
    if code.k != p["k"]:
        raise CodeConstructionError(
            f"preset {name} built with k = {code.k}, expected {p['k']}"
        )
    return code


def _bb_presets() -> dict:
    text = resources.files("qosd.data").joinpath("bb_codes.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# Logical operators by symplectic completion
# ---------------------------------------------------------------------------


def logical_matrix_from_checks(H: np.ndarray, n: int, k: int) -> np.ndarray:
    """Logical matrix via symplectic Gram-Schmidt on ker(H Lam .) / rowspace(H).

    Returns 2k rows ordered X_1..X_k, Z_1..Z_k with L Lam L^T equal to
    the block form [[0, I], [I, 0]].
    """
    kernel = _kernel_basis(H, n)
    reps = _quotient_representatives(kernel, H, 2 * k)
    pairs = _symplectic_gram_schmidt(reps)
    xs = [a for a, _ in pairs]
    zs = [b for _, b in pairs]
    return np.vstack(xs + zs).astype(np.uint8)


def _kernel_basis(H: np.ndarray, n: int) -> np.ndarray:
    """Basis of the space of vectors commuting with every row of H."""
    HL = H[:, symplectic.lam_column_order(n)]
    words, rank, order, _ = systematic_form(HL)
    from .gf2 import unpack_rows

    reduced = unpack_rows(words, 2 * n)
    free = order[rank:]
    basis = np.zeros((free.size, 2 * n), dtype=np.uint8)
    for idx in range(free.size):
        basis[idx, free[idx]] = 1
        support = np.nonzero(reduced[:rank, rank + idx])[0]
        basis[idx, order[support]] ^= 1
    return basis


class _IncrementalSpan:
    """Row space tracker over GF(2); rows kept as int bitsets."""

    def __init__(self) -> None:
        self._pivots: dict[int, int] = {}

    @staticmethod
    def _to_int(vec: np.ndarray) -> int:
        return int.from_bytes(np.packbits(vec, bitorder="little").tobytes(), "little")

    def add(self, vec: np.ndarray) -> bool:
        """Reduce against the span; add and return True if independent."""
        v = self._to_int(vec)
        while v:
            p = v.bit_length() - 1
            if p not in self._pivots:
                self._pivots[p] = v
                return True
            v ^= self._pivots[p]
        return False


def _quotient_representatives(kernel: np.ndarray, H: np.ndarray, count: int) -> list[np.ndarray]:
    """Kernel vectors extending rowspace(H), greedily, until ``count`` found."""
    span = _IncrementalSpan()
    for row in H:
        span.add(row)
    reps: list[np.ndarray] = []
    for v in kernel:
        if len(reps) == count:
            break
        if span.add(v):
            reps.append(v.copy())
    if len(reps) != count:
        raise CodeConstructionError(
            f"found only {len(reps)} of {count} logical representatives"
        )
    return reps


def _symplectic_gram_schmidt(vectors: list[np.ndarray]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pair vectors into (a_i, b_i) with a_i.Lam.b_j = delta_ij and all
    other products zero."""
    remaining = [v.copy() for v in vectors]
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    while remaining:
        a = remaining.pop(0)
        partner = None
        for idx, u in enumerate(remaining):
            if symplectic.symplectic_product(a, u) == 1:
                partner = idx
                break
        if partner is None:
            raise CodeConstructionError("symplectic pairing failed: isotropic leftover")
        b = remaining.pop(partner)
        for u in remaining:
            if symplectic.symplectic_product(u, b):
                u ^= a
            if symplectic.symplectic_product(u, a):
                u ^= b
        pairs.append((a, b))
    return pairs


# ---------------------------------------------------------------------------
# QCODE v1 file format
# ---------------------------------------------------------------------------


def save_code(code: StabilizerCode, path: str | Path) -> None:
    """Write the QCODE v1 text format (header, H section, L section)."""
    lines = [f"QCODE v1 n={code.n} k={code.k} d={code.distance} m={code.m}", "H"]
    for row in code.H:
        lines.append(" ".join(str(c) for c in np.nonzero(row)[0]))
    lines.append("L")
    for row in code.L:
        lines.append(" ".join(str(c) for c in np.nonzero(row)[0]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_code(
    path: str | Path,
    name: str | None = None,
    distance_certified: bool = False,
) -> StabilizerCode:
    """Load a QCODE v1 file and verify all stabilizer-code invariants.

    The declared distance is stored as metadata; pass
    ``distance_certified=True`` only when it is known to be correct,
    since degeneracy shortcuts rely on it.
    """
    path = Path(path)
    lines = [ln.strip() for ln in path.read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    header = lines[0].split()
    if len(header) < 2 or header[0] != "QCODE" or header[1] != "v1":
        raise CodeConstructionError(f"{path}: not a QCODE v1 file")
    meta = {}
    for tok in header[2:]:
        key, _, val = tok.partition("=")
        meta[key] = int(val)
    for key in ("n", "k", "d", "m"):
        if key not in meta:
            raise CodeConstructionError(f"{path}: header missing {key}=")
    n, k = meta["n"], meta["k"]
    if lines[1] != "H":
        raise CodeConstructionError(f"{path}: expected 'H' section after header")
    h_lines = lines[2 : 2 + meta["m"]]
    if len(h_lines) != meta["m"] or lines[2 + meta["m"]] != "L":
        raise CodeConstructionError(f"{path}: expected {meta['m']} H rows then 'L'")
    l_lines = lines[3 + meta["m"] :]
    if len(l_lines) != 2 * k:
        raise CodeConstructionError(f"{path}: expected {2 * k} L rows, got {len(l_lines)}")

    def parse(rows: list[str]) -> np.ndarray:
        out = np.zeros((len(rows), 2 * n), dtype=np.uint8)
        for i, ln in enumerate(rows):
            cols = [int(t) for t in ln.split()]
            if any(c < 0 or c >= 2 * n for c in cols):
                raise CodeConstructionError(f"{path}: column index out of range in row {i}")
            out[i, cols] = 1
        return out

    code = StabilizerCode(
        name or path.stem,
        n,
        k,
        meta["d"],
        parse(h_lines),
        parse(l_lines),
        distance_certified=distance_certified,
    )
    code.validate()
    return code


# ---------------------------------------------------------------------------
# Family dispatch used by the CLI
# ---------------------------------------------------------------------------


@dataclass
class CodeSpec:
    """Which code to build: a family name plus its parameters."""

    family: str
    d: int | None = None
    preset: str | None = None
    path: str | None = None
    bb_params: dict = field(default_factory=dict)

    def build(self) -> StabilizerCode:
        if self.family == "rotated_surface":
            if self.d is None:
                raise ValueError("rotated_surface needs d")
            return build_rotated_surface(self.d)
        if self.family == "rotated_toric":
            if self.d is None:
                raise ValueError("rotated_toric needs d")
            return build_rotated_toric(self.d)
        if self.family == "bivariate_bicycle":
            if self.preset:
                return build_bb_preset(self.preset)
            return build_bivariate_bicycle(**self.bb_params)
        if self.family == "from_file":
            if not self.path:
                raise ValueError("from_file needs a path")
            return load_code(self.path)
        raise ValueError(f"unknown code family {self.family!r}")


def code_report(code: StabilizerCode) -> dict:
    """Verification report: invariants, rank, and the check-weight histogram."""
    report: dict = {
        "name": code.name,
        "n": code.n,
        "k": code.k,
        "d": code.distance,
        "m": code.m,
        "rank_H": gf2_rank(code.H),
    }
    weights = [symplectic.pauli_weight(row) for row in code.H]
    hist: dict[int, int] = {}
    for w in weights:
        hist[w] = hist.get(w, 0) + 1
    report["check_weight_histogram"] = dict(sorted(hist.items()))
    try:
        code.validate()
        report["valid"] = True
        report["errors"] = []
    except CodeConstructionError as exc:
        report["valid"] = False
        report["errors"] = [str(exc)]
    return report

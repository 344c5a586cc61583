"""Binary symplectic representation of Pauli operators.

An n-qubit Pauli operator (up to phase) is stored as a length-2n uint8
vector ``[x | z]``: entry ``i`` is the X component on qubit ``i`` and
entry ``n + i`` the Z component.  Under this encoding two Paulis
anticommute exactly when their symplectic inner product is 1, and the
error syndrome of ``e`` against a check matrix ``H`` is ``H @ Lam @ e``
over GF(2).  The symplectic form ``Lam`` is never materialised; wherever
``H Lam`` is needed the X/Z column halves are swapped instead.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

# Pauli codes used throughout: 0=I, 1=X, 2=Y, 3=Z.
PAULI_CHARS = "IXYZ"

# (x bit, z bit) per Pauli code.
_PAULI_XZ = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.uint8)


class ResidualSyndromeError(RuntimeError):
    """An error estimate does not reproduce the syndrome it was meant to match."""


def pauli_to_bits(pauli: str | Sequence[str]) -> np.ndarray:
    """Map a Pauli string to its [x | z] bit vector.

    Per qubit: I -> (0|0), X -> (1|0), Y -> (1|1), Z -> (0|1); the X
    parts of all qubits come first, then the Z parts.
    """
    chars = list(pauli)
    if not chars:
        raise ValueError("empty Pauli string")
    try:
        codes = np.array([PAULI_CHARS.index(c) for c in chars], dtype=np.intp)
    except ValueError:
        bad = sorted(set(chars) - set(PAULI_CHARS))
        raise ValueError(f"invalid Pauli characters: {bad}") from None
    xz = _PAULI_XZ[codes]
    return np.concatenate([xz[:, 0], xz[:, 1]])


def bits_to_pauli(v: np.ndarray) -> str:
    """Inverse of :func:`pauli_to_bits`."""
    x, z = split_xz(v)
    codes = np.where((x == 1) & (z == 0), 1, 0)
    codes = np.where((x == 1) & (z == 1), 2, codes)
    codes = np.where((x == 0) & (z == 1), 3, codes)
    return "".join(PAULI_CHARS[c] for c in codes)


def codes_to_bits(codes: np.ndarray) -> np.ndarray:
    """Pauli codes (0..3 per qubit) to a [x | z] bit vector."""
    xz = _PAULI_XZ[np.asarray(codes, dtype=np.intp)]
    return np.concatenate([xz[:, 0], xz[:, 1]])


def split_xz(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(v)
    if v.shape[-1] % 2:
        raise ValueError(f"symplectic vector length {v.shape[-1]} is odd")
    n = v.shape[-1] // 2
    return v[..., :n], v[..., n:]


def pauli_weight(v: np.ndarray) -> int:
    """Number of qubits on which the operator acts nontrivially."""
    x, z = split_xz(v)
    return int(np.count_nonzero(x | z))


def symplectic_product(a: np.ndarray, b: np.ndarray) -> int:
    """a . Lam . b mod 2 — equals 1 iff the two Paulis anticommute."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    ax, az = split_xz(a)
    bx, bz = split_xz(b)
    return int((int(ax @ bz) + int(az @ bx)) % 2)


def lam_column_order(n: int) -> np.ndarray:
    """Column order that turns M into M Lam (swap X and Z halves)."""
    return np.concatenate([np.arange(n, 2 * n), np.arange(n)])


def syndrome_of(H: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Syndrome s = H Lam e over GF(2), as a uint8 vector of length m."""
    H = np.asarray(H)
    e = np.asarray(e)
    if H.shape[1] != e.shape[0]:
        raise ValueError(f"H has {H.shape[1]} columns, e has length {e.shape[0]}")
    ex, ez = split_xz(e)
    n = ex.shape[0]
    s = H[:, :n] @ ez.astype(np.int64) + H[:, n:] @ ex.astype(np.int64)
    return (s % 2).astype(np.uint8)


def symplectic_rows_product(M: np.ndarray, e: np.ndarray) -> np.ndarray:
    """M Lam e over GF(2) for any row set M (checks or logicals)."""
    return syndrome_of(M, e)


def random_pauli_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniformly random n-qubit Pauli as a [x | z] vector."""
    return codes_to_bits(rng.integers(0, 4, size=n))


def enumerate_pauli_bits(n: int) -> Iterable[np.ndarray]:
    """Yield all 4**n Pauli bit vectors, in base-4 counting order."""
    for idx in range(4**n):
        codes = [(idx // 4**q) % 4 for q in range(n)]
        yield codes_to_bits(np.array(codes))

"""Dense complex linear algebra on multi-qubit registers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Qubit 0 is the
most significant bit of a basis index everywhere in the package, so
``kron(a, b)`` places ``a`` on qubit 0.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

UNITARY_ATOL = 1e-10
HERMITIAN_ATOL = 1e-10

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULIS = {"I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of 2")
    return n


def _as_square(m, name="matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def kron(*ops: np.ndarray) -> np.ndarray:
    """Tensor product of square matrices, leftmost factor on the leading qubits."""
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in ops))


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol)


def is_hermitian(h: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= atol)


def _check_targets(targets: Sequence[int], total_qubits: int) -> list[int]:
    targets = [int(q) for q in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubit in {targets}")
    for q in targets:
        if not 0 <= q < total_qubits:
            raise ValueError(f"target qubit {q} out of range for {total_qubits} qubits")
    return targets


def embed(op: np.ndarray, targets: Sequence[int], total_qubits: int) -> np.ndarray:
    """Lift ``op`` to ``total_qubits`` qubits, acting on ``targets`` in order."""
    op = _as_square(op, "op")
    targets = _check_targets(targets, total_qubits)
    k = len(targets)
    if op.shape[0] != 2**k:
        raise ValueError(f"op of dim {op.shape[0]} does not act on {k} target qubits")
    rest = [q for q in range(total_qubits) if q not in targets]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    order = targets + rest
    perm = np.argsort(order)
    n = total_qubits
    full = full.reshape((2,) * (2 * n))
    full = full.transpose(list(perm) + [n + p for p in perm])
    return full.reshape(2**n, 2**n)


def apply_local(op: np.ndarray, targets: Sequence[int], total_qubits: int,
                state: np.ndarray) -> np.ndarray:
    """Return ``embed(op, targets, N) @ state`` without forming the embedding.

    ``state`` has shape ``(..., 2**N, cols)``; the qubit axis is the second to last.
    """
    k = len(targets)
    n = total_qubits
    lead = state.shape[:-2]
    cols = state.shape[-1]
    t = state.reshape(lead + (2,) * n + (cols,))
    nl = len(lead)
    axes = [nl + q for q in targets]
    t = np.moveaxis(t, axes, list(range(nl, nl + k)))
    moved_shape = t.shape
    t = t.reshape(lead + (2**k, -1))
    t = np.matmul(op, t)
    t = t.reshape(moved_shape)
    t = np.moveaxis(t, list(range(nl, nl + k)), axes)
    return t.reshape(state.shape)


def partial_trace(m: np.ndarray, keep: Sequence[int], total_qubits: int) -> np.ndarray:
    """Trace out every qubit not in ``keep``; kept qubits appear in ``keep`` order."""
    m = _as_square(m)
    keep = _check_targets(keep, total_qubits)
    n = total_qubits
    if m.shape[0] != 2**n:
        raise ValueError(f"matrix of dim {m.shape[0]} is not on {n} qubits")
    rest = [q for q in range(n) if q not in keep]
    t = m.reshape((2,) * (2 * n))
    t = t.transpose(keep + rest + [n + q for q in keep] + [n + q for q in rest])
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    return np.einsum("iaja->ij", t.reshape(dk, dr, dk, dr))


def expm_hermitian(h: np.ndarray, scale: complex) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h`` through its eigendecomposition."""
    h = _as_square(h, "h")
    tol = HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if not is_hermitian(h, tol):
        raise ValueError("expm_hermitian requires a Hermitian matrix")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(scale * w)) @ v.conj().T


def pauli_string(labels: str) -> np.ndarray:
    """Tensor product of Paulis, e.g. ``pauli_string("XZ") == kron(X, Z)``."""
    return kron(*(PAULIS[c] for c in labels))

"""Kraus channels, normalized Choi states and the overlap figure of merit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import UNITARY_ATOL

CHOI_ATOL = 1e-10
SWAP_TEST_SIMULATION_DIM = 16


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """A CPTP map ``rho -> sum_i K_i rho K_i^dagger``.

    ``kraus`` has shape ``(r, out_dim, in_dim)``. Completeness is checked on
    construction.
    """

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise ValueError(f"expected a nonempty stack of Kraus operators, got {k.shape}")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)
        err = completeness_error(k)
        if err > UNITARY_ATOL:
            raise ValueError(f"Kraus operators are not complete (error {err:.3g})")

    @property
    def in_dim(self) -> int:
        return self.kraus.shape[2]

    @property
    def out_dim(self) -> int:
        return self.kraus.shape[1]

    def __len__(self):
        return self.kraus.shape[0]


def completeness_error(kraus) -> float:
    """``max |sum_i K_i^dagger K_i - I|``."""
    k = np.asarray(kraus, dtype=complex)
    s = np.einsum("rji,rjk->ik", k.conj(), k)
    return float(np.max(np.abs(s - np.eye(k.shape[2]))))


def unitary_channel(u) -> KrausChannel:
    return KrausChannel(np.asarray(u, dtype=complex)[None])


def apply(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.in_dim, ch.in_dim):
        raise ValueError(f"state of shape {rho.shape} does not fit input dim {ch.in_dim}")
    return np.einsum("rij,jk,rlk->il", ch.kraus, rho, ch.kraus.conj())


@dataclass(frozen=True, eq=False)
class ChoiOperator:
    """Unit-trace Choi state, output system first and reference second."""

    matrix: np.ndarray
    in_dim: int
    out_dim: int

    @property
    def dim(self) -> int:
        return self.in_dim * self.out_dim

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def is_pure(self, atol: float = 1e-9) -> bool:
        return abs(self.purity() - 1.0) <= atol


def choi_of_channel(ch: KrausChannel) -> ChoiOperator:
    # |K>> = (K (x) I) sum_k |k>|k>, i.e. the row-major flattening of K
    vecs = ch.kraus.reshape(len(ch), -1)
    c = vecs.T @ vecs.conj() / ch.in_dim
    return ChoiOperator(c, ch.in_dim, ch.out_dim)


def choi_of_unitary(u) -> ChoiOperator:
    return choi_of_channel(unitary_channel(u))


def choi_overlap(c: ChoiOperator, c2: ChoiOperator) -> float:
    """``Tr(C C')``."""
    if (c.in_dim, c.out_dim) != (c2.in_dim, c2.out_dim):
        raise ValueError("Choi operators have different dimensions")
    return float(np.real(np.einsum("ij,ji->", c.matrix, c2.matrix)))


def entanglement_fidelity(u, kraus) -> float:
    """``sum_i |Tr(U^dagger M_i)|^2 / d^2``, equal to the overlap with the Choi of ``u``."""
    u = np.asarray(u, dtype=complex)
    k = kraus.kraus if isinstance(kraus, KrausChannel) else np.asarray(kraus, dtype=complex)
    if k.shape[1:] != u.shape:
        raise ValueError(f"Kraus shape {k.shape[1:]} does not match unitary {u.shape}")
    traces = np.einsum("ij,rij->r", u.conj(), k)
    return float(np.sum(np.abs(traces) ** 2) / u.shape[0] ** 2)


def swap_test_probability(c: ChoiOperator, c2: ChoiOperator) -> float:
    """Probability of the ``|+>`` outcome when SWAP-testing two Choi states.

    Small states (``dim <= 16``) are run through the test circuit: ancilla in
    ``|+>``, controlled-SWAP, measurement in the ``X`` basis. Larger states
    use the projector form ``Tr[(I + F)/2 (C (x) C')]`` contracted without
    building the tensor product.
    """
    if (c.in_dim, c.out_dim) != (c2.in_dim, c2.out_dim):
        raise ValueError("Choi operators have different dimensions")
    a, b = c.matrix, c2.matrix
    dim = a.shape[0]
    if dim > SWAP_TEST_SIMULATION_DIM:
        sym = np.trace(a) * np.trace(b) + np.einsum("ab,ba->", a, b)
        return float(np.real(sym) / 2)
    sys_dim = dim * dim
    swap = np.eye(sys_dim).reshape(dim, dim, dim, dim).transpose(0, 1, 3, 2)
    swap = swap.reshape(sys_dim, sys_dim)
    cswap = np.block([[np.eye(sys_dim), np.zeros((sys_dim, sys_dim))],
                      [np.zeros((sys_dim, sys_dim)), swap]])
    had = np.kron(np.array([[1, 1], [1, -1]]) / np.sqrt(2), np.eye(sys_dim))
    circuit = had @ cswap @ had
    rho = np.kron(np.diag([1.0, 0.0]), np.kron(a, b))
    out = circuit @ rho @ circuit.conj().T
    return float(np.real(np.trace(out[:sys_dim, :sys_dim])))


def compose(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    """Channel ``second o first``."""
    if second.in_dim != first.out_dim:
        raise ValueError("channel dimensions do not compose")
    k = np.einsum("aij,bjk->abik", second.kraus, first.kraus)
    return KrausChannel(k.reshape(-1, second.out_dim, first.in_dim))


def postcompose_unitary(ch: KrausChannel, v) -> KrausChannel:
    v = np.asarray(v, dtype=complex)
    return KrausChannel(np.matmul(v, ch.kraus))

"""Parameterized primitive gates and the n-qubit unitary templates built from them.

Every primitive is ``G(theta) = cos(theta) I - i sin(theta) P`` for a Pauli
generator ``P`` with ``P @ P = I``. This matches the displayed matrix forms
(``-i sin`` off the diagonal of ``RX`` and ``XX``), i.e. ``exp(-i theta P)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .linalg import PAULIS, embed

SINGLE_QUBIT_KINDS = ("RX", "RY", "RZ")
TWO_QUBIT_KINDS = ("XX", "YY", "ZZ")
KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS


def generator(kind: str) -> np.ndarray:
    """Pauli generator of a primitive gate on its own 1 or 2 qubits."""
    if kind not in KINDS:
        raise ValueError(f"unknown gate kind {kind!r}")
    p = PAULIS[kind[1]]
    return p if kind in SINGLE_QUBIT_KINDS else np.kron(p, p)


def primitive_matrix(kind: str, theta: float) -> np.ndarray:
    p = generator(kind)
    return np.cos(theta) * np.eye(p.shape[0], dtype=complex) - 1j * np.sin(theta) * p


@dataclass(frozen=True)
class PrimitiveGate:
    kind: str
    targets: tuple[int, ...]
    param_index: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = 1 if self.kind in SINGLE_QUBIT_KINDS else 2
        if len(self.targets) != want or len(set(self.targets)) != want:
            raise ValueError(f"{self.kind} needs {want} distinct targets, got {self.targets}")


@dataclass(frozen=True)
class GateTemplate:
    """An ordered list of primitives; the first gate acts first on states."""

    num_qubits: int
    gates: tuple[PrimitiveGate, ...]

    def __post_init__(self):
        indices = sorted(g.param_index for g in self.gates)
        if indices != list(range(len(self.gates))):
            raise ValueError("each parameter index must be used by exactly one gate")
        for g in self.gates:
            if max(g.targets) >= self.num_qubits:
                raise ValueError(f"gate {g} exceeds {self.num_qubits} qubits")

    @property
    def num_params(self) -> int:
        return len(self.gates)

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    @cached_property
    def generators(self) -> np.ndarray:
        """Embedded generators, indexed by parameter, shape ``(num_params, dim, dim)``."""
        out = np.empty((self.num_params, self.dim, self.dim), dtype=complex)
        for g in self.gates:
            out[g.param_index] = embed(generator(g.kind), g.targets, self.num_qubits)
        return out

    @cached_property
    def application_order(self) -> np.ndarray:
        """Parameter index of each gate, in the order the gates are applied."""
        return np.array([g.param_index for g in self.gates])

    @cached_property
    def ordered_generators(self) -> np.ndarray:
        return self.generators[self.application_order]

    @cached_property
    def ordered_generators_t(self) -> np.ndarray:
        return np.ascontiguousarray(self.ordered_generators.swapaxes(1, 2))

    def gate_matrices(self, theta) -> np.ndarray:
        """Embedded gate matrices in application order, shape ``(num_gates, dim, dim)``."""
        theta = np.asarray(theta, dtype=float)[self.application_order]
        eye = np.eye(self.dim, dtype=complex)
        return (np.cos(theta)[:, None, None] * eye
                - 1j * np.sin(theta)[:, None, None] * self.ordered_generators)


def realize(template: GateTemplate, theta) -> np.ndarray:
    """Unitary of ``template`` at parameters ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (template.num_params,):
        raise ValueError(
            f"template takes {template.num_params} parameters, got shape {theta.shape}")
    u = np.eye(template.dim, dtype=complex)
    for g in template.gate_matrices(theta):
        u = g @ u
    return u


def _euler(qubit: int, start: int) -> list[PrimitiveGate]:
    return [PrimitiveGate(k, (qubit,), start + i) for i, k in enumerate(SINGLE_QUBIT_KINDS)]


def _pair_block(i: int, j: int, start: int) -> list[PrimitiveGate]:
    gates = _euler(i, start) + _euler(j, start + 3)
    gates += [PrimitiveGate(k, (i, j), start + 6 + m) for m, k in enumerate(TWO_QUBIT_KINDS)]
    gates += _euler(i, start + 9) + _euler(j, start + 12)
    return gates


def two_qubit_template() -> GateTemplate:
    """Local Euler layers around an XX-YY-ZZ core: 15 parameters, KAK-complete."""
    return GateTemplate(2, tuple(_pair_block(0, 1, 0)))


def n_qubit_template(n: int) -> GateTemplate:
    """One two-qubit block per qubit pair in lexicographic order (Euler triple at n=1)."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n}")
    if n == 1:
        return GateTemplate(1, tuple(_euler(0, 0)))
    gates: list[PrimitiveGate] = []
    for i, j in combinations(range(n), 2):
        gates += _pair_block(i, j, len(gates))
    return GateTemplate(n, tuple(gates))


def template_num_params(n: int) -> int:
    return 3 if n == 1 else 15 * n * (n - 1) // 2

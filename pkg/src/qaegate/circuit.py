"""Isometry simulation of encoder/decoder circuits with exact shift evaluations.

A circuit acts on ``n`` client qubits followed by ``m`` server ancilla qubits.
Ancillas start in ``|0>`` and are discarded at the end, so the circuit's
isometry ``W (I (x) |0>)`` stacks the Kraus operators ``M_j = <j| W |0>`` of
the decoded channel. The overlap with a unitary target ``U`` is
``f = sum_j |Tr(U^dagger M_j)|^2 / d^2``.

Each parameter appears in exactly one gate ``G(t) = cos t I - i sin t P``, so
with every other gate held fixed ``Tr(U^dagger M_j)`` is ``cos t * a_j - i
sin t * b_j``. ``shift_differences`` computes ``a_j`` and ``b_j`` for every
parameter from one forward/backward sweep and evaluates ``f`` at
``theta +- s e_k`` exactly, without re-simulating the circuit per
coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gates import GateTemplate
from .linalg import apply_local, dagger


@dataclass(frozen=True)
class Step:
    """One operation: a parameterized block or the ``index``-th input gate."""

    kind: str  # "block" or "gate"
    index: int
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    n_client: int
    n_ancilla: int
    templates: tuple[GateTemplate, ...]
    steps: tuple[Step, ...]
    num_gates: int = 0

    @property
    def num_params(self) -> int:
        return sum(t.num_params for t in self.templates)

    @property
    def offsets(self) -> list[int]:
        out = [0]
        for t in self.templates:
            out.append(out[-1] + t.num_params)
        return out

    @property
    def total_qubits(self) -> int:
        return self.n_client + self.n_ancilla

    def _check(self, theta, gates):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got shape {theta.shape}")
        gates = [np.asarray(g, dtype=complex) for g in gates]
        if len(gates) != self.num_gates:
            raise ValueError(f"expected {self.num_gates} input gates, got {len(gates)}")
        return theta, gates

    def block_unitaries(self, theta) -> list[np.ndarray]:
        offs = self.offsets
        out = []
        for b, tpl in enumerate(self.templates):
            u = np.eye(tpl.dim, dtype=complex)
            for g in tpl.gate_matrices(theta[offs[b]:offs[b + 1]]):
                u = g @ u
            out.append(u)
        return out

    def _initial(self) -> np.ndarray:
        d, da = 2**self.n_client, 2**self.n_ancilla
        psi = np.zeros((d * da, d), dtype=complex)
        psi[np.arange(d) * da, np.arange(d)] = 1.0
        return psi

    def _op(self, step, blocks, gates):
        return blocks[step.index] if step.kind == "block" else gates[step.index]

    def kraus(self, theta, gates) -> np.ndarray:
        """Kraus operators ``M_j``, shape ``(2**m, 2**n, 2**n)``."""
        theta, gates = self._check(theta, gates)
        blocks = self.block_unitaries(theta)
        psi = self._initial()
        for step in self.steps:
            psi = apply_local(self._op(step, blocks, gates), step.qubits,
                              self.total_qubits, psi)
        d, da = 2**self.n_client, 2**self.n_ancilla
        return psi.reshape(d, da, d).transpose(1, 0, 2)

    def fidelity(self, theta, gates, target) -> float:
        k = self.kraus(theta, gates)
        target = np.asarray(target, dtype=complex)
        traces = np.einsum("ij,rij->r", target.conj(), k)
        return float(np.sum(np.abs(traces) ** 2) / target.shape[0] ** 2)

    def shift_differences(self, theta, gates, target, shift=np.pi / 4):
        """Return ``f(theta)`` and ``f(theta + s e_k) - f(theta - s e_k)`` for every ``k``."""
        theta, gates = self._check(theta, gates)
        target = np.asarray(target, dtype=complex)
        n, m = self.n_client, self.n_ancilla
        d, da, nq = 2**n, 2**m, n + m
        offs = self.offsets

        prefixes = []
        blocks = []
        for b, tpl in enumerate(self.templates):
            mats = tpl.gate_matrices(theta[offs[b]:offs[b + 1]])
            pre = np.empty((len(mats) + 1, tpl.dim, tpl.dim), dtype=complex)
            pre[0] = np.eye(tpl.dim)
            for k, g in enumerate(mats):
                pre[k + 1] = g @ pre[k]
            prefixes.append(pre)
            blocks.append(pre[-1])

        states = []
        psi = self._initial()
        for step in self.steps:
            states.append(psi)
            psi = apply_local(self._op(step, blocks, gates), step.qubits, nq, psi)

        # bra_j[(c, j'), c''] = U[c, c''] delta_{j j'}
        lam = np.zeros((da, d, da, d), dtype=complex)
        lam[np.arange(da), :, np.arange(da), :] = target
        lam = lam.reshape(da, d * da, d)
        v = np.einsum("rxc,xc->r", lam.conj(), psi)
        f = float(np.sum(np.abs(v) ** 2) / d**2)

        diffs = np.zeros(self.num_params)
        for s in range(len(self.steps) - 1, -1, -1):
            step = self.steps[s]
            op = self._op(step, blocks, gates)
            if step.kind == "block":
                env = _environment(states[s], lam, step.qubits, nq)
                i = step.index
                diffs[offs[i]:offs[i + 1]] = _block_shift_differences(
                    self.templates[i], theta[offs[i]:offs[i + 1]], prefixes[i], env,
                    shift) / d**2
            lam = apply_local(dagger(op), step.qubits, nq, lam)
        return f, diffs

    def gradient(self, theta, gates, target):
        """``f`` and its exact gradient from the ``pi/4`` shift rule."""
        return self.shift_differences(theta, gates, target, np.pi / 4)


def _environment(phi, lam, qubits, nq):
    """Matrices ``A_j`` with ``Tr(A_j B) = <lam_j| B_qubits |phi>`` for any block ``B``."""
    k = len(qubits)
    cols = phi.shape[-1]
    t = phi.reshape((2,) * nq + (cols,))
    t = np.moveaxis(t, list(qubits), list(range(k))).reshape(2**k, -1)
    r = lam.shape[0]
    u = lam.reshape((r,) + (2,) * nq + (cols,))
    u = np.moveaxis(u, [1 + q for q in qubits], list(range(1, k + 1))).reshape(r, 2**k, -1)
    return np.matmul(t, dagger(u))


def _block_shift_differences(tpl, theta, pre, env, shift):
    order = tpl.application_order
    gens_t = tpl.ordered_generators_t
    # B = S_k G_k P_k with P_k = pre[k], and S_k P_k = B P_{k+1}^dagger P_k.
    # Work with transposes so every batched product is on contiguous stacks.
    pre_t = np.ascontiguousarray(pre[:-1].swapaxes(1, 2))
    nxt = pre[1:].conj()
    around_t = pre_t @ nxt
    around_gen_t = pre_t @ (gens_t @ nxt)
    eb = np.matmul(env, pre[-1])
    r, dim = eb.shape[0], tpl.dim
    flat = eb.reshape(r, dim * dim).T
    a = around_t.reshape(-1, dim * dim) @ flat
    b = around_gen_t.reshape(-1, dim * dim) @ flat
    th = theta[order][:, None]
    plus = np.cos(th + shift) * a - 1j * np.sin(th + shift) * b
    minus = np.cos(th - shift) * a - 1j * np.sin(th - shift) * b
    d = np.sum(plus.real**2 + plus.imag**2 - minus.real**2 - minus.imag**2, axis=1)
    out = np.empty(len(order))
    out[order] = d
    return out


def template_circuit(template: GateTemplate) -> Circuit:
    """A single block on ``template.num_qubits`` qubits, for fitting a template to a target."""
    qubits = tuple(range(template.num_qubits))
    return Circuit(template.num_qubits, 0, (template,), (Step("block", 0, qubits),), 0)

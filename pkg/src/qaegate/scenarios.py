"""Encoder/decoder protocols for the basic, multi-round and gate-sequence settings.

Wire convention: the client's ``n`` qubits are ``T`` (the first ``a``,
transmitted to the server) followed by the memory ``C``. The server runs its
encoder blocks on ``T`` plus ``n - a`` ancilla qubits, which are the last
qubits of the encoder register and start in ``|0>``.

Parameters are one flat vector; encoder blocks come first, decoder blocks
after, each block an ``n_qubit_template(n)`` instance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .channels import (ChoiOperator, KrausChannel, choi_of_channel, choi_of_unitary,
                       choi_overlap)
from .circuit import Circuit, Step
from .gates import GateTemplate, n_qubit_template, realize
from .linalg import embed, is_unitary

KINDS = ("basic", "multiround", "sequence")
TARGETS = ("single", "repeated")
FORMAT_VERSION = "1"


class ModelFileError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioModel:
    """Shape of a compression protocol.

    ``rounds`` applies to ``"multiround"`` and ``length`` to ``"sequence"``.
    ``target`` picks what a multi-round protocol approximates: the input
    gate once (``"single"``) or applied ``rounds`` times (``"repeated"``).
    """

    kind: str
    n: int
    a: int
    rounds: int = 2
    length: int = 2
    target: str = "single"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario {self.kind!r}; choose from {KINDS}")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 1 <= self.a <= self.n:
            raise ValueError(f"need 1 <= a <= n, got a={self.a}, n={self.n}")
        if self.kind == "multiround" and self.rounds < 2:
            raise ValueError("a multi-round protocol needs rounds >= 2")
        if self.kind == "sequence" and self.length < 2:
            raise ValueError("a gate sequence needs length >= 2")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")

    @property
    def num_rounds(self) -> int:
        return self.rounds if self.kind == "multiround" else 1

    @property
    def num_gates(self) -> int:
        return self.length if self.kind == "sequence" else 1

    @property
    def oracle_uses(self) -> int:
        return {"basic": 1, "multiround": self.rounds, "sequence": self.length}[self.kind]

    @property
    def encoder_blocks(self) -> list[str]:
        if self.kind == "basic":
            return ["le", "re"]
        count = self.rounds if self.kind == "multiround" else self.length
        return [f"{side}{k}" for k in range(1, count + 1) for side in ("le", "re")]

    @property
    def decoder_blocks(self) -> list[str]:
        if self.kind == "basic":
            return ["ld", "rd"]
        if self.kind == "multiround":
            return [f"d{k}" for k in range(self.rounds + 1)]
        if self.length == 2:
            return ["ld", "md", "rd"]
        return ["ld"] + [f"md{k}" for k in range(1, self.length)] + ["rd"]

    @property
    def block_names(self) -> list[str]:
        return self.encoder_blocks + self.decoder_blocks

    @cached_property
    def template(self) -> GateTemplate:
        return n_qubit_template(self.n)

    @property
    def num_params(self) -> int:
        return len(self.block_names) * self.template.num_params

    def block_slices(self) -> dict[str, slice]:
        m = self.template.num_params
        return {name: slice(i * m, (i + 1) * m) for i, name in enumerate(self.block_names)}

    def split(self, theta) -> dict[str, np.ndarray]:
        theta = self.check_theta(theta)
        return {name: theta[s] for name, s in self.block_slices().items()}

    def join(self, blocks: dict) -> np.ndarray:
        missing = set(self.block_names) - set(blocks)
        extra = set(blocks) - set(self.block_names)
        if missing or extra:
            raise ValueError(f"block mismatch: missing {sorted(missing)}, unknown {sorted(extra)}")
        return np.concatenate([np.asarray(blocks[b], dtype=float) for b in self.block_names])

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.num_params,):
            raise ValueError(f"model takes {self.num_params} parameters, got shape {theta.shape}")
        return theta

    # wire layout
    @property
    def transmitted(self) -> tuple[int, ...]:
        return tuple(range(self.a))

    @property
    def client(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def ancilla(self, k: int = 1) -> tuple[int, ...]:
        """Server ancilla qubits; the gate sequence uses a fresh set per gate."""
        w = self.n - self.a
        start = self.n + (k - 1) * w if self.kind == "sequence" else self.n
        return tuple(range(start, start + w))

    @cached_property
    def circuit(self) -> Circuit:
        names = self.block_names
        idx = {name: i for i, name in enumerate(names)}
        w = self.n - self.a
        steps: list[Step] = []

        def encode(le, re, gate_index, k):
            wires = self.transmitted + self.ancilla(k)
            steps.extend([Step("block", idx[le], wires), Step("gate", gate_index, wires),
                          Step("block", idx[re], wires)])

        def decode(name):
            steps.append(Step("block", idx[name], self.client))

        if self.kind == "basic":
            decode("ld")
            encode("le", "re", 0, 1)
            decode("rd")
            n_anc = w
        elif self.kind == "multiround":
            decode("d0")
            for k in range(1, self.rounds + 1):
                encode(f"le{k}", f"re{k}", 0, 1)
                decode(f"d{k}")
            n_anc = w
        else:
            dec = self.decoder_blocks
            decode(dec[0])
            for k in range(1, self.length + 1):
                encode(f"le{k}", f"re{k}", k - 1, k)
                decode(dec[k])
            n_anc = w * self.length
        return Circuit(self.n, n_anc, (self.template,) * len(names), tuple(steps),
                       self.num_gates)


def _check_gates(m: ScenarioModel, gates) -> list[np.ndarray]:
    if isinstance(gates, np.ndarray) and gates.ndim == 2:
        gates = [gates]
    gates = [np.asarray(g, dtype=complex) for g in gates]
    if len(gates) != m.num_gates:
        raise ValueError(f"{m.kind} scenario takes {m.num_gates} gate(s), got {len(gates)}")
    d = 2**m.n
    for g in gates:
        if g.shape != (d, d):
            raise ValueError(f"gate of shape {g.shape} does not act on {m.n} qubits")
        if not is_unitary(g, 1e-8):
            raise ValueError("input gate is not unitary")
    return gates


def encoder_unitaries(m: ScenarioModel, theta) -> dict[str, np.ndarray]:
    """Server-side unitaries. They depend on the parameters and the shape only."""
    blocks = m.split(theta)
    return {name: realize(m.template, blocks[name]) for name in m.encoder_blocks}


def decoder_unitaries(m: ScenarioModel, theta) -> dict[str, np.ndarray]:
    blocks = m.split(theta)
    return {name: realize(m.template, blocks[name]) for name in m.decoder_blocks}


def _encoded_kraus(u_le, u_x, u_re, a, n):
    e = u_re @ u_x @ u_le
    da, dw = 2**a, 2 ** (n - a)
    # K_i = (I (x) <i|) E (I (x) |0>)
    return e.reshape(da, dw, da, dw)[:, :, :, 0].transpose(1, 0, 2)


def encoded_channel(m: ScenarioModel, theta, u_x, step: int = 1) -> KrausChannel:
    """The ``a``-qubit channel the server offers for its ``step``-th encoder.

    For the multi-round protocol the server memory is traced out here, so
    this is the marginal channel of a single round.
    """
    (u_x,) = _check_gates(ScenarioModel("basic", m.n, m.a), [u_x])
    enc = encoder_unitaries(m, theta)
    le, re = ("le", "re") if m.kind == "basic" else (f"le{step}", f"re{step}")
    return KrausChannel(_encoded_kraus(enc[le], u_x, enc[re], m.a, m.n))


def decoded_channel(m: ScenarioModel, theta, gates) -> KrausChannel:
    """The ``n``-qubit channel the client ends up applying."""
    gates = _check_gates(m, gates)
    enc = encoder_unitaries(m, theta)
    dec = decoder_unitaries(m, theta)
    w = m.n - m.a
    mem = np.eye(2**w)

    if m.kind == "basic":
        k = _encoded_kraus(enc["le"], gates[0], enc["re"], m.a, m.n)
        return KrausChannel(np.stack([dec["rd"] @ np.kron(ki, mem) @ dec["ld"] for ki in k]))

    if m.kind == "sequence":
        names = m.decoder_blocks
        kraus = dec[names[0]][None]
        for step in range(1, m.length + 1):
            k = _encoded_kraus(enc[f"le{step}"], gates[step - 1], enc[f"re{step}"], m.a, m.n)
            lifted = np.stack([dec[names[step]] @ np.kron(ki, mem) for ki in k])
            kraus = np.einsum("aij,bjk->baik", lifted, kraus).reshape(-1, 2**m.n, 2**m.n)
        return KrausChannel(kraus)

    # multi-round: registers T, C (client memory), S (server memory)
    total = 2 * m.n - m.a
    client = list(range(m.n))
    server = list(range(m.a)) + list(range(m.n, total))
    w_full = embed(dec["d0"], client, total)
    for step in range(1, m.rounds + 1):
        e = enc[f"re{step}"] @ gates[0] @ enc[f"le{step}"]
        w_full = embed(e, server, total) @ w_full
        w_full = embed(dec[f"d{step}"], client, total) @ w_full
    d, dw = 2**m.n, 2**w
    return KrausChannel(w_full.reshape(d, dw, d, dw)[:, :, :, 0].transpose(1, 0, 2))


def target_unitary(m: ScenarioModel, gates) -> np.ndarray:
    gates = _check_gates(m, gates)
    if m.kind == "multiround" and m.target == "repeated":
        return np.linalg.matrix_power(gates[0], m.rounds)
    u = np.eye(2**m.n, dtype=complex)
    for g in gates:
        u = g @ u
    return u


def target_choi(m: ScenarioModel, gates) -> ChoiOperator:
    return choi_of_unitary(target_unitary(m, gates))


def loss(m: ScenarioModel, theta, gates) -> float:
    """``1 - Tr(C C')`` evaluated through explicit Kraus and Choi matrices."""
    c = target_choi(m, gates)
    c2 = choi_of_channel(decoded_channel(m, theta, gates))
    return 1.0 - choi_overlap(c, c2)


def fidelity(m: ScenarioModel, theta, gates) -> float:
    """Choi overlap through the isometry simulator; equals ``1 - loss``."""
    gates = _check_gates(m, gates)
    return m.circuit.fidelity(m.check_theta(theta), gates, target_unitary(m, gates))


# model files

def model_to_dict(m: ScenarioModel, theta, **provenance) -> dict:
    out = {"version": FORMAT_VERSION, "kind": m.kind, "n": m.n, "a": m.a}
    if m.kind == "multiround":
        out["rounds"] = m.rounds
        out["target"] = m.target
    if m.kind == "sequence":
        out["length"] = m.length
    out["blocks"] = {name: [float(x) for x in v] for name, v in m.split(theta).items()}
    out.update(provenance)
    return out


_MODEL_KEYS = {"version", "kind", "n", "a", "rounds", "length", "target", "blocks",
               "command_line", "seed"}


def model_from_dict(obj) -> tuple[ScenarioModel, np.ndarray]:
    if not isinstance(obj, dict):
        raise ModelFileError("model file must hold a JSON object")
    unknown = set(obj) - _MODEL_KEYS
    if unknown:
        raise ModelFileError(f"unknown field {sorted(unknown)[0]!r} in model")
    if obj.get("version") != FORMAT_VERSION:
        raise ModelFileError(f"unsupported model version {obj.get('version')!r}")
    try:
        kw = {"kind": obj["kind"], "n": int(obj["n"]), "a": int(obj["a"])}
        for key in ("rounds", "length"):
            if key in obj:
                kw[key] = int(obj[key])
        if "target" in obj:
            kw["target"] = obj["target"]
        m = ScenarioModel(**kw)
        blocks = obj["blocks"]
        if not isinstance(blocks, dict):
            raise ModelFileError("blocks must be an object")
        for name, values in blocks.items():
            if len(values) != m.template.num_params:
                raise ModelFileError(
                    f"block {name!r} has {len(values)} values, expected {m.template.num_params}")
        theta = m.join(blocks)
    except KeyError as e:
        raise ModelFileError(f"missing field {e.args[0]!r} in model") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, ModelFileError):
            raise
        raise ModelFileError(f"malformed model: {e}") from None
    return m, theta


def save_model(path, m: ScenarioModel, theta, **provenance) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m, theta, **provenance), indent=2) + "\n",
                          encoding="utf-8")


def load_model(path) -> tuple[ScenarioModel, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise ModelFileError(f"model file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFileError(f"cannot parse {path}: {e}") from None
    return model_from_dict(obj)

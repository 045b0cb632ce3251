import inspect
import json

import numpy as np
import pytest

from qaegate.channels import choi_of_channel, choi_of_unitary, choi_overlap, completeness_error
from qaegate.gates import realize
from qaegate.heisenberg import GateSample, gates, xxx_family
from qaegate.linalg import I2, SIGMA_X, SIGMA_Z
from qaegate.scenarios import (ModelFileError, ScenarioModel, decoded_channel, encoded_channel,
                               encoder_unitaries, fidelity, load_model, loss, model_to_dict,
                               save_model, target_choi, target_unitary)

from conftest import haar

MODELS = [
    ScenarioModel("basic", 2, 1), ScenarioModel("basic", 3, 2), ScenarioModel("basic", 3, 1),
    ScenarioModel("multiround", 2, 1), ScenarioModel("multiround", 3, 1),
    ScenarioModel("multiround", 2, 1, rounds=3), ScenarioModel("multiround", 3, 2),
    ScenarioModel("sequence", 2, 1), ScenarioModel("sequence", 3, 2),
    ScenarioModel("sequence", 2, 1, length=3),
]


def draw(m, rng):
    theta = rng.uniform(-np.pi, np.pi, m.num_params)
    return theta, [haar(2**m.n, rng) for _ in range(m.num_gates)]


def engine_choi(m, theta, gs):
    k = m.circuit.kraus(theta, gs)
    vecs = k.reshape(len(k), -1)
    return vecs.T @ vecs.conj() / 2**m.n


def test_validation():
    with pytest.raises(ValueError):
        ScenarioModel("basic", 2, 3)
    with pytest.raises(ValueError):
        ScenarioModel("multiround", 2, 1, rounds=1)
    with pytest.raises(ValueError):
        ScenarioModel("teleport", 2, 1)


def test_block_names_and_counts():
    assert ScenarioModel("basic", 2, 1).block_names == ["le", "re", "ld", "rd"]
    assert ScenarioModel("multiround", 2, 1).block_names == \
        ["le1", "re1", "le2", "re2", "d0", "d1", "d2"]
    assert ScenarioModel("sequence", 2, 1).block_names == \
        ["le1", "re1", "le2", "re2", "ld", "md", "rd"]
    for m in MODELS:
        assert m.num_params == len(m.block_names) * 15 * m.n * (m.n - 1) // 2


def test_encoded_channel_identity():
    m = ScenarioModel("basic", 2, 1)
    ch = encoded_channel(m, np.zeros(m.num_params), np.eye(4))
    assert np.allclose(ch.kraus[0], I2)
    assert np.allclose(ch.kraus[1], 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_exact_recovery_at_full_width(rng, n):
    m = ScenarioModel("basic", n, n)
    u = haar(2**n, rng)
    ch = decoded_channel(m, np.zeros(m.num_params), [u])
    assert len(ch) == 1 and np.allclose(ch.kraus[0], u)
    assert abs(loss(m, np.zeros(m.num_params), [u])) < 1e-10


def test_transmitted_line_is_first_qubit():
    m = ScenarioModel("basic", 2, 1)
    zero = np.zeros(m.num_params)
    assert abs(fidelity(m, zero, [np.kron(SIGMA_X, I2)]) - 1) < 1e-12
    # a gate on the ancilla line is discarded with it
    assert abs(fidelity(m, zero, [np.kron(I2, SIGMA_X)])) < 1e-12
    assert m.transmitted == (0,) and m.client == (0, 1) and m.ancilla() == (2,)


def test_target_choi_examples():
    seq = ScenarioModel("sequence", 2, 1)
    bell = choi_of_unitary(np.eye(4)).matrix
    assert np.allclose(target_choi(ScenarioModel("basic", 2, 1), [np.eye(4)]).matrix, bell)
    assert np.allclose(target_choi(seq, [np.eye(4), np.eye(4)]).matrix, bell)
    x, z = np.kron(SIGMA_X, I2), np.kron(SIGMA_Z, I2)
    assert np.allclose(target_choi(seq, [x, z]).matrix,
                       choi_of_unitary(np.kron(SIGMA_Z @ SIGMA_X, I2)).matrix)


def test_multiround_targets(rng):
    u = haar(4, rng)
    assert np.allclose(target_unitary(ScenarioModel("multiround", 2, 1), [u]), u)
    rep = ScenarioModel("multiround", 2, 1, rounds=3, target="repeated")
    assert np.allclose(target_unitary(rep, [u]), u @ u @ u)


def test_orthogonal_target_gives_unit_loss():
    m = ScenarioModel("basic", 1, 1)
    ch = decoded_channel(m, np.zeros(m.num_params), [I2])
    assert abs(1 - choi_overlap(choi_of_unitary(SIGMA_X), choi_of_channel(ch)) - 1) < 1e-12


@pytest.mark.parametrize("m", MODELS, ids=str)
def test_completeness_and_loss_range(rng, m):
    for _ in range(5):
        theta, gs = draw(m, rng)
        ch = decoded_channel(m, theta, gs)
        assert completeness_error(ch.kraus) <= 1e-10
        assert 0 <= loss(m, theta, gs) <= 1


@pytest.mark.parametrize("m", MODELS, ids=str)
def test_engine_matches_reference(rng, m):
    for _ in range(3):
        theta, gs = draw(m, rng)
        ref = choi_of_channel(decoded_channel(m, theta, gs)).matrix
        assert np.allclose(engine_choi(m, theta, gs), ref, atol=1e-12)
        assert abs(fidelity(m, theta, gs) - (1 - loss(m, theta, gs))) < 1e-12


@pytest.mark.parametrize("m", MODELS, ids=str)
def test_gate_use_count(rng, m):
    # scaling every input gate by a phase scales each Kraus operator by one
    # factor of it per use
    theta, gs = draw(m, rng)
    phase = np.exp(0.7j)
    base = decoded_channel(m, theta, gs).kraus
    shifted = decoded_channel(m, theta, [phase * g for g in gs]).kraus
    uses = m.oracle_uses
    assert uses == (m.rounds if m.kind == "multiround" else m.num_gates)
    assert np.allclose(shifted, phase**uses * base, atol=1e-12)
    engine = m.circuit.kraus(theta, [phase * g for g in gs])
    assert np.allclose(engine, phase**uses * m.circuit.kraus(theta, gs), atol=1e-12)
    assert sum(s.kind == "gate" for s in m.circuit.steps) == uses


def test_encoder_never_sees_the_gate(rng):
    assert list(inspect.signature(encoder_unitaries).parameters) == ["m", "theta"]
    m = ScenarioModel("basic", 3, 1)
    theta = rng.uniform(-np.pi, np.pi, m.num_params)
    first = encoder_unitaries(m, theta)
    encoded_channel(m, theta, haar(8, rng))
    second = encoder_unitaries(m, theta)
    for name in first:
        assert first[name].tobytes() == second[name].tobytes()
        assert first[name].tobytes() == realize(m.template, m.split(theta)[name]).tobytes()
    # the encoder's Kraus operators depend on the gate only through U_x itself
    u1, u2 = haar(8, rng), haar(8, rng)
    k1 = encoded_channel(m, theta, u1).kraus
    k2 = encoded_channel(m, theta, u2).kraus
    assert not np.allclose(k1, k2)


def test_encoded_channel_is_a_channel(rng):
    for m in (ScenarioModel("basic", 3, 1), ScenarioModel("multiround", 3, 2)):
        theta, gs = draw(m, rng)
        ch = encoded_channel(m, theta, gs[0])
        assert ch.in_dim == ch.out_dim == 2**m.a and len(ch) == 2 ** (m.n - m.a)


def test_heisenberg_inputs_accepted():
    m = ScenarioModel("basic", 2, 1)
    u = gates([GateSample(xxx_family(2), 1.3)])
    assert 0 <= fidelity(m, np.zeros(m.num_params), u) <= 1


def test_rejects_bad_gates():
    m = ScenarioModel("basic", 2, 1)
    with pytest.raises(ValueError):
        fidelity(m, np.zeros(m.num_params), [np.ones((4, 4))])
    with pytest.raises(ValueError):
        fidelity(m, np.zeros(m.num_params), [np.eye(8)])
    with pytest.raises(ValueError):
        decoded_channel(ScenarioModel("sequence", 2, 1), np.zeros(105), [np.eye(4)])


@pytest.mark.parametrize("m", MODELS[:1] + MODELS[3:4] + MODELS[7:8], ids=str)
def test_model_round_trip(tmp_path, rng, m):
    theta = rng.uniform(-np.pi, np.pi, m.num_params)
    save_model(tmp_path / "m.json", m, theta, seed=3, command_line="x")
    back, th = load_model(tmp_path / "m.json")
    assert back == m and np.array_equal(th, theta)


def test_model_file_errors(tmp_path):
    m = ScenarioModel("basic", 2, 1)
    obj = model_to_dict(m, np.zeros(m.num_params))
    p = tmp_path / "m.json"
    for mutate, msg in [(lambda o: o.update(extra=1), "extra"),
                        (lambda o: o.update(version="9"), "version"),
                        (lambda o: o["blocks"]["le"].pop(), "le"),
                        (lambda o: o.pop("n"), "n")]:
        bad = json.loads(json.dumps(obj))
        mutate(bad)
        p.write_text(json.dumps(bad))
        with pytest.raises(ModelFileError, match=msg):
            load_model(p)
    p.write_text("[1, 2")
    with pytest.raises(ModelFileError):
        load_model(p)

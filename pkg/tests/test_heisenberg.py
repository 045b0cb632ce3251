import json

import numpy as np
import pytest

from qaegate.heisenberg import (DEFAULT_T_RANGE, DatasetError, GateSample, HeisenbergFamily,
                                dataset_to_dict, gate, gates, hamiltonian, load_dataset,
                                sample_dataset, save_dataset, xxx_family, xxz_family)
from qaegate.linalg import I2, SIGMA_X, SIGMA_Y, SIGMA_Z, is_unitary


def chain_term(ops_at, n):
    """Explicit Kronecker chain with ``ops_at[q]`` on qubit q and identity elsewhere."""
    out = np.eye(1)
    for q in range(n):
        out = np.kron(out, ops_at.get(q, I2))
    return out


def brute_force_hamiltonian(n, jx, jy, jz, h):
    H = np.zeros((2**n, 2**n), dtype=complex)
    for j, p in ((jx, SIGMA_X), (jy, SIGMA_Y), (jz, SIGMA_Z)):
        for q in range(n - 1):
            H += -0.5 * j * chain_term({q: p, q + 1: p}, n)
    for q in range(n):
        H += -0.5 * h * chain_term({q: SIGMA_Z}, n)
    return H


def test_single_spin():
    assert np.allclose(hamiltonian(HeisenbergFamily(1, h=0.5)), -0.25 * SIGMA_Z)


def test_field_only():
    H = hamiltonian(HeisenbergFamily(2, 0, 0, 0, 1))
    assert np.allclose(H, -0.5 * (np.kron(SIGMA_Z, I2) + np.kron(I2, SIGMA_Z)))


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("preset", [xxx_family, xxz_family])
def test_hamiltonian_matches_pauli_sum(n, preset):
    f = preset(n)
    got = hamiltonian(f)
    assert np.allclose(got, brute_force_hamiltonian(n, f.jx, f.jy, f.jz, f.h), atol=1e-14)
    assert np.allclose(got, got.conj().T, atol=1e-12)


def test_presets():
    assert (xxx_family(2).jx, xxx_family(2).jz, xxx_family(2).h) == (0.1, 0.1, 0.5)
    assert (xxz_family(2).jx, xxz_family(2).jy, xxz_family(2).jz) == (0.1, 0.1, 0.5)


def test_gate_examples():
    f = HeisenbergFamily(1, h=0.5)
    assert np.allclose(gate(GateSample(f, 0.0)), I2)
    want = np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 4)])
    assert np.allclose(gate(GateSample(f, np.pi)), want)


def test_gates_unitary_and_commute(rng):
    f = xxx_family(3)
    H = hamiltonian(f)
    samples = [GateSample(f, t) for t in rng.uniform(0, 10, 5)]
    batch = gates(samples)
    for s, u in zip(samples, batch):
        assert is_unitary(u, 1e-9)
        assert np.allclose(u @ H - H @ u, 0, atol=1e-9)
        assert np.allclose(u, gate(s))


def test_family_validation():
    with pytest.raises(ValueError):
        HeisenbergFamily(0)
    with pytest.raises(ValueError):
        HeisenbergFamily(2, jx=float("nan"))


def test_sample_dataset_sizes_and_range():
    ds = sample_dataset(xxx_family(2), seed=1)
    assert (len(ds.train), len(ds.test)) == (50, 10)
    ts = [s.t for s in ds.train + ds.test]
    assert all(DEFAULT_T_RANGE[0] <= t < DEFAULT_T_RANGE[1] for t in ts)
    assert len(set(ts)) == 60


def test_sample_dataset_deterministic():
    a = sample_dataset(xxx_family(2), seed=7)
    b = sample_dataset(xxx_family(2), seed=7)
    assert json.dumps(dataset_to_dict(a)) == json.dumps(dataset_to_dict(b))
    assert a != sample_dataset(xxx_family(2), seed=8)


def test_empty_range():
    with pytest.raises(ValueError, match="empty range"):
        sample_dataset(xxx_family(2), t_range=(5, 5))


def test_round_trip(tmp_path):
    ds = sample_dataset(xxz_family(3), 4, 2, (0.0, 1.5), seed=3)
    path = tmp_path / "d.json"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert back == ds
    assert [s.t for s in back.train] == [s.t for s in ds.train]


def _write(tmp_path, obj):
    p = tmp_path / "d.json"
    p.write_text(json.dumps(obj))
    return p


def test_unknown_record_field(tmp_path):
    obj = dataset_to_dict(sample_dataset(xxx_family(2), 2, 1, seed=0))
    obj["train"][0]["weight"] = 1.0
    with pytest.raises(DatasetError, match="weight"):
        load_dataset(_write(tmp_path, obj))


def test_version_mismatch(tmp_path):
    obj = dataset_to_dict(sample_dataset(xxx_family(2), 2, 1, seed=0))
    obj["version"] = "2"
    with pytest.raises(DatasetError, match="version"):
        load_dataset(_write(tmp_path, obj))


def test_missing_and_garbled_files(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(DatasetError):
        load_dataset(bad)

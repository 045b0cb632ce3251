import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from qaegate.channels import (KrausChannel, choi_of_channel, choi_of_unitary, choi_overlap,
                              completeness_error, swap_test_probability)
from qaegate.gates import n_qubit_template, realize
from qaegate.linalg import embed, is_unitary, partial_trace
from qaegate.scenarios import ScenarioModel, decoded_channel, fidelity

from conftest import haar, random_kraus

seeds = st.integers(0, 2**32 - 1)
angles = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_realize_unitary(seed, n):
    rng = np.random.default_rng(seed)
    tpl = n_qubit_template(n)
    assert is_unitary(realize(tpl, rng.uniform(-10, 10, tpl.num_params)), 1e-10)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([2, 4]), st.integers(1, 4))
def test_overlap_range_and_swap_relation(seed, d, rank):
    rng = np.random.default_rng(seed)
    c = choi_of_unitary(haar(d, rng))
    c2 = choi_of_channel(KrausChannel(random_kraus(d, d, rank, rng)))
    f = choi_overlap(c, c2)
    assert -1e-12 <= f <= 1 + 1e-12
    assert abs(f - (2 * swap_test_probability(c, c2) - 1)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from(["basic", "multiround", "sequence"]), st.integers(1, 2))
def test_decoded_channel_valid(seed, kind, a):
    rng = np.random.default_rng(seed)
    m = ScenarioModel(kind, 2, a)
    theta = rng.uniform(-np.pi, np.pi, m.num_params)
    gs = [haar(4, rng) for _ in range(m.num_gates)]
    assert completeness_error(decoded_channel(m, theta, gs).kraus) <= 1e-10
    assert -1e-12 <= fidelity(m, theta, gs) <= 1 + 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds, st.permutations([0, 1, 2]))
def test_partial_trace_preserves_trace(seed, order):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = a @ a.conj().T
    assert np.isclose(np.trace(partial_trace(rho, order[:2], 3)), np.trace(rho))
    u = haar(2, rng)
    big = embed(u, [order[0]], 3)
    assert np.allclose(big.conj().T @ big, np.eye(8))

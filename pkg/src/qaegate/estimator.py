"""scikit-learn style wrapper around the scenario models and the SGD trainer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_gate_batch, qubits_of
from .channels import choi_of_channel
from .scenarios import ScenarioModel, decoded_channel, target_unitary
from .training import TrainConfig, train


class QAEGate(BaseEstimator):
    """Learn an encoder/decoder pair that compresses a family of gates.

    ``X`` holds sample gates, shape ``(samples, d, d)``, or
    ``(samples, length, d, d)`` for the sequence scenario. ``y`` is ignored:
    the target of each sample is determined by its gates.

    Parameters
    ----------
    scenario : {"basic", "multiround", "sequence"}
    n_transmitted : int
        Qubits sent to the server per round.
    rounds, length, target
        Passed to ``ScenarioModel``.
    learning_rate, max_iter, tol, epoch_size, gradient, fd_step, init, grad_norm
        SGD settings, see ``TrainConfig``. ``tol`` is the epoch-mean loss
        at which training stops.
    random_state : int
        Seeds both the initial parameters and the sample order.
    """

    def __init__(self, scenario="basic", n_transmitted=1, rounds=2, length=2,
                 target="single", learning_rate=0.05, max_iter=20_000, tol=1e-3,
                 epoch_size=None, gradient="parameter-shift", fd_step=1e-5,
                 init="random", grad_norm="full", random_state=0):
        self.scenario = scenario
        self.n_transmitted = n_transmitted
        self.rounds = rounds
        self.length = length
        self.target = target
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol
        self.epoch_size = epoch_size
        self.gradient = gradient
        self.fd_step = fd_step
        self.init = init
        self.grad_norm = grad_norm
        self.random_state = random_state

    def _num_gates(self):
        return self.length if self.scenario == "sequence" else 1

    def _model(self, n):
        return ScenarioModel(self.scenario, n, self.n_transmitted, self.rounds,
                             self.length, self.target)

    def fit(self, X, y=None, eval_set=None, theta0=None):
        X = check_gate_batch(X, self._num_gates())
        model = self._model(qubits_of(X))
        test = None
        if eval_set is not None:
            test = check_gate_batch(eval_set, self._num_gates())
            if test.shape[-1] != X.shape[-1]:
                raise ValueError("eval_set gates act on a different number of qubits")
        config = TrainConfig(max_iters=self.max_iter, learning_rate=self.learning_rate,
                             loss_threshold=self.tol, seed=self.random_state,
                             epoch_size=self.epoch_size, gradient_mode=self.gradient,
                             fd_step=self.fd_step, init=self.init, grad_norm=self.grad_norm)
        self.theta_, self.record_ = train(model, X, config, test, theta0)
        self.model_ = model
        self.n_qubits_ = model.n
        self.n_iter_ = self.record_.iterations
        return self

    def _checked(self, X):
        check_is_fitted(self, "theta_")
        X = check_gate_batch(X, self.model_.num_gates)
        if qubits_of(X) != self.n_qubits_:
            raise ValueError(
                f"model was fitted on {self.n_qubits_}-qubit gates, got {qubits_of(X)} qubits")
        return X

    def score_samples(self, X) -> np.ndarray:
        """Choi overlap between decoded channel and target, per sample."""
        X = self._checked(X)
        circ = self.model_.circuit
        return np.array([circ.fidelity(self.theta_, list(s), target_unitary(self.model_, s))
                         for s in X])

    def score(self, X, y=None) -> float:
        return float(np.mean(self.score_samples(X)))

    def predict(self, X) -> list:
        """Decoded channels, one ``KrausChannel`` per sample."""
        X = self._checked(X)
        return [decoded_channel(self.model_, self.theta_, list(s)) for s in X]

    def transform(self, X) -> np.ndarray:
        """Choi matrices of the decoded channels, shape ``(samples, d*d, d*d)``."""
        return np.stack([choi_of_channel(ch).matrix for ch in self.predict(X)])

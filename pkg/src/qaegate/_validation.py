"""Input checks shared by the estimator and the command line."""

from __future__ import annotations

import numpy as np

from .linalg import is_unitary


def check_gate_batch(X, num_gates: int = 1, atol: float = 1e-8) -> np.ndarray:
    """Coerce ``X`` to a ``(samples, num_gates, d, d)`` stack of unitaries.

    With ``num_gates == 1`` a plain ``(samples, d, d)`` array is accepted.
    """
    X = np.asarray(X, dtype=complex)
    if num_gates == 1 and X.ndim == 3:
        X = X[:, None]
    if X.ndim != 4 or X.shape[1] != num_gates:
        raise ValueError(
            f"expected gates of shape (samples, {num_gates}, d, d), got {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("no gate samples given")
    d = X.shape[-1]
    if X.shape[-2] != d or d < 2 or d & (d - 1):
        raise ValueError(f"gates must be square with a power-of-two size, got {X.shape[-2:]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("gates contain NaN or inf")
    for i, sample in enumerate(X):
        for g in sample:
            if not is_unitary(g, atol):
                raise ValueError(f"sample {i} is not unitary")
    return X


def qubits_of(X: np.ndarray) -> int:
    return int(X.shape[-1]).bit_length() - 1

"""Sampled checks of the overlap's smoothness and of the SGD convergence budget."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import product

import numpy as np

from .scenarios import ScenarioModel, target_unitary
from .training import TrainingRecord, _as_samples

H_MAX = 1.0
BOUND_D2 = 4 * H_MAX**2
BOUND_D3 = 8 * H_MAX**3


@dataclass
class SmoothnessReport:
    samples: int
    max_abs_d2: float
    bound_d2: float
    max_abs_d3: float
    bound_d3: float
    violations: int

    def to_dict(self) -> dict:
        return asdict(self)


def mixed_partial(fun, theta, coords, step) -> float:
    """Central finite difference of ``fun`` along the coordinates in ``coords``.

    Repeated coordinates are allowed, e.g. ``(j, j)`` gives a pure second
    derivative.
    """
    theta = np.asarray(theta, dtype=float)
    total = 0.0
    for signs in product((1, -1), repeat=len(coords)):
        x = theta.copy()
        for s, c in zip(signs, coords):
            x[c] += s * step
        total += np.prod(signs) * fun(x)
    return total / (2 * step) ** len(coords)


def check_second_order(model: ScenarioModel, gates, trials: int = 200, seed: int = 0,
                       third_trials: int | None = None, step2: float = 1e-3,
                       step3: float = 1e-2, slack: float = 1e-2,
                       slack3: float | None = None) -> SmoothnessReport:
    """Sample second and third partials of the overlap at random parameters.

    A sample violates the bound when its magnitude exceeds ``4`` (second
    order) by more than ``slack`` or ``8`` (third order) by more than
    ``slack3`` (default ``slack``).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    third_trials = trials if third_trials is None else third_trials
    samples = _as_samples(model, gates)
    if not samples:
        raise ValueError("need at least one input gate sample")
    targets = [target_unitary(model, s) for s in samples]
    circ = model.circuit
    rng = np.random.default_rng(seed)
    p = model.num_params

    def draw(order):
        i = int(rng.integers(len(samples)))
        theta = rng.uniform(-np.pi, np.pi, p)
        coords = tuple(int(c) for c in rng.integers(p, size=order))
        return (lambda th: circ.fidelity(th, samples[i], targets[i])), theta, coords

    d2 = [abs(mixed_partial(*draw(2), step2)) for _ in range(trials)]
    d3 = [abs(mixed_partial(*draw(3), step3)) for _ in range(third_trials)]
    slack3 = slack if slack3 is None else slack3
    violations = sum(x > BOUND_D2 + slack for x in d2) + sum(x > BOUND_D3 + slack3 for x in d3)
    return SmoothnessReport(trials + third_trials, max(d2), BOUND_D2,
                            max(d3, default=0.0), BOUND_D3, int(violations))


def convergence_budget(record: TrainingRecord, epsilon: float) -> dict:
    """Locate the first epoch whose gradient statistic is below ``epsilon**2``.

    The iteration count at that epoch is compared with ``4 dim(theta) /
    epsilon**4``. A run that never meets the criterion is flagged, not
    rejected.
    """
    budget = 4 * record.num_params / epsilon**4
    hit = next((r for r in record.rows if r.grad_norm_sq <= epsilon**2), None)
    report = {
        "epsilon": epsilon,
        "threshold": epsilon**2,
        "budget_iterations": budget,
        "met": hit is not None,
        "first_epoch": None,
        "iterations": None,
        "budget_ratio": None,
        "within_budget": False,
    }
    if hit is not None:
        report.update(first_epoch=hit.epoch, iterations=hit.iterations,
                      budget_ratio=hit.iterations / budget,
                      within_budget=hit.iterations <= budget)
    return report

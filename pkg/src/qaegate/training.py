"""Stochastic gradient descent on the Choi-overlap loss."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .circuit import Circuit, template_circuit
from .gates import GateTemplate
from .scenarios import ScenarioModel, target_unitary

logger = logging.getLogger(__name__)

GRADIENT_MODES = ("parameter-shift", "finite-difference")
CURVE_HEADER = ["epoch", "train_overlap", "test_overlap", "grad_norm_sq", "seconds"]


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """SGD settings.

    Training stops once ``max_iters`` updates have been made or the mean
    loss over the last epoch drops to ``loss_threshold``. ``grad_norm``
    selects what the curve reports: the full training-set gradient at the
    end of each epoch (``"full"``) or the mean squared norm of the
    per-iteration stochastic gradients (``"stochastic"``, no extra cost).
    """

    max_iters: int = 20_000
    learning_rate: float = 0.05
    loss_threshold: float = 1e-3
    seed: int = 0
    epoch_size: int | None = None
    gradient_mode: str = "parameter-shift"
    fd_step: float = 1e-5
    init: str = "random"
    grad_norm: str = "full"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0 < self.loss_threshold < 1:
            raise ValueError("loss_threshold must lie in (0, 1)")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.init not in ("random", "zero"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.grad_norm not in ("full", "stochastic"):
            raise ValueError(f"unknown grad_norm {self.grad_norm!r}")
        if self.epoch_size is not None and self.epoch_size < 1:
            raise ValueError("epoch_size must be positive")


@dataclass
class EpochRow:
    epoch: int
    train_overlap: float
    test_overlap: float
    grad_norm_sq: float
    seconds: float
    iterations: int = 0


@dataclass
class TrainingRecord:
    rows: list[EpochRow] = field(default_factory=list)
    iterations: int = 0
    num_params: int = 0
    stop_reason: str = ""

    def to_csv(self, timing: bool = True, comment: str | None = None) -> str:
        """CSV text; ``comment`` becomes a leading ``#`` line (read with ``comment="#"``)."""
        buf = io.StringIO()
        if comment:
            buf.write("# " + comment.replace("\n", " ") + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for r in self.rows:
            sec = r.seconds if timing else 0.0
            w.writerow([r.epoch] + [f"{x:.12g}" for x in
                                    (r.train_overlap, r.test_overlap, r.grad_norm_sq, sec)])
        return buf.getvalue()

    def write_csv(self, path, timing: bool = True, comment: str | None = None) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv(timing, comment))


def _circuit_of(model) -> Circuit:
    return model.circuit if isinstance(model, ScenarioModel) else model


def gradient(model, theta, gates, mode="parameter-shift", step=1e-5, target=None):
    """Gradient of the loss ``1 - f`` with respect to ``theta``.

    ``model`` is a ``ScenarioModel`` (target derived from ``gates``) or a raw
    ``Circuit`` with an explicit ``target``.
    """
    circ = _circuit_of(model)
    if target is None:
        target = target_unitary(model, gates)
    theta = np.asarray(theta, dtype=float)
    if mode == "parameter-shift":
        _, df = circ.gradient(theta, gates, target)
        return -df
    if mode == "finite-difference":
        g = np.empty_like(theta)
        for k in range(theta.size):
            tp, tm = theta.copy(), theta.copy()
            tp[k] += step
            tm[k] -= step
            g[k] = (circ.fidelity(tp, gates, target) - circ.fidelity(tm, gates, target)) / (2 * step)
        return -g
    raise ValueError(f"unknown gradient mode {mode!r}")


def _as_samples(model: ScenarioModel, gates) -> list[list[np.ndarray]]:
    if gates is None:
        return []
    arr = [np.asarray(g, dtype=complex) for g in gates]
    samples = []
    for g in arr:
        if g.ndim == 2:
            g = g[None]
        if g.shape[0] != model.num_gates:
            raise ValueError(f"each sample needs {model.num_gates} gate(s), got {g.shape[0]}")
        samples.append(list(g))
    return samples


def initial_theta(model: ScenarioModel, init: str, rng: np.random.Generator) -> np.ndarray:
    if init == "zero":
        return np.zeros(model.num_params)
    return rng.uniform(-np.pi / 4, np.pi / 4, size=model.num_params)


def mean_overlap(model: ScenarioModel, theta, gates) -> float:
    samples = _as_samples(model, gates)
    if not samples:
        return float("nan")
    circ = model.circuit
    return float(np.mean([circ.fidelity(theta, s, target_unitary(model, s)) for s in samples]))


def train(model: ScenarioModel, train_gates, config: TrainConfig | None = None,
          test_gates=None, theta0=None):
    """Run SGD; returns ``(theta, record)``. Deterministic for a fixed seed."""
    cfg = config or TrainConfig()
    train_set = _as_samples(model, train_gates)
    if not train_set:
        raise ValueError("training set is empty")
    test_set = _as_samples(model, test_gates)
    circ = model.circuit
    train_t = [target_unitary(model, s) for s in train_set]
    test_t = [target_unitary(model, s) for s in test_set]

    rng = np.random.default_rng(cfg.seed)
    theta = initial_theta(model, cfg.init, rng) if theta0 is None else \
        model.check_theta(theta0).copy()
    epoch_size = cfg.epoch_size or len(train_set)

    def loss_grad(th, i):
        if cfg.gradient_mode == "parameter-shift":
            f, df = circ.gradient(th, train_set[i], train_t[i])
            return 1.0 - f, -df
        g = gradient(circ, th, train_set[i], "finite-difference", cfg.fd_step, train_t[i])
        return 1.0 - circ.fidelity(th, train_set[i], train_t[i]), g

    def evaluate(th, stochastic_norm):
        if cfg.grad_norm == "full" or stochastic_norm is None:
            fs, total, norms = [], np.zeros_like(th), []
            for i in range(len(train_set)):
                loss_i, g = loss_grad(th, i)
                fs.append(1.0 - loss_i)
                total += g
                norms.append(float(g @ g))
            full = total / len(train_set)
            norm = float(full @ full) if cfg.grad_norm == "full" else float(np.mean(norms))
        else:
            fs = [circ.fidelity(th, s, t) for s, t in zip(train_set, train_t)]
            norm = stochastic_norm
        test_f = [circ.fidelity(th, s, t) for s, t in zip(test_set, test_t)]
        return (float(np.mean(fs)), float(np.mean(test_f)) if test_f else float("nan"), norm)

    start = time.perf_counter()
    record = TrainingRecord(num_params=model.num_params)
    tr, te, gn = evaluate(theta, None)
    record.rows.append(EpochRow(0, tr, te, gn, time.perf_counter() - start, 0))
    epoch_loss = 1.0 - tr
    it = 0
    epoch = 0
    while it < cfg.max_iters and epoch_loss > cfg.loss_threshold:
        losses, norms = [], []
        for _ in range(min(epoch_size, cfg.max_iters - it)):
            i = int(rng.integers(len(train_set)))
            loss_i, g = loss_grad(theta, i)
            if not (math.isfinite(loss_i) and np.all(np.isfinite(g))):
                raise TrainingDiverged(f"non-finite loss or gradient at iteration {it}")
            theta = theta - cfg.learning_rate * g
            losses.append(loss_i)
            norms.append(float(g @ g))
            it += 1
        epoch += 1
        epoch_loss = float(np.mean(losses))
        tr, te, gn = evaluate(theta, float(np.mean(norms)))
        record.rows.append(EpochRow(epoch, tr, te, gn, time.perf_counter() - start, it))
        logger.debug("epoch %d: train %.6f test %.6f |grad|^2 %.3g", epoch, tr, te, gn)
    record.iterations = it
    record.stop_reason = "threshold" if epoch_loss <= cfg.loss_threshold else "max_iters"
    return theta, record


def fit_template(template: GateTemplate, target, restarts: int = 5, seed: int = 0,
                 tol: float = 1e-10):
    """Best-overlap parameters of ``template`` for a unitary ``target``.

    Uses L-BFGS on the exact shift-rule gradient from several random starts
    and returns ``(theta, overlap)`` of the best run.
    """
    circ = template_circuit(template)
    rng = np.random.default_rng(seed)

    def fun(th):
        f, df = circ.gradient(th, [], target)
        return 1.0 - f, -df

    best = (None, -1.0)
    for _ in range(restarts):
        x0 = rng.uniform(-np.pi, np.pi, template.num_params)
        res = minimize(fun, x0, jac=True, method="L-BFGS-B", options={"gtol": tol, "ftol": tol})
        f = 1.0 - res.fun
        if f > best[1]:
            best = (res.x, f)
        if f > 1 - 1e-9:
            break
    return best

"""Command-line entry point: ``qaegate {gen-dataset,train,eval,verify}``.

Exit codes: 0 success, 1 usage error, 2 runtime or validation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .channels import (choi_of_channel, choi_of_unitary, choi_overlap, completeness_error,
                       swap_test_probability)
from .diagnostics import check_second_order
from .heisenberg import (DEFAULT_T_RANGE, PRESETS, DatasetError, GateSample, HeisenbergFamily,
                         gates, load_dataset, sample_dataset, save_dataset, xxx_family)
from .scenarios import (FORMAT_VERSION, KINDS, TARGETS, ModelFileError, ScenarioModel,
                        decoded_channel, load_model, save_model, target_unitary)
from .training import GRADIENT_MODES, TrainConfig, TrainingDiverged, gradient, train

CHECKS = ("kraus", "gradient", "smoothness", "swap")
KRAUS_ATOL = 1e-10
GRADIENT_ATOL = 1e-6
SHIFT_ATOL = 1e-9
SWAP_ATOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _provenance(args) -> dict:
    return {"version": FORMAT_VERSION, "command_line": args.command_line, "seed": args.seed}


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


# gen-dataset

def cmd_gen_dataset(args) -> int:
    if args.train < 0 or args.test < 0:
        raise UsageError("--train and --test must be non-negative")
    if not args.t_lo < args.t_hi:
        raise UsageError(f"empty range [{args.t_lo}, {args.t_hi})")
    base = PRESETS[args.preset](args.n) if args.preset else HeisenbergFamily(args.n)
    fam = HeisenbergFamily(
        args.n,
        base.jx if args.jx is None else args.jx,
        base.jy if args.jy is None else args.jy,
        base.jz if args.jz is None else args.jz,
        base.h if args.h is None else args.h)
    ds = sample_dataset(fam, args.train, args.test, (args.t_lo, args.t_hi), args.seed)
    ds = type(ds)(ds.family, ds.train, ds.test, ds.seed, ds.t_range, args.command_line)
    save_dataset(ds, args.out)
    print(f"wrote {args.out}: n={fam.n} J=({fam.jx}, {fam.jy}, {fam.jz}) h={fam.h} "
          f"t in [{args.t_lo}, {args.t_hi}) train={len(ds.train)} test={len(ds.test)} "
          f"seed={args.seed}")
    return 0


# train / eval

def _paired_samples(first, second):
    """Stack single-gate arrays into ``(samples, gates, d, d)``; sample ``i`` pairs row ``i``."""
    if second is None:
        return first[:, None]
    if len(first) != len(second):
        raise ValueError(
            f"sequence datasets differ in size ({len(first)} vs {len(second)} samples)")
    return np.stack([first, second], axis=1)


def _load_pair(path, path2):
    ds = load_dataset(path)
    ds2 = load_dataset(path2) if path2 else None
    if ds2 is not None and ds2.family.n != ds.family.n:
        raise ValueError("the two datasets act on different numbers of qubits")
    return ds, ds2


def _check_train_flags(args) -> None:
    if args.scenario != "multiround":
        if args.rounds is not None:
            raise UsageError("--rounds only applies to --scenario multiround")
        if args.target != "single":
            raise UsageError("--target only applies to --scenario multiround")
    if args.scenario == "sequence" and not args.dataset2:
        raise UsageError("--scenario sequence needs --dataset2")
    if args.scenario != "sequence" and args.dataset2:
        raise UsageError("--dataset2 only applies to --scenario sequence")
    if args.rounds is not None and args.rounds < 2:
        raise UsageError("--rounds must be at least 2")
    if args.a < 1 or (args.n is not None and args.a > args.n):
        raise UsageError("need 1 <= --a <= --n")
    if args.iters < 1:
        raise UsageError("--iters must be positive")
    if not args.lr > 0:
        raise UsageError("--lr must be positive")
    if not 0 < args.delta < 1:
        raise UsageError("--delta must lie in (0, 1)")
    if args.epoch_size is not None and args.epoch_size < 1:
        raise UsageError("--epoch-size must be positive")


def cmd_train(args) -> int:
    _check_train_flags(args)
    ds, ds2 = _load_pair(args.dataset, args.dataset2)
    n = ds.family.n
    if args.n is not None and args.n != n:
        raise ValueError(f"--n {args.n} does not match the dataset's {n} qubits")
    if args.a > n:
        raise ValueError(f"--a {args.a} exceeds the dataset's {n} qubits")
    model = ScenarioModel(args.scenario, n, args.a, rounds=args.rounds or 2,
                          target=args.target)
    train_x = _paired_samples(ds.train_gates(), ds2.train_gates() if ds2 else None)
    test_x = _paired_samples(ds.test_gates(), ds2.test_gates() if ds2 else None) \
        if ds.test else None
    config = TrainConfig(max_iters=args.iters, learning_rate=args.lr,
                         loss_threshold=args.delta, seed=args.seed,
                         epoch_size=args.epoch_size, gradient_mode=args.gradient,
                         fd_step=args.fd_step, init=args.init, grad_norm=args.grad_norm)
    theta, record = train(model, train_x, config, test_x)
    prov = {"command_line": args.command_line, "seed": args.seed}
    if args.model_out:
        save_model(args.model_out, model, theta, **prov)
    if args.curve_out:
        record.write_csv(args.curve_out, timing=not args.no_timing,
                         comment=f"qaegate {__version__} version={FORMAT_VERSION} "
                                 f"seed={args.seed} command_line={args.command_line}")
    first, last = record.rows[0], record.rows[-1]
    print(f"{model.kind} n={model.n} a={model.a}: {record.iterations} iterations "
          f"({record.stop_reason}); train overlap {first.train_overlap:.4f} -> "
          f"{last.train_overlap:.4f}, test {first.test_overlap:.4f} -> {last.test_overlap:.4f}")
    return 0


def cmd_eval(args) -> int:
    model, theta = load_model(args.model)
    if model.kind == "sequence" and not args.dataset2:
        raise UsageError("a sequence model needs --dataset2")
    if model.kind != "sequence" and args.dataset2:
        raise UsageError("--dataset2 only applies to sequence models")
    ds, ds2 = _load_pair(args.dataset, args.dataset2)
    if ds.family.n != model.n:
        raise ValueError(
            f"model acts on {model.n} qubits but the dataset has {ds.family.n}-qubit gates")
    if not ds.test:
        raise ValueError("dataset has no test records")
    xs = _paired_samples(ds.test_gates(), ds2.test_gates() if ds2 else None)
    circ = model.circuit
    per = [circ.fidelity(theta, list(s), target_unitary(model, s)) for s in xs]
    seed = args.seed
    if seed is None:
        seed = json.loads(Path(args.model).read_text(encoding="utf-8")).get("seed")
    report = {"version": FORMAT_VERSION, "command_line": args.command_line, "seed": seed,
              "model": str(args.model), "dataset": str(args.dataset),
              "mean_overlap": float(np.mean(per)), "per_sample": [float(x) for x in per]}
    _write_json(args.out, report)
    print(f"mean test overlap {report['mean_overlap']:.6f} over {len(per)} samples")
    return 0


# verify

def _random_samples(model, count, rng):
    fam = xxx_family(model.n)
    ts = rng.uniform(*DEFAULT_T_RANGE, size=(count, model.num_gates))
    return [list(gates([GateSample(fam, float(t)) for t in row])) for row in ts]


def _check_kraus(model, theta, samples, rng):
    worst_complete, worst_engine = 0.0, 0.0
    for th in (theta, rng.uniform(-np.pi, np.pi, model.num_params)):
        for s in samples:
            ref = decoded_channel(model, th, s)
            worst_complete = max(worst_complete, completeness_error(ref.kraus))
            engine = model.circuit.kraus(th, s)
            diff = np.abs(choi_of_channel(ref).matrix - _choi(engine)).max()
            worst_engine = max(worst_engine, float(diff))
    ok = worst_complete <= KRAUS_ATOL and worst_engine <= KRAUS_ATOL
    return ok, {"max_completeness_error": worst_complete, "max_engine_choi_diff": worst_engine,
                "tolerance": KRAUS_ATOL}


def _choi(kraus):
    d = kraus.shape[-1]
    vecs = kraus.reshape(kraus.shape[0], -1)
    return vecs.T @ vecs.conj() / d


def _check_gradient(model, theta, samples, rng):
    circ = model.circuit
    worst_fd, worst_shift = 0.0, 0.0
    for s in samples[:2]:
        tgt = target_unitary(model, s)
        ps = gradient(circ, theta, s, "parameter-shift", target=tgt)
        fd = gradient(circ, theta, s, "finite-difference", 1e-5, target=tgt)
        worst_fd = max(worst_fd, float(np.abs(ps - fd).max()))
        _, big = circ.shift_differences(theta, s, tgt, np.pi / 4)
        _, small = circ.shift_differences(theta, s, tgt, np.pi / 8)
        worst_shift = max(worst_shift, float(np.abs(small - np.sin(np.pi / 4) * big).max()))
    ok = worst_fd <= GRADIENT_ATOL and worst_shift <= SHIFT_ATOL
    return ok, {"max_shift_vs_fd": worst_fd, "fd_tolerance": GRADIENT_ATOL,
                "max_two_shift_residual": worst_shift, "shift_tolerance": SHIFT_ATOL}


def _check_smoothness(model, theta, samples, rng):
    rep = check_second_order(model, samples, trials=40, third_trials=20,
                             seed=int(rng.integers(2**31)))
    return rep.violations == 0, rep.to_dict()


def _check_swap(model, theta, samples, rng):
    worst = 0.0
    for s in samples:
        c = choi_of_unitary(target_unitary(model, s))
        c2 = choi_of_channel(decoded_channel(model, theta, s))
        f = choi_overlap(c, c2)
        p = swap_test_probability(c, c2)
        worst = max(worst, abs(f - (2 * p - 1)))
    return worst <= SWAP_ATOL, {"max_abs_residual": worst, "tolerance": SWAP_ATOL}


_CHECK_FUNCS = {"kraus": _check_kraus, "gradient": _check_gradient,
                "smoothness": _check_smoothness, "swap": _check_swap}


def cmd_verify(args) -> int:
    names = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = [c for c in names if c not in CHECKS]
    if bad or not names:
        raise UsageError(f"unknown check {bad[0]!r}; choose from {', '.join(CHECKS)}"
                         if bad else "no checks selected")
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    model, theta = load_model(args.model)
    rng = np.random.default_rng(args.seed)
    samples = _random_samples(model, args.samples, rng)
    results, all_ok = {}, True
    for name in names:
        ok, detail = _CHECK_FUNCS[name](model, theta, samples, rng)
        results[name] = {"passed": bool(ok), **detail}
        all_ok &= bool(ok)
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    report = {**_provenance(args), "model": str(args.model), "passed": all_ok,
              "checks": results}
    if args.out:
        _write_json(args.out, report)
    return 0 if all_ok else 2


# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qaegate", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qaegate {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-dataset", help="sample Heisenberg evolution times")
    g.add_argument("--n", type=int, required=True, help="number of spins / qubits")
    g.add_argument("--preset", choices=sorted(PRESETS),
                   help="coupling preset; explicit --jx/--jy/--jz/--h override it")
    for name in ("jx", "jy", "jz", "h"):
        g.add_argument(f"--{name}", type=float, default=None)
    g.add_argument("--train", type=int, default=50)
    g.add_argument("--test", type=int, default=10)
    g.add_argument("--t-lo", type=float, default=DEFAULT_T_RANGE[0])
    g.add_argument("--t-hi", type=float, default=DEFAULT_T_RANGE[1])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_dataset)

    t = sub.add_parser("train", help="fit encoder and decoder parameters by SGD")
    t.add_argument("--scenario", choices=KINDS, default="basic")
    t.add_argument("--rounds", type=int, default=None, help="multiround only (default 2)")
    t.add_argument("--target", choices=TARGETS, default="single",
                   help="multiround only: learn the gate once or its rounds-fold power")
    t.add_argument("--n", type=int, default=None, help="checked against the dataset")
    t.add_argument("--a", type=int, default=1, help="transmitted qubits")
    t.add_argument("--dataset", required=True)
    t.add_argument("--dataset2", help="second gate of each sample (sequence scenario)")
    t.add_argument("--iters", type=int, default=20_000)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--delta", type=float, default=1e-3, help="epoch-mean loss threshold")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--init", choices=("random", "zero"), default="random")
    t.add_argument("--epoch-size", type=int, default=None)
    t.add_argument("--gradient", choices=GRADIENT_MODES, default="parameter-shift")
    t.add_argument("--fd-step", type=float, default=1e-5)
    t.add_argument("--grad-norm", choices=("full", "stochastic"), default="full")
    t.add_argument("--model-out")
    t.add_argument("--curve-out")
    t.add_argument("--no-timing", action="store_true",
                   help="write 0 in the seconds column so curves are byte-reproducible")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="mean test-set overlap of a trained model")
    e.add_argument("--model", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--dataset2")
    e.add_argument("--seed", type=int, default=None,
                   help="recorded in the report; defaults to the model's seed")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run invariant checks on a model")
    v.add_argument("--model", required=True)
    v.add_argument("--checks", default=",".join(CHECKS))
    v.add_argument("--samples", type=int, default=3, help="random input gates per check")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.command_line = shlex.join(["qaegate", *argv])
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        # Single-threaded BLAS keeps every output byte-identical whatever the
        # machine's thread settings; the matrices here are small anyway.
        with threadpool_limits(1):
            return args.func(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"qaegate: error: {e}", file=sys.stderr)
        return 1
    except (DatasetError, ModelFileError, TrainingDiverged, ValueError, OSError) as e:
        print(f"qaegate: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

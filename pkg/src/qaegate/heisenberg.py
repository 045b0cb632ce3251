"""Heisenberg spin-chain gate families, sampled datasets and their JSON files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, embed, expm_hermitian, kron

FORMAT_VERSION = "1"
DEFAULT_T_RANGE = (0.0, 3.0)


class DatasetError(ValueError):
    """Raised for unreadable, malformed or incompatible dataset files."""


@dataclass(frozen=True)
class HeisenbergFamily:
    n: int
    jx: float = 0.1
    jy: float = 0.1
    jz: float = 0.1
    h: float = 0.5

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        for name in ("jx", "jy", "jz", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def xxx_family(n: int) -> HeisenbergFamily:
    """Isotropic chain, couplings 0.1 and field 0.5."""
    return HeisenbergFamily(n, 0.1, 0.1, 0.1, 0.5)


def xxz_family(n: int) -> HeisenbergFamily:
    """Second family of the gate-sequence experiment: ``Jx = Jy = 0.1``, ``Jz = h = 0.5``."""
    return HeisenbergFamily(n, 0.1, 0.1, 0.5, 0.5)


PRESETS = {"xxx": xxx_family, "xxz": xxz_family}


@dataclass(frozen=True)
class GateSample:
    family: HeisenbergFamily
    t: float


def hamiltonian(f: HeisenbergFamily) -> np.ndarray:
    """Open chain ``-1/2 sum_j (Jx XX + Jy YY + Jz ZZ)_{j,j+1} - 1/2 sum_j h Z_j``."""
    n = f.n
    coupling = f.jx * kron(SIGMA_X, SIGMA_X) + f.jy * kron(SIGMA_Y, SIGMA_Y) \
        + f.jz * kron(SIGMA_Z, SIGMA_Z)
    h = np.zeros((2**n, 2**n), dtype=complex)
    for j in range(n - 1):
        h -= 0.5 * embed(coupling, [j, j + 1], n)
    for j in range(n):
        h -= 0.5 * f.h * embed(SIGMA_Z, [j], n)
    return h


def gate(s: GateSample) -> np.ndarray:
    """``exp(-i H t)``."""
    return expm_hermitian(hamiltonian(s.family), -1j * s.t)


def gates(samples) -> np.ndarray:
    """Stack of gate unitaries sharing one eigendecomposition per family."""
    samples = list(samples)
    if not samples:
        return np.empty((0, 1, 1), dtype=complex)
    out = []
    cache: dict[HeisenbergFamily, tuple[np.ndarray, np.ndarray]] = {}
    for s in samples:
        if s.family not in cache:
            cache[s.family] = np.linalg.eigh(hamiltonian(s.family))
        w, v = cache[s.family]
        out.append((v * np.exp(-1j * s.t * w)) @ v.conj().T)
    return np.stack(out)


@dataclass(frozen=True)
class Dataset:
    family: HeisenbergFamily
    train: tuple[GateSample, ...]
    test: tuple[GateSample, ...]
    seed: int
    t_range: tuple[float, float] = DEFAULT_T_RANGE
    command_line: str | None = field(default=None, compare=False)

    def train_gates(self) -> np.ndarray:
        return gates(self.train)

    def test_gates(self) -> np.ndarray:
        return gates(self.test)


def sample_dataset(f: HeisenbergFamily, n_train: int = 50, n_test: int = 10,
                   t_range=DEFAULT_T_RANGE, seed: int = 0) -> Dataset:
    """Draw evolution times i.i.d. uniform on ``[t_lo, t_hi)``; train draws come first."""
    t_lo, t_hi = (float(x) for x in t_range)
    if not t_lo < t_hi:
        raise ValueError(f"empty range [{t_lo}, {t_hi})")
    if n_train < 0 or n_test < 0:
        raise ValueError("dataset sizes must be non-negative")
    rng = np.random.default_rng(seed)
    ts = rng.uniform(t_lo, t_hi, size=n_train + n_test)
    samples = tuple(GateSample(f, float(t)) for t in ts)
    return Dataset(f, samples[:n_train], samples[n_train:], int(seed), (t_lo, t_hi))


_TOP_KEYS = {"version", "family", "seed", "train", "test", "t_range", "command_line"}
_FAMILY_KEYS = {"n", "jx", "jy", "jz", "h"}
_RECORD_KEYS = {"t"}


def dataset_to_dict(d: Dataset) -> dict:
    out = {
        "version": FORMAT_VERSION,
        "family": asdict(d.family),
        "seed": d.seed,
        "t_range": list(d.t_range),
        "train": [{"t": s.t} for s in d.train],
        "test": [{"t": s.t} for s in d.test],
    }
    if d.command_line is not None:
        out["command_line"] = d.command_line
    return out


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise DatasetError(f"{where} must be a JSON object")
    for key in obj:
        if key not in allowed:
            raise DatasetError(f"unknown field {key!r} in {where}")


def dataset_from_dict(obj) -> Dataset:
    _check_keys(obj, _TOP_KEYS, "dataset")
    if obj.get("version") != FORMAT_VERSION:
        raise DatasetError(
            f"unsupported dataset version {obj.get('version')!r}, expected {FORMAT_VERSION!r}")
    for key in ("family", "seed", "train", "test"):
        if key not in obj:
            raise DatasetError(f"missing field {key!r} in dataset")
    fam = obj["family"]
    _check_keys(fam, _FAMILY_KEYS, "family")
    try:
        family = HeisenbergFamily(int(fam["n"]), float(fam["jx"]), float(fam["jy"]),
                                  float(fam["jz"]), float(fam["h"]))
    except KeyError as e:
        raise DatasetError(f"missing field {e.args[0]!r} in family") from None
    except (TypeError, ValueError) as e:
        raise DatasetError(f"malformed family: {e}") from None

    def records(name):
        items = obj[name]
        if not isinstance(items, list):
            raise DatasetError(f"{name} must be a list")
        out = []
        for i, rec in enumerate(items):
            _check_keys(rec, _RECORD_KEYS, f"{name}[{i}]")
            if "t" not in rec or not isinstance(rec["t"], (int, float)):
                raise DatasetError(f"{name}[{i}] needs a numeric 't'")
            out.append(GateSample(family, float(rec["t"])))
        return tuple(out)

    t_range = tuple(float(x) for x in obj.get("t_range", DEFAULT_T_RANGE))
    return Dataset(family, records("train"), records("test"), int(obj["seed"]), t_range,
                   obj.get("command_line"))


def save_dataset(d: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset_to_dict(d), indent=2) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"cannot parse {path}: {e}") from None
    return dataset_from_dict(obj)

"""Compression of parametric quantum gates through trained encoder/decoder circuits."""

from .channels import (ChoiOperator, KrausChannel, choi_of_channel, choi_of_unitary,
                       choi_overlap, entanglement_fidelity, swap_test_probability)
from .estimator import QAEGate
from .gates import GateTemplate, n_qubit_template, realize, two_qubit_template
from .heisenberg import (Dataset, HeisenbergFamily, load_dataset, sample_dataset,
                         save_dataset, xxx_family, xxz_family)
from .scenarios import (ScenarioModel, decoded_channel, encoded_channel, fidelity,
                        load_model, loss, save_model)
from .training import TrainConfig, TrainingRecord, train

__version__ = "0.1.0"

__all__ = [
    "ChoiOperator", "Dataset", "GateTemplate", "HeisenbergFamily", "KrausChannel",
    "QAEGate", "ScenarioModel", "TrainConfig", "TrainingRecord", "choi_of_channel",
    "choi_of_unitary", "choi_overlap", "decoded_channel", "encoded_channel",
    "entanglement_fidelity", "fidelity", "load_dataset", "load_model", "loss",
    "n_qubit_template", "realize", "sample_dataset", "save_dataset", "save_model",
    "swap_test_probability", "train", "two_qubit_template", "xxx_family", "xxz_family",
]

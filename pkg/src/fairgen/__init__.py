"""fairgen: fairness-aware adversarial tabular data generation and auditing."""

__version__ = "0.1.0"

from .data import EncodedDataset, RawTable, Schema, encode, load_schema, load_table
from .gan import FairGanModel, TrainConfig, train, synthesize
from .metrics import FairnessReport, risk_difference_data

__all__ = [
    "EncodedDataset",
    "RawTable",
    "Schema",
    "encode",
    "load_schema",
    "load_table",
    "FairGanModel",
    "TrainConfig",
    "train",
    "synthesize",
    "FairnessReport",
    "risk_difference_data",
    "__version__",
]

"""Safety metrics for lead-vehicle interactions and the agreement analysis between them."""
from .agreement import (agreement_matrix, aid_elementwise, aid_pairwise, micro_precision,
                        precision, recall, sign_transform)
from .evaluate import evaluate
from .model import Dataset, Incident, OddBox, PairState, VehicleKinematics
from .registry import expand_variants
from .spec import MetricOutput, MetricSpec

__all__ = [
    "Dataset", "Incident", "MetricOutput", "MetricSpec", "OddBox", "PairState",
    "VehicleKinematics", "agreement_matrix", "aid_elementwise", "aid_pairwise",
    "evaluate", "expand_variants", "micro_precision", "precision", "recall",
    "sign_transform",
]

__version__ = "0.1.0"

"""Rank recommendations by their causal effect on purchases: estimators, learners and experiments."""
from .core import (
    CausalRankError,
    DegenerateInputError,
    FormatError,
    GroundTruth,
    InteractionLog,
    MFModel,
    NumericError,
    ObservedDataset,
    ObservedReplicate,
    OutcomeReplicate,
    ParameterError,
    PropensityError,
    PropensityModel,
    Provenance,
    RankedList,
    StructuralError,
    validate_dataset,
)
from .metrics import CAR, CDCG, CP, CappingParams, MetricKind
from .train import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "CAR",
    "CDCG",
    "CP",
    "CappingParams",
    "CausalRankError",
    "DegenerateInputError",
    "FormatError",
    "GroundTruth",
    "InteractionLog",
    "MFModel",
    "MetricKind",
    "NumericError",
    "ObservedDataset",
    "ObservedReplicate",
    "OutcomeReplicate",
    "ParameterError",
    "PropensityError",
    "PropensityModel",
    "Provenance",
    "RankedList",
    "StructuralError",
    "TrainConfig",
    "validate_dataset",
]

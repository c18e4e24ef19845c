"""Lift & Learn: POD bases, quadratic liftings and Operator Inference."""

from .data import SnapshotSet, VariableLayout, read_snapshots, write_snapshots
from .opinf import ModelForm, ReducedModel, RegWeights, infer, solve_regularized
from .pod import PodBasis, center_scale, pod_basis
from .rom import ForcingSignal, integrate

__all__ = [
    "ForcingSignal", "ModelForm", "PodBasis", "ReducedModel", "RegWeights", "SnapshotSet",
    "VariableLayout", "center_scale", "infer", "integrate", "pod_basis", "read_snapshots",
    "solve_regularized", "write_snapshots",
]

__version__ = "0.1.0"

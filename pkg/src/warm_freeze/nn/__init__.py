"""A small float64 neural-network engine for 1D residual networks with LoRA."""

from .accounting import ParameterLayout, count_params
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import BatchNorm1d, Conv1d, Linear, Mode, Parameter
from .lora import LoraAdapter, adapter_param_count
from .loss import cross_entropy
from .network import BasicBlock1d, NetworkModel, build_network
from .optim import CosineSchedule, TrainState, adamw_step
from .training import ArraySplit, EpochRecord, evaluate_accuracy, fit, predict_proba

__all__ = [
    "ArraySplit",
    "BasicBlock1d",
    "BatchNorm1d",
    "Conv1d",
    "CosineSchedule",
    "EpochRecord",
    "Linear",
    "LoraAdapter",
    "Mode",
    "NetworkModel",
    "Parameter",
    "ParameterLayout",
    "TrainState",
    "adamw_step",
    "adapter_param_count",
    "build_network",
    "count_params",
    "cross_entropy",
    "evaluate_accuracy",
    "fit",
    "load_checkpoint",
    "predict_proba",
    "save_checkpoint",
]

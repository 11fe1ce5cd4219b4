"""Quantized tensor-network kernel machines with polynomial and Fourier features."""
from .errors import ConfigError, DataError, NumericalError
from .features import FactorBlock, FeatureSpec
from .solver import TrainConfig, TrainReport, als_train, predict
from .tensors import CpdWeights, NetworkShape, TtWeights, param_count, vc_bound

__all__ = [
    "ConfigError",
    "CpdWeights",
    "DataError",
    "FactorBlock",
    "FeatureSpec",
    "NetworkShape",
    "NumericalError",
    "TrainConfig",
    "TrainReport",
    "TtWeights",
    "als_train",
    "param_count",
    "predict",
    "vc_bound",
]

"""Mean field model families: Feynman-Kac, Gaussian and McKean gas."""
from .base import FiniteStateModel
from .feynman_kac import (
    FeynmanKacModel,
    fk_mckean_kernel,
    fk_phi_step,
    partition_function,
    two_state_example,
)
from .functions import Constant, Cosine, Indicator, Polynomial, Sine, Tanh, function_from_dict
from .gas import McKeanGasModel, gas_kernel, gas_phi_step, two_velocities
from .gaussian import GaussianMeanFieldModel, GaussianMoments, gaussian_kernel_sample
from .io import ModelSpec, load_model, model_from_dict


def exact_flow(model, horizon: int):
    """``[eta_0, ..., eta_n]`` by iterating the exact one-step maps.

    Gaussian models only have an oracle in the decoupled linear case, where
    the list holds :class:`GaussianMoments`.
    """
    return model.exact_flow(horizon)


__all__ = [
    "FiniteStateModel",
    "FeynmanKacModel",
    "McKeanGasModel",
    "GaussianMeanFieldModel",
    "GaussianMoments",
    "ModelSpec",
    "Constant",
    "Cosine",
    "Indicator",
    "Polynomial",
    "Sine",
    "Tanh",
    "exact_flow",
    "fk_mckean_kernel",
    "fk_phi_step",
    "function_from_dict",
    "gas_kernel",
    "gas_phi_step",
    "gaussian_kernel_sample",
    "load_model",
    "model_from_dict",
    "partition_function",
    "two_state_example",
    "two_velocities",
]

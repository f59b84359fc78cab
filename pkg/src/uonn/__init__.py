"""Unitary optical neural networks built from MZI meshes, trained with parameter-shift gradients."""

from .field import is_unitary, mat_apply, power, random_unitary
from .mesh import (
    MeshLayout,
    clements_decompose,
    clements_layout,
    decompose,
    mesh_unitary,
    reck_decompose,
    reck_layout,
)
from .network import (
    Activation,
    Detection,
    MeshLayer,
    Network,
    Observable,
    ParamRef,
    forward_field,
    forward_intensity,
    identity_network,
    measure_observable,
    random_network,
)
from .oracles import grad_analytic, grad_fd
from .optics import MZIParams, beam_splitter, mzi_from_components, mzi_unitary, phase_shifter
from .psr import grad_field_psr, grad_intensity_psr, grad_loss_chained, shift_rule_general
from .trainer import TrainConfig, train

__version__ = "0.1.0"

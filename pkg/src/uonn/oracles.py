"""Reference gradients that do not use any shift rule.

``grad_analytic`` differentiates the phase shifter directly,
``d/dx diag(e^{ix}, 1) = i G diag(e^{ix}, 1)``, and rebuilds the MZI from its
four components; ``grad_fd`` is the central finite difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .losses import SampleLoss, UnitaryFidelity
from .mesh import MeshLayout
from .network import INPUT_PHASE, THETA, Network, ParamRef, propagate, push_tangent, readout_layers
from .optics import PHASE_GENERATOR, beam_splitter, phase_shifter
from .psr import ANALYTIC, FD, GradientRecord, GradientReport

CENTRAL = "central"


@dataclass(frozen=True)
class FDConfig:
    step: float = 1e-6
    scheme: str = CENTRAL

    def __post_init__(self):
        if not 0.0 < self.step <= 1e-2:
            raise ValueError(f"finite-difference step must lie in (0, 1e-2], got {self.step}")
        if self.scheme != CENTRAL:
            raise ValueError(f"only central differences are supported, got {self.scheme!r}")


def grad_fd(f: Callable[[float], float], theta: float, cfg: FDConfig = FDConfig()) -> float:
    h = cfg.step
    hi, lo = f(theta + h), f(theta - h)
    if not (math.isfinite(hi) and math.isfinite(lo)):
        raise ValueError(f"non-finite evaluation near theta={theta}: f(+h)={hi}, f(-h)={lo}")
    return (hi - lo) / (2.0 * h)


def _mzi_derivative(theta: float, phi: float, which: str) -> np.ndarray:
    bs = beam_splitter()
    ps_in, ps_out = phase_shifter(theta), phase_shifter(phi)
    if which == THETA:
        return ps_out @ bs @ (1j * PHASE_GENERATOR @ ps_in) @ bs
    return (1j * PHASE_GENERATOR @ ps_out) @ bs @ ps_in @ bs


def layout_tangent(layout: MeshLayout, e: np.ndarray, which: str, index: int) -> np.ndarray:
    """Derivative of a single mesh layer's output field with respect to one phase."""
    bs = beam_splitter()
    state = np.exp(1j * np.asarray(layout.input_phases)) * e
    t = np.zeros_like(state)
    if which == INPUT_PHASE:
        t[index] = 1j * state[index]
        start = 0
    else:
        for p in layout.placements[:index]:
            k = p.top
            state[k : k + 2] = phase_shifter(p.phi) @ bs @ phase_shifter(p.theta) @ bs @ state[k : k + 2]
        p = layout.placements[index]
        k = p.top
        t[k : k + 2] = _mzi_derivative(p.theta, p.phi, which) @ state[k : k + 2]
        start = index + 1
    for p in layout.placements[start:]:
        k = p.top
        t[k : k + 2] = phase_shifter(p.phi) @ bs @ phase_shifter(p.theta) @ bs @ t[k : k + 2]
    return t


def _layer_tangent(net: Network, fields, ref: ParamRef) -> np.ndarray:
    net._resolve(ref)
    layout = net.layers[ref.layer].layout
    t = layout_tangent(layout, fields[ref.layer], ref.which, ref.index)
    layers = readout_layers(net)
    return push_tangent(layers[ref.layer + 1 :], fields[ref.layer + 1 :], t)


def grad_analytic(net: Network, e, p: ParamRef) -> np.ndarray:
    """``dE_out/dx = U_L ... (i G U_j) ... U_1 E`` for a unitary-only network."""
    if not net.is_unitary_only:
        raise ValueError("grad_analytic field derivatives need a unitary-only network")
    fields = propagate(net, np.asarray(e, dtype=np.complex128))
    return _layer_tangent(net, fields, p)


def grad_loss_analytic(
    net: Network,
    e,
    loss: SampleLoss,
    target=None,
    params: Optional[Sequence[ParamRef]] = None,
) -> GradientReport:
    fields = propagate(net, np.asarray(e, dtype=np.complex128))
    g = loss.conj_grad(fields[-1], target)
    refs = net.param_refs() if params is None else params
    records = [
        GradientRecord(ref, float(2.0 * np.real(np.vdot(g, _layer_tangent(net, fields, ref)))), ANALYTIC, 0)
        for ref in refs
    ]
    return GradientReport(records)


def grad_fidelity_analytic(
    net: Network, loss: UnitaryFidelity, params: Optional[Sequence[ParamRef]] = None
) -> GradientReport:
    n = net.n_modes
    u = net.unitary()
    overlap = np.trace(loss.target.conj().T @ u)
    refs = net.param_refs() if params is None else params
    records = []
    for ref in refs:
        du = np.column_stack([grad_analytic(net, col, ref) for col in np.eye(n, dtype=np.complex128)])
        d_overlap = np.trace(loss.target.conj().T @ du)
        value = -2.0 * float(np.real(np.conj(overlap) * d_overlap)) / n**2
        records.append(GradientRecord(ref, value, ANALYTIC, 0))
    return GradientReport(records)


def grad_network_fd(
    f: Callable[[Network], float],
    net: Network,
    params: Optional[Sequence[ParamRef]] = None,
    cfg: FDConfig = FDConfig(),
) -> GradientReport:
    """Central differences of any scalar function of the network."""
    refs = net.param_refs() if params is None else params
    records = []
    for ref in refs:
        value = grad_fd(lambda x: f(net.with_phase(ref, x)), net.get_phase(ref), cfg)
        records.append(GradientRecord(ref, value, FD, 2))
    return GradientReport(records)

"""Parameter-shift gradients of network outputs and losses.

Every trainable phase enters through ``exp(i x G)`` with ``G = diag(1, 0)``
on its rail, which gives two exact two-point rules:

* intensities / observables (real output):
  ``df/dx = 1/2 [f(x + pi/2) - f(x - pi/2)]``
* complex output fields:
  ``dE/dx = (1 - i)/2 [E(x + pi/2) - E(x)]``
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .losses import SampleLoss
from .network import (
    MeshLayer,
    ModeError,
    Network,
    Observable,
    ParamRef,
    apply_layer,
    forward_field,
    measure_observable,
    propagate,
    push_tangent,
    readout_layers,
)
from .optics import ShiftRuleSpec, phase_shift_rule_spec

PSR = "psr"
FD = "fd"
ANALYTIC = "analytic"

COMPLEX_FACTOR = (1.0 - 1.0j) / 2.0

Forward = Callable[[Network, np.ndarray], np.ndarray]


@dataclass
class GradientRecord:
    """One gradient entry. ``n_evals`` is the number of function values the rule consumed."""

    param: ParamRef
    value: object
    method: str
    n_evals: int


@dataclass
class GradientReport:
    records: list[GradientRecord] = field(default_factory=list)
    residuals: dict[str, float] = field(default_factory=dict)

    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    def params(self) -> list[ParamRef]:
        return [r.param for r in self.records]

    def compare(self, other: "GradientReport") -> float:
        """Record and return the max absolute difference to ``other``."""
        diff = float(np.max(np.abs(self.values() - other.values()), initial=0.0))
        methods = sorted({r.method for r in self.records} | {r.method for r in other.records})
        self.residuals["-".join(methods)] = diff
        return diff

    def to_records(self) -> list[dict]:
        rows = []
        for r in self.records:
            v = np.asarray(r.value)
            row = {"layer": r.param.layer, "placement": r.param.index, "which": r.param.which}
            if np.iscomplexobj(v):
                row["value_re"] = v.real.tolist()
                row["value_im"] = v.imag.tolist()
            else:
                row["value_re"] = v.tolist()
            row["method"] = r.method
            row["n_evals"] = r.n_evals
            rows.append(row)
        return rows


class CountingForward:
    """Forward evaluator that counts calls, for checking evaluation budgets."""

    def __init__(self, forward: Forward = forward_field):
        self.forward = forward
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, net: Network, e) -> np.ndarray:
        with self._lock:
            self.calls += 1
        return self.forward(net, e)


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


class _Counted:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


def _require_unitary(net: Network) -> None:
    if not net.is_unitary_only:
        raise ModeError("the complex field rule needs a unitary-only network (no detection/activation)")


def shift_rule_general(f: Callable[[float], float], theta: float, spec: ShiftRuleSpec) -> float:
    """``r [f(theta + pi/(4r)) - f(theta - pi/(4r))]`` for a two-eigenvalue generator."""
    if spec.r == 0.0:
        raise ValueError("shift constant r must be non-zero")
    return spec.r * (f(theta + spec.shift) - f(theta - spec.shift))


def grad_intensity_psr(
    net: Network,
    e,
    obs: Observable,
    params: Optional[Sequence[ParamRef]] = None,
    forward: Forward = forward_field,
    threads: int = 1,
) -> GradientReport:
    """Gradient of ``<O>`` at the output of a unitary-only network, two evaluations per phase."""
    if not net.is_unitary_only:
        raise ModeError(
            "the intensity shift rule needs a unitary-only network; use grad_loss_chained "
            "for networks with detection or activation layers"
        )
    spec = phase_shift_rule_spec()
    e = np.asarray(e, dtype=np.complex128)
    refs = list(net.param_refs() if params is None else params)

    def one(ref: ParamRef) -> GradientRecord:
        f = _Counted(lambda x: measure_observable(forward(net.with_phase(ref, x), e), obs))
        value = shift_rule_general(f, net.get_phase(ref), spec)
        return GradientRecord(ref, value, PSR, f.calls)

    return GradientReport(_map(one, refs, threads))


def grad_field_psr(net: Network, e, p: ParamRef, forward: Forward = forward_field) -> np.ndarray:
    """``dE_out/dx`` for one phase from ``E(x)`` and ``E(x + pi/2)``."""
    _require_unitary(net)
    net._resolve(p)
    base = forward(net, e)
    shifted = forward(net.shifted(p, math.pi / 2.0), e)
    return COMPLEX_FACTOR * (shifted - base)


def field_gradients(
    net: Network,
    e,
    params: Optional[Sequence[ParamRef]] = None,
    forward: Forward = forward_field,
    threads: int = 1,
) -> GradientReport:
    """Complex-rule gradients for many phases, sharing one unshifted forward pass."""
    _require_unitary(net)
    refs = list(net.param_refs() if params is None else params)
    base = forward(net, e)

    def one(ref: ParamRef) -> GradientRecord:
        shifted = forward(net.shifted(ref, math.pi / 2.0), e)
        return GradientRecord(ref, COMPLEX_FACTOR * (shifted - base), PSR, 2)

    return GradientReport(_map(one, refs, threads))


def layer_field_psr(net: Network, fields: list[np.ndarray], ref: ParamRef) -> np.ndarray:
    """Complex rule applied to a single mesh layer given the fields entering each layer."""
    shifted = MeshLayer(net.shifted(ref, math.pi / 2.0).layers[ref.layer].layout)
    return COMPLEX_FACTOR * (apply_layer(shifted, fields[ref.layer]) - fields[ref.layer + 1])


def chain_to_loss(
    net: Network,
    fields: list[np.ndarray],
    ref: ParamRef,
    layer_tangent: np.ndarray,
    conj_grad: np.ndarray,
) -> float:
    """Push a layer-output derivative to the readout and contract with ``dL/d conj(E)``."""
    layers = readout_layers(net)
    t = push_tangent(layers[ref.layer + 1 :], fields[ref.layer + 1 :], layer_tangent)
    return float(2.0 * np.real(np.vdot(conj_grad, t)))


def grad_loss_chained(
    net: Network,
    e,
    loss: SampleLoss,
    target=None,
    params: Optional[Sequence[ParamRef]] = None,
    threads: int = 1,
) -> GradientReport:
    """Loss gradient for networks that may contain detection and activation layers.

    Each phase's layer-output derivative comes from the complex shift rule
    applied to its own mesh layer; downstream layers are chained
    analytically and the result contracted with ``dL/d conj(E_out)``.
    """
    if not isinstance(loss, SampleLoss):
        raise TypeError(f"grad_loss_chained needs a per-sample loss, got {type(loss).__name__}")
    fields = propagate(net, np.asarray(e, dtype=np.complex128))
    g = loss.conj_grad(fields[-1], target)
    refs = list(net.param_refs() if params is None else params)

    def one(ref: ParamRef) -> GradientRecord:
        tangent = layer_field_psr(net, fields, ref)
        return GradientRecord(ref, chain_to_loss(net, fields, ref, tangent, g), PSR, 2)

    return GradientReport(_map(one, refs, threads))


def grad_loss_intensity_psr(
    net: Network,
    e,
    loss: SampleLoss,
    target=None,
    params: Optional[Sequence[ParamRef]] = None,
    threads: int = 1,
) -> GradientReport:
    """Loss gradient from measured intensities only (unitary-only networks).

    All output intensities are read at ``x +- pi/2``; the intensity rule gives
    ``dI/dx`` and the loss enters through ``dL/dI``.
    """
    if not net.is_unitary_only:
        raise ModeError("intensity-only gradients need a unitary-only network")
    if not loss.intensity_based:
        raise TypeError(f"{type(loss).__name__} is not a function of output intensities")
    e = np.asarray(e, dtype=np.complex128)
    out = forward_field(net, e)
    dl_di = loss.intensity_grad(out.real**2 + out.imag**2, target)
    refs = list(net.param_refs() if params is None else params)

    def intensities(ref, x):
        z = forward_field(net.with_phase(ref, x), e)
        return z.real**2 + z.imag**2

    def one(ref: ParamRef) -> GradientRecord:
        x = net.get_phase(ref)
        di = 0.5 * (intensities(ref, x + math.pi / 2.0) - intensities(ref, x - math.pi / 2.0))
        return GradientRecord(ref, float(np.dot(dl_di, di)), PSR, 2)

    return GradientReport(_map(one, refs, threads))

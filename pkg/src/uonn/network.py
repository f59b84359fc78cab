"""Layered UONN: mesh layers, optional detection and activation layers, readout.

Two forward modes are supported. ``forward_field`` passes the complex field
through every layer untouched by detectors. ``forward_intensity`` reads out
intensities and lets intermediate ``Detection`` layers convert the field to
real amplitudes before the next layer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .field import DimensionError, as_field, power, random_unitary
from .mesh import (
    CLEMENTS,
    MeshLayout,
    apply_placements,
    clements_layout,
    decompose,
    layout_from_dict,
    layout_to_dict,
    mesh_unitary,
    reck_layout,
)
from .optics import MZIParams

AMPLITUDE = "amplitude"
INTENSITY = "intensity"
ACTIVATIONS = ("modsquare", "identity")
THETA, PHI, INPUT_PHASE = "theta", "phi", "input_phase"


class ModeError(RuntimeError):
    """A layer is incompatible with the requested forward/gradient mode."""


@dataclass(frozen=True)
class MeshLayer:
    layout: MeshLayout

    @property
    def n_modes(self) -> int:
        return self.layout.n_modes


@dataclass(frozen=True)
class Detection:
    """Photodetection followed by re-injection of the detected signal.

    ``reinject="amplitude"`` feeds ``sqrt(I)`` with zero phase to the next
    layer (power preserving); ``"intensity"`` feeds ``I`` itself.
    """

    reinject: str = AMPLITUDE

    def __post_init__(self):
        if self.reinject not in (AMPLITUDE, INTENSITY):
            raise ValueError(f"unknown detection re-injection {self.reinject!r}")

    def __call__(self, e: np.ndarray) -> np.ndarray:
        i = e.real**2 + e.imag**2
        out = np.sqrt(i) if self.reinject == AMPLITUDE else i
        return out.astype(np.complex128)


@dataclass(frozen=True)
class Activation:
    name: str = "modsquare"

    def __post_init__(self):
        if self.name not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.name!r}; expected one of {ACTIVATIONS}")

    def __call__(self, e: np.ndarray) -> np.ndarray:
        if self.name == "identity":
            return e
        return (e.real**2 + e.imag**2).astype(np.complex128)


Layer = Union[MeshLayer, Detection, Activation]


@dataclass(frozen=True)
class ParamRef:
    """Address of one phase: ``which`` is theta/phi of MZI ``index`` or the screen phase of mode ``index``."""

    layer: int
    index: int
    which: str

    def __str__(self) -> str:
        return f"L{self.layer}.{self.which}[{self.index}]"


@dataclass(frozen=True)
class Observable:
    """Diagonal Hermitian measurement matrix."""

    diag: tuple[float, ...]

    def __post_init__(self):
        d = tuple(float(x) for x in self.diag)
        if not d or not all(math.isfinite(x) for x in d):
            raise ValueError("observable diagonal must be non-empty and finite")
        object.__setattr__(self, "diag", d)

    @classmethod
    def mode(cls, k: int, n: int) -> "Observable":
        """Projector on mode ``k`` (``Z1`` is ``mode(0, 2)``, ``Z2`` is ``mode(1, 2)``)."""
        d = [0.0] * n
        d[k] = 1.0
        return cls(tuple(d))

    @property
    def n_modes(self) -> int:
        return len(self.diag)


@dataclass(frozen=True)
class Network:
    n_modes: int
    layers: tuple[Layer, ...] = ()

    def __post_init__(self):
        layers = tuple(self.layers)
        for i, layer in enumerate(layers):
            if isinstance(layer, MeshLayer):
                if layer.n_modes != self.n_modes:
                    raise DimensionError(
                        f"layer {i} has {layer.n_modes} modes, network has {self.n_modes}"
                    )
            elif not isinstance(layer, (Detection, Activation)):
                raise TypeError(f"layer {i} has unsupported type {type(layer).__name__}")
        object.__setattr__(self, "layers", layers)

    @property
    def is_unitary_only(self) -> bool:
        return all(isinstance(layer, MeshLayer) for layer in self.layers)

    def mesh_indices(self) -> list[int]:
        return [i for i, layer in enumerate(self.layers) if isinstance(layer, MeshLayer)]

    def param_refs(self) -> list[ParamRef]:
        """Every trainable phase, in the order used by :meth:`parameters`."""
        refs = []
        for i in self.mesh_indices():
            layout = self.layers[i].layout
            for j in range(len(layout.placements)):
                refs.append(ParamRef(i, j, THETA))
                refs.append(ParamRef(i, j, PHI))
            refs.extend(ParamRef(i, m, INPUT_PHASE) for m in range(layout.n_modes))
        return refs

    def parameters(self) -> np.ndarray:
        chunks = [self.layers[i].layout.parameters() for i in self.mesh_indices()]
        return np.concatenate(chunks) if chunks else np.zeros(0)

    def with_parameters(self, values) -> "Network":
        values = np.asarray(values, dtype=float)
        layers = list(self.layers)
        pos = 0
        for i in self.mesh_indices():
            layout = layers[i].layout
            k = layout.n_params
            layers[i] = MeshLayer(layout.with_parameters(values[pos : pos + k]))
            pos += k
        if pos != values.size:
            raise ValueError(f"expected {pos} phases, got {values.size}")
        return Network(self.n_modes, tuple(layers))

    def _resolve(self, ref: ParamRef) -> MeshLayout:
        if not 0 <= ref.layer < len(self.layers) or not isinstance(self.layers[ref.layer], MeshLayer):
            raise KeyError(f"{ref}: layer {ref.layer} is not a mesh layer")
        layout = self.layers[ref.layer].layout
        limit = layout.n_modes if ref.which == INPUT_PHASE else len(layout.placements)
        if ref.which not in (THETA, PHI, INPUT_PHASE) or not 0 <= ref.index < limit:
            raise KeyError(f"{ref}: no such phase")
        return layout

    def get_phase(self, ref: ParamRef) -> float:
        layout = self._resolve(ref)
        if ref.which == INPUT_PHASE:
            return layout.input_phases[ref.index]
        return getattr(layout.placements[ref.index], ref.which)

    def with_phase(self, ref: ParamRef, value: float) -> "Network":
        layout = self._resolve(ref)
        if ref.which == INPUT_PHASE:
            phases = list(layout.input_phases)
            phases[ref.index] = value
            layout = replace(layout, input_phases=tuple(phases))
        else:
            placements = list(layout.placements)
            p = placements[ref.index]
            placements[ref.index] = MZIParams(p.top, **{THETA: p.theta, PHI: p.phi, ref.which: value})
            layout = replace(layout, placements=tuple(placements))
        layers = list(self.layers)
        layers[ref.layer] = MeshLayer(layout)
        return Network(self.n_modes, tuple(layers))

    def shifted(self, ref: ParamRef, delta: float) -> "Network":
        return self.with_phase(ref, self.get_phase(ref) + delta)

    def unitary(self) -> np.ndarray:
        if not self.is_unitary_only:
            raise ModeError("network contains detection or activation layers and has no single unitary")
        u = np.eye(self.n_modes, dtype=np.complex128)
        for layer in self.layers:
            u = mesh_unitary(layer.layout) @ u
        return u


def mesh_network(layout: MeshLayout) -> Network:
    return Network(layout.n_modes, (MeshLayer(layout),))


def identity_network(n: int, depth: int = 1, scheme: str = CLEMENTS) -> Network:
    make = clements_layout if scheme == CLEMENTS else reck_layout
    return Network(n, tuple(MeshLayer(make(n)) for _ in range(depth)))


def random_network(n: int, depth: int, seed: int, scheme: str = CLEMENTS) -> Network:
    """Unitary-only network whose layers program Haar-random unitaries."""
    rng = np.random.default_rng(seed)
    layers = tuple(
        MeshLayer(decompose(random_unitary(n, int(rng.integers(2**31))), scheme)) for _ in range(depth)
    )
    return Network(n, layers)


def _check_input(net: Network, e) -> np.ndarray:
    e = as_field(e)
    if e.size != net.n_modes:
        raise DimensionError(f"input field has length {e.size}, network has {net.n_modes} modes")
    p = power(e)
    if abs(p - 1.0) > 1e-9:
        warnings.warn(f"input field power is {p:.6g}, not 1", stacklevel=3)
    return e


def apply_layer(layer: Layer, e: np.ndarray) -> np.ndarray:
    if isinstance(layer, MeshLayer):
        return apply_placements(layer.layout, e)
    return layer(e)


def forward_field(net: Network, e) -> np.ndarray:
    """Complex output field ``U_L ... U_1 E``; detection layers are not allowed."""
    e = _check_input(net, e)
    for i, layer in enumerate(net.layers):
        if isinstance(layer, Detection):
            raise ModeError(f"layer {i} is a detection layer; field output is undefined past it")
        e = apply_layer(layer, e)
    return e


def readout_layers(net: Network) -> tuple[Layer, ...]:
    """Layers before the intensity readout; a trailing detection is the readout itself."""
    layers = net.layers
    if layers and isinstance(layers[-1], Detection):
        layers = layers[:-1]
    return layers


def propagate(net: Network, e: np.ndarray) -> list[np.ndarray]:
    """Fields entering each readout layer, followed by the pre-readout field."""
    fields = [e]
    for layer in readout_layers(net):
        fields.append(apply_layer(layer, fields[-1]))
    return fields


def forward_intensity(net: Network, e) -> np.ndarray:
    e = _check_input(net, e)
    out = propagate(net, e)[-1]
    return out.real**2 + out.imag**2


def push_tangent(layers, fields, tangent: np.ndarray) -> np.ndarray:
    """Forward-mode derivative through ``layers``; ``fields[i]`` is the input of ``layers[i]``.

    Nonlinear layers produce real outputs, so their tangent is ``2 Re(conj(z) dz)``
    for ``|z|^2`` and ``Re(conj(z) dz) / |z|`` for ``|z|`` (taken as 0 at ``z = 0``).
    """
    t = tangent
    for layer, z in zip(layers, fields):
        if isinstance(layer, MeshLayer):
            t = apply_placements(layer.layout, t)
        elif isinstance(layer, Activation) and layer.name == "identity":
            continue
        else:
            dz = (np.conj(z) * t).real
            if isinstance(layer, Detection) and layer.reinject == AMPLITUDE:
                mag = np.abs(z)
                dz = np.divide(dz, mag, out=np.zeros_like(dz), where=mag > 0)
            else:
                dz = 2.0 * dz
            t = dz.astype(np.complex128)
    return t


def measure_observable(e, obs: Observable) -> float:
    """``Tr(O E E^dag)`` for diagonal ``O``, i.e. ``sum_k o_k |E_k|^2``."""
    e = as_field(e)
    if e.size != obs.n_modes:
        raise DimensionError(f"field has length {e.size}, observable has {obs.n_modes} modes")
    return float(np.dot(obs.diag, e.real**2 + e.imag**2))


# -- network file format ---------------------------------------------------


def network_to_dict(net: Network) -> dict:
    layers = []
    for layer in net.layers:
        if isinstance(layer, MeshLayer):
            layers.append({"kind": "mesh", "layout": layout_to_dict(layer.layout)})
        elif isinstance(layer, Detection):
            layers.append({"kind": "detection", "reinject": layer.reinject})
        else:
            layers.append({"kind": "activation", "activation": layer.name})
    return {"n_modes": net.n_modes, "layers": layers}


def network_from_dict(data: dict) -> Network:
    try:
        layers = []
        for spec in data["layers"]:
            kind = spec["kind"]
            if kind == "mesh":
                layers.append(MeshLayer(layout_from_dict(spec["layout"])))
            elif kind == "detection":
                layers.append(Detection(spec.get("reinject", AMPLITUDE)))
            elif kind == "activation":
                layers.append(Activation(spec.get("activation", "modsquare")))
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
        return Network(int(data["n_modes"]), tuple(layers))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed network: {exc!r}") from exc



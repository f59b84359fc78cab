"""Transfer matrices of the elementary devices and the composed MZI.

Conventions
-----------
* The beam splitter is the symmetric 50:50 coupler ``(1/sqrt2)[[1, i], [i, 1]]``.
* A phase shifter acts on the upper rail of its pair: ``diag(e^{i theta}, 1)``.
* An MZI is ``PS(phi) . BS . PS(theta) . BS``: ``theta`` is the internal
  phase (between the couplers) and ``phi`` the external phase on the output
  side of the upper rail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Generator of diag(e^{i theta}, 1) = exp(-i a theta G) with a = -1.
PHASE_GENERATOR = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)


def wrap_phase(x: float) -> float:
    """Map ``x`` into ``[0, 2 pi)``."""
    w = math.fmod(float(x), TWO_PI)
    if w < 0.0:
        w += TWO_PI
    # fmod of a value just below a multiple of 2 pi can round up to 2 pi
    return 0.0 if w >= TWO_PI else w


@dataclass(frozen=True)
class MZIParams:
    """One MZI: internal phase ``theta``, external phase ``phi``, upper mode ``top``.

    Phases are wrapped into ``[0, 2 pi)`` on construction.
    """

    top: int
    theta: float
    phi: float

    def __post_init__(self):
        if self.top < 0:
            raise ValueError(f"MZI top mode must be >= 0, got {self.top}")
        object.__setattr__(self, "top", int(self.top))
        object.__setattr__(self, "theta", wrap_phase(self.theta))
        object.__setattr__(self, "phi", wrap_phase(self.phi))


@dataclass(frozen=True)
class ShiftRuleSpec:
    """Two-eigenvalue shift rule ``df/dx = r [f(x + s) - f(x - s)]`` with ``s = pi / (4r)``.

    ``a`` is the constant in ``U = exp(-i a x H)`` and ``e0 < e1`` are the two
    eigenvalues of ``H``.
    """

    a: float
    e0: float
    e1: float
    r: float = field(init=False)
    shift: float = field(init=False)

    def __post_init__(self):
        if not self.e0 < self.e1:
            raise ValueError(f"eigenvalues must satisfy e0 < e1, got {self.e0}, {self.e1}")
        r = 0.5 * self.a * (self.e1 - self.e0)
        if r == 0.0:
            raise ValueError("shift constant r is zero; the generator has no shift rule")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "shift", math.pi / (4.0 * r))


def beam_splitter() -> np.ndarray:
    return (math.sqrt(2.0) / 2.0) * np.array([[1.0, 1j], [1j, 1.0]], dtype=np.complex128)


def phase_shifter(theta: float) -> np.ndarray:
    return np.array([[np.exp(1j * theta), 0.0], [0.0, 1.0]], dtype=np.complex128)


def mzi_matrix(theta: float, phi: float) -> np.ndarray:
    """Closed-form MZI transfer matrix for raw phase values."""
    et = np.exp(1j * theta)
    ep = np.exp(1j * phi)
    return 0.5 * np.array(
        [[ep * (et - 1.0), 1j * ep * (1.0 + et)], [1j * (et + 1.0), 1.0 - et]],
        dtype=np.complex128,
    )


def mzi_unitary(p: MZIParams) -> np.ndarray:
    return mzi_matrix(p.theta, p.phi)


def mzi_from_components(theta1: float, theta2: float) -> np.ndarray:
    """``U_PS2 . U_BS2 . U_PS1 . U_BS1``; equal to ``mzi_matrix(theta1, theta2)``."""
    bs = beam_splitter()
    return phase_shifter(theta2) @ bs @ phase_shifter(theta1) @ bs


def phase_shift_rule_spec() -> ShiftRuleSpec:
    """Shift rule of the optical phase shifter (``a = -1``, eigenvalues ``{0, 1}``).

    This gives ``r = -1/2`` and a shift of magnitude ``pi/2``. The rule
    ``r [f(x + pi/(4r)) - f(x - pi/(4r))]`` evaluated with the negative ``r``
    equals ``1/2 [f(x + pi/2) - f(x - pi/2)]``.
    """
    eigs = np.linalg.eigvalsh(PHASE_GENERATOR)
    return ShiftRuleSpec(a=-1.0, e0=float(eigs[0]), e1=float(eigs[1]))


def embed(block: np.ndarray, top: int, n: int) -> np.ndarray:
    """Embed a 2x2 block on modes ``(top, top + 1)`` of an ``n``-mode identity."""
    if not 0 <= top < n - 1:
        raise ValueError(f"mode pair ({top}, {top + 1}) outside {n} modes")
    m = np.eye(n, dtype=np.complex128)
    m[top : top + 2, top : top + 2] = block
    return m

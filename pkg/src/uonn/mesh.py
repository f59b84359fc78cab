"""Reck and Clements MZI meshes: assembly and decomposition.

A mesh realises ``U = T_K ... T_2 T_1 . diag(exp(i alpha))``: light first
meets the per-mode phase screen ``alpha``, then the MZIs in program order.
With the MZI's external phase sitting on its output side, the screen has to
be on the input side for the mesh to reach every unitary; a screen after the
last column would just duplicate the external phases there.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass

import numpy as np

from .field import DEFAULT_TOL, as_matrix, unitarity_residual
from .optics import MZIParams, mzi_matrix, wrap_phase

CLEMENTS = "clements"
RECK = "reck"
SCHEMES = (CLEMENTS, RECK)

DECOMPOSE_TOL = 1e-8
# Below this magnitude a nulling target counts as already zero.
_ZERO = 1e-14


class NonUnitaryError(ValueError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"matrix is not unitary: ||U^dag U - I||_F = {residual:.3e} > {tol:g}")
        self.residual = residual


def clements_tops(n: int) -> list[int]:
    """Upper-mode indices of the rectangular mesh, column by column."""
    tops = []
    for col in range(n):
        tops.extend(range(col % 2, n - 1, 2))
    return tops


def reck_tops(n: int) -> list[int]:
    """Upper-mode indices of the triangular mesh, one descending diagonal at a time."""
    return [t for d in range(n - 1) for t in range(n - 2, d - 1, -1)]


_TEMPLATES = {CLEMENTS: clements_tops, RECK: reck_tops}


@dataclass(frozen=True)
class MeshLayout:
    """An MZI program on ``n_modes`` modes plus the input phase screen."""

    scheme: str
    n_modes: int
    placements: tuple[MZIParams, ...]
    input_phases: tuple[float, ...]

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown mesh scheme {self.scheme!r}; expected one of {SCHEMES}")
        n = int(self.n_modes)
        if n < 2:
            raise ValueError(f"a mesh needs at least 2 modes, got {n}")
        placements = tuple(self.placements)
        expected = _TEMPLATES[self.scheme](n)
        got = [p.top for p in placements]
        if got != expected:
            raise ValueError(
                f"{self.scheme} layout on {n} modes needs tops {expected}, got {got}"
            )
        phases = tuple(wrap_phase(a) for a in self.input_phases)
        if len(phases) != n:
            raise ValueError(f"expected {n} input phases, got {len(phases)}")
        object.__setattr__(self, "n_modes", n)
        object.__setattr__(self, "placements", placements)
        object.__setattr__(self, "input_phases", phases)

    @property
    def n_params(self) -> int:
        return 2 * len(self.placements) + self.n_modes

    def parameters(self) -> np.ndarray:
        """Flat phase vector ``[theta_0, phi_0, theta_1, phi_1, ..., alpha_0, ...]``."""
        out = [x for p in self.placements for x in (p.theta, p.phi)]
        out.extend(self.input_phases)
        return np.array(out, dtype=float)

    def with_parameters(self, values) -> "MeshLayout":
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} phases, got shape {values.shape}")
        k = len(self.placements)
        placements = tuple(
            MZIParams(p.top, values[2 * i], values[2 * i + 1]) for i, p in enumerate(self.placements)
        )
        return MeshLayout(self.scheme, self.n_modes, placements, tuple(values[2 * k :]))


def _identity_layout(scheme: str, n: int) -> MeshLayout:
    if n < 2:
        raise ValueError(f"a mesh needs at least 2 modes, got {n}")
    tops = _TEMPLATES[scheme](n)
    # theta = phi = pi is the identity MZI
    return MeshLayout(scheme, n, tuple(MZIParams(t, math.pi, math.pi) for t in tops), (0.0,) * n)


def clements_layout(n: int) -> MeshLayout:
    return _identity_layout(CLEMENTS, n)


def reck_layout(n: int) -> MeshLayout:
    return _identity_layout(RECK, n)


def random_layout(scheme: str, n: int, rng: np.random.Generator) -> MeshLayout:
    """Layout with every phase drawn uniformly from ``[0, 2 pi)``."""
    base = _identity_layout(scheme, n)
    return base.with_parameters(rng.uniform(0.0, 2.0 * math.pi, base.n_params))


def apply_placements(layout: MeshLayout, state: np.ndarray) -> np.ndarray:
    """Apply the screen and every MZI to ``state`` (a field or a matrix of column fields)."""
    out = np.exp(1j * np.asarray(layout.input_phases)).reshape((-1,) + (1,) * (state.ndim - 1)) * state
    for p in layout.placements:
        t = p.top
        out[t : t + 2] = mzi_matrix(p.theta, p.phi) @ out[t : t + 2]
    return out


def mesh_unitary(layout: MeshLayout) -> np.ndarray:
    return apply_placements(layout, np.eye(layout.n_modes, dtype=np.complex128))


# -- decomposition ---------------------------------------------------------


def _null_from_left(u: np.ndarray, r: int, col: int) -> tuple[float, float]:
    """Find T with ``(T^dag u)[r + 1, col] = 0`` and apply ``T^dag`` to rows ``r, r + 1``."""
    a, b = u[r, col], u[r + 1, col]
    if abs(b) <= _ZERO:
        theta, phi = math.pi, math.pi
    else:
        theta = 2.0 * math.atan2(abs(a), abs(b))
        phi = np.angle(a) - np.angle(b)
    t = mzi_matrix(theta, phi)
    u[r : r + 2] = t.conj().T @ u[r : r + 2]
    return theta, phi


def _null_from_right(u: np.ndarray, row: int, c: int) -> tuple[float, float]:
    """Find T with ``(u T)[row, c] = 0`` and apply ``T`` to columns ``c, c + 1``."""
    a, b = u[row, c], u[row, c + 1]
    if abs(a) <= _ZERO:
        theta, phi = math.pi, math.pi
    else:
        theta = 2.0 * math.atan2(abs(b), abs(a))
        phi = np.angle(b) - np.angle(a) + math.pi
    t = mzi_matrix(theta, phi)
    u[:, c : c + 2] = u[:, c : c + 2] @ t
    return theta, phi


def _canonical_order(program: list[MZIParams], scheme: str, n: int) -> tuple[MZIParams, ...]:
    """Reorder a program into the scheme's template order.

    Only MZIs on disjoint mode pairs are reordered relative to one another:
    the k-th MZI on a given pair stays the k-th one on that pair.
    """
    queues = defaultdict(deque)
    for p in program:
        queues[p.top].append(p)
    return tuple(queues[t].popleft() for t in _TEMPLATES[scheme](n))


def _check_unitary(u, tol: float) -> np.ndarray:
    u = as_matrix(u)
    res = unitarity_residual(u)
    if res > tol:
        raise NonUnitaryError(res, tol)
    if u.shape[0] < 2:
        raise ValueError("decomposition needs at least 2 modes")
    return u.copy()


def reck_decompose(u, tol: float = DECOMPOSE_TOL) -> MeshLayout:
    """Triangular decomposition by nulling the lower triangle from the corner inward."""
    u = _check_unitary(u, tol)
    n = u.shape[0]
    ops = []
    for g in range(1, n):
        for k in range(g):
            r = n - g + k - 1
            theta, phi = _null_from_left(u, r, k)
            ops.append(MZIParams(r, theta, phi))
    # T_1^dag ... applied first is the last MZI seen by the light
    program = ops[::-1]
    alpha = np.angle(np.diag(u))
    return MeshLayout(RECK, n, _canonical_order(program, RECK, n), tuple(alpha))


def clements_decompose(u, tol: float = DECOMPOSE_TOL) -> MeshLayout:
    """Rectangular decomposition, nulling anti-diagonals alternately from each side.

    Right-hand nulling leaves ``L . D . R^dag`` with the MZIs R on the wrong
    side of the diagonal. Each ``D T(theta, phi)^dag`` is rewritten as
    ``T(theta, phi') D'`` with ``phi' = arg(d1 / d2)``,
    ``d1' = -exp(-i(theta + phi)) d2`` and ``d2' = -exp(-i theta) d2``
    (in the bar state ``theta = pi`` any ``phi'`` works and ``phi`` is kept).
    """
    u = _check_unitary(u, tol)
    n = u.shape[0]
    left, right = [], []
    for i in range(n - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                c = i - j
                theta, phi = _null_from_right(u, n - 1 - j, c)
                right.append(MZIParams(c, theta, phi))
        else:
            for j in range(i + 1):
                r = n - 2 - i + j
                theta, phi = _null_from_left(u, r, j)
                left.append(MZIParams(r, theta, phi))

    d = np.diag(u).copy()
    moved = []
    for p in reversed(right):
        t = p.top
        d1, d2 = d[t], d[t + 1]
        k = -np.exp(-1j * p.theta)
        if abs(math.cos(p.theta / 2.0)) <= _ZERO:
            # bar state: phi' is free, keep phi so identity MZIs stay (pi, pi)
            phi_new = p.phi
            d[t] = k * np.exp(-2j * p.phi) * d1
        else:
            phi_new = np.angle(d1 / d2)
            d[t] = k * np.exp(-1j * p.phi) * d2
        d[t + 1] = k * d2
        moved.append(MZIParams(t, p.theta, phi_new))
    # U = T_l1 ... T_lm . T(r_n') ... T(r_1') . D
    program = moved[::-1] + left[::-1]
    return MeshLayout(CLEMENTS, n, _canonical_order(program, CLEMENTS, n), tuple(np.angle(d)))


def decompose(u, scheme: str = CLEMENTS, tol: float = DECOMPOSE_TOL) -> MeshLayout:
    if scheme == CLEMENTS:
        return clements_decompose(u, tol)
    if scheme == RECK:
        return reck_decompose(u, tol)
    raise ValueError(f"unknown mesh scheme {scheme!r}; expected one of {SCHEMES}")


def round_trip_residual(u, layout: MeshLayout) -> float:
    return float(np.linalg.norm(mesh_unitary(layout) - np.asarray(u), "fro"))


# -- layout file format ----------------------------------------------------


def layout_to_dict(layout: MeshLayout) -> dict:
    return {
        "scheme": layout.scheme,
        "n_modes": layout.n_modes,
        "placements": [{"top": p.top, "theta": p.theta, "phi": p.phi} for p in layout.placements],
        "input_phases": list(layout.input_phases),
    }


def layout_from_dict(data: dict) -> MeshLayout:
    try:
        placements = tuple(
            MZIParams(int(p["top"]), float(p["theta"]), float(p["phi"])) for p in data["placements"]
        )
        return MeshLayout(
            str(data["scheme"]),
            int(data["n_modes"]),
            placements,
            tuple(float(a) for a in data["input_phases"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed mesh layout: {exc!r}") from exc


__all__ = [
    "CLEMENTS",
    "RECK",
    "DEFAULT_TOL",
    "MeshLayout",
    "NonUnitaryError",
    "clements_layout",
    "reck_layout",
    "random_layout",
    "mesh_unitary",
    "clements_decompose",
    "reck_decompose",
    "decompose",
    "round_trip_residual",
    "layout_to_dict",
    "layout_from_dict",
]

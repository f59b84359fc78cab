"""Complex field and matrix primitives shared by every other module.

Fields are 1-D ``complex128`` arrays and matrices are 2-D ``complex128``
arrays. Everything here is a pure function; inputs are never modified.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when operand shapes do not line up."""


def as_field(values) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D complex field of length >= 1."""
    v = np.asarray(values, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"field must be a non-empty 1-D sequence, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("field contains non-finite amplitudes")
    return v


def as_matrix(values) -> np.ndarray:
    m = np.asarray(values, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"matrix must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains non-finite entries")
    return m


def power(v) -> float:
    """Total optical power ``sum |v_k|^2``."""
    v = np.asarray(v)
    return float(np.sum(v.real**2 + v.imag**2))


def adjoint(m) -> np.ndarray:
    return np.conj(np.asarray(m)).T


def mat_apply(u, v) -> np.ndarray:
    """Return ``u @ v``, rejecting mismatched shapes with both dimensions named."""
    u = as_matrix(u)
    v = as_field(v)
    if u.shape[1] != v.shape[0]:
        raise DimensionError(
            f"cannot apply {u.shape[0]}x{u.shape[1]} matrix to field of length {v.shape[0]}"
        )
    return u @ v


def unitarity_residual(m) -> float:
    """Frobenius norm of ``m^dagger m - I``."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"unitarity is only defined for square matrices, got {m.shape}")
    return float(np.linalg.norm(adjoint(m) @ m - np.eye(m.shape[0]), "fro"))


def is_unitary(m, tol: float = DEFAULT_TOL) -> bool:
    return unitarity_residual(m) <= tol


def random_unitary(n: int, seed: int) -> np.ndarray:
    """Haar-random ``n x n`` unitary, a pure function of ``(n, seed)``.

    Draws a complex Ginibre matrix, takes its QR factorisation and rescales
    the columns of Q by the phases of diag(R) so the result is Haar
    distributed rather than biased by the QR sign convention.
    """
    if n < 1:
        raise ValueError(f"unitary dimension must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_field(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit-power field drawn uniformly from the complex sphere."""
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.sqrt(power(z))


# Shared text serialisation: a complex number is [re, im]; matrices are row-major.

def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(pair) -> complex:
    if len(pair) != 2:
        raise ValueError(f"complex value must be a [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def field_to_json(v) -> list[list[float]]:
    return [complex_to_json(z) for z in np.asarray(v).ravel()]


def field_from_json(data) -> np.ndarray:
    return as_field([complex_from_json(p) for p in data])


def matrix_to_json(m) -> list[list[list[float]]]:
    return [field_to_json(row) for row in np.asarray(m)]


def matrix_from_json(data) -> np.ndarray:
    rows = [[complex_from_json(p) for p in row] for row in data]
    if rows and len({len(r) for r in rows}) != 1:
        raise DimensionError("matrix rows have unequal lengths")
    return as_matrix(rows)

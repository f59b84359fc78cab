"""Training objectives.

Per-sample losses act on the pre-readout output field ``E`` and expose the
conjugate Wirtinger derivative ``dL/d conj(E)``, so for any phase ``x``

    dL/dx = 2 Re( sum_k conj(dL/d conj(E_k)) * dE_k/dx ).

Losses that depend on ``E`` only through the intensities ``|E_k|^2`` also
expose ``dL/dI`` for use with the intensity shift rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .field import DimensionError, as_field, as_matrix
from .network import Network, Observable


def _intensity(e: np.ndarray) -> np.ndarray:
    return e.real**2 + e.imag**2


class SampleLoss:
    intensity_based = False

    def value(self, e: np.ndarray, target) -> float:
        raise NotImplementedError

    def conj_grad(self, e: np.ndarray, target) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class IntensityMSE(SampleLoss):
    """Mean squared error between output intensities and the sample's target intensities."""

    intensity_based = True

    def _target(self, e, target) -> np.ndarray:
        t = np.asarray(target, dtype=float)
        if t.shape != e.shape:
            raise DimensionError(f"target intensities have shape {t.shape}, output has {e.shape}")
        return t

    def value(self, e, target) -> float:
        return float(np.mean((_intensity(e) - self._target(e, target)) ** 2))

    def intensity_grad(self, i, target) -> np.ndarray:
        t = np.asarray(target, dtype=float)
        return 2.0 * (i - t) / i.size

    def conj_grad(self, e, target) -> np.ndarray:
        return self.intensity_grad(_intensity(e), self._target(e, target)) * e


@dataclass(frozen=True)
class ObservableTarget(SampleLoss):
    """``(<O> - target)^2``, or ``<O>`` itself when ``target`` is None."""

    observable: Observable
    target: Optional[float] = None

    intensity_based = True

    def _check(self, e):
        if e.size != self.observable.n_modes:
            raise DimensionError(f"output has {e.size} modes, observable has {self.observable.n_modes}")

    def value(self, e, target=None) -> float:
        self._check(e)
        m = float(np.dot(self.observable.diag, _intensity(e)))
        return m if self.target is None else (m - self.target) ** 2

    def intensity_grad(self, i, target=None) -> np.ndarray:
        o = np.asarray(self.observable.diag)
        if self.target is None:
            return o
        return 2.0 * (float(np.dot(o, i)) - self.target) * o

    def conj_grad(self, e, target=None) -> np.ndarray:
        self._check(e)
        return self.intensity_grad(_intensity(e)) * e


@dataclass(frozen=True)
class FieldMSE(SampleLoss):
    """``sum_k |E_k - t_k|^2`` against a complex target field."""

    def value(self, e, target) -> float:
        d = e - as_field(target)
        return float(np.sum(_intensity(d)))

    def conj_grad(self, e, target) -> np.ndarray:
        return e - as_field(target)


@dataclass(frozen=True, eq=False)
class UnitaryFidelity:
    """``1 - |Tr(V^dag U)|^2 / N^2`` for a unitary-only network ``U``; zero iff ``U = e^{ia} V``."""

    target: np.ndarray

    def __post_init__(self):
        t = as_matrix(self.target)
        if t.shape[0] != t.shape[1]:
            raise DimensionError(f"target unitary must be square, got {t.shape}")
        object.__setattr__(self, "target", t)

    def of_unitary(self, u: np.ndarray) -> float:
        n = self.target.shape[0]
        if u.shape != self.target.shape:
            raise DimensionError(f"network unitary is {u.shape}, target is {self.target.shape}")
        overlap = np.trace(self.target.conj().T @ u)
        return float(1.0 - abs(overlap) ** 2 / n**2)

    def value_of(self, net: Network) -> float:
        return self.of_unitary(net.unitary())


LossSpec = SampleLoss | UnitaryFidelity

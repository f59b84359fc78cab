"""Gradient-descent training of mesh networks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .field import random_field, random_unitary
from .losses import IntensityMSE, LossSpec, SampleLoss, UnitaryFidelity
from .network import Network, propagate
from .oracles import FDConfig, grad_fidelity_analytic, grad_loss_analytic, grad_network_fd
from .optics import phase_shift_rule_spec
from .psr import (
    ANALYTIC,
    FD,
    PSR,
    GradientRecord,
    GradientReport,
    grad_loss_chained,
    grad_loss_intensity_psr,
    shift_rule_general,
)

GRAD_METHODS = (PSR, FD, ANALYTIC)
EARLY_STOP = 1e-10


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int, value: float):
        super().__init__(f"loss became non-finite ({value}) at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 100
    batch_size: int = 0  # 0 means full batch
    seed: int = 0
    grad_method: str = PSR
    fd_step: float = 1e-6
    init: str = "random"  # or "keep" to start from the network's current phases
    threads: int = 1

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not self.lr > 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.grad_method not in GRAD_METHODS:
            raise ValueError(f"grad_method must be one of {GRAD_METHODS}, got {self.grad_method!r}")
        if self.init not in ("random", "keep"):
            raise ValueError(f"init must be 'random' or 'keep', got {self.init!r}")
        FDConfig(self.fd_step)


@dataclass
class TrainHistory:
    iters: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    final: Optional[Network] = None
    final_loss: float = math.nan

    def __len__(self) -> int:
        return len(self.iters)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "loss", "grad_norm"])
            for it, loss, g in zip(self.iters, self.losses, self.grad_norms):
                w.writerow([it, f"{loss:.17g}", f"{g:.17g}"])


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return params - self.lr * grad


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return SGD(cfg.lr)
    return Adam(cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)


def loss_eval(net: Network, sample, loss: LossSpec) -> float:
    """Loss of one ``(field, target)`` sample; fidelity losses ignore the sample."""
    if isinstance(loss, UnitaryFidelity):
        return loss.value_of(net)
    e, target = sample
    return loss.value(propagate(net, np.asarray(e, dtype=np.complex128))[-1], target)


def dataset_loss(net: Network, dataset: Sequence, loss: LossSpec) -> float:
    if isinstance(loss, UnitaryFidelity):
        return loss.value_of(net)
    return float(np.mean([loss_eval(net, s, loss) for s in dataset]))


def _fidelity_psr(net: Network, loss: UnitaryFidelity) -> GradientReport:
    # |Tr(V^dag U(x))|^2 has a single harmonic in every phase, so the two-point rule is exact
    spec = phase_shift_rule_spec()
    records = []
    for ref in net.param_refs():
        value = shift_rule_general(lambda x: loss.value_of(net.with_phase(ref, x)), net.get_phase(ref), spec)
        records.append(GradientRecord(ref, value, PSR, 2))
    return GradientReport(records)


def sample_gradient(net: Network, sample, loss: SampleLoss, method: str, fd_step: float = 1e-6, threads: int = 1):
    e, target = sample
    if method == PSR:
        if net.is_unitary_only and loss.intensity_based:
            return grad_loss_intensity_psr(net, e, loss, target, threads=threads)
        return grad_loss_chained(net, e, loss, target, threads=threads)
    if method == ANALYTIC:
        return grad_loss_analytic(net, e, loss, target)
    return grad_network_fd(lambda n: loss_eval(n, sample, loss), net, cfg=FDConfig(fd_step))


def loss_gradient(net: Network, batch: Sequence, loss: LossSpec, method: str, fd_step: float = 1e-6, threads: int = 1):
    """Batch-mean loss and its gradient with respect to ``net.parameters()``."""
    if isinstance(loss, UnitaryFidelity):
        if method == PSR:
            report = _fidelity_psr(net, loss)
        elif method == ANALYTIC:
            report = grad_fidelity_analytic(net, loss)
        else:
            report = grad_network_fd(loss.value_of, net, cfg=FDConfig(fd_step))
        return loss.value_of(net), report.values()
    values, grads = [], []
    for sample in batch:
        values.append(loss_eval(net, sample, loss))
        grads.append(sample_gradient(net, sample, loss, method, fd_step, threads).values())
    return float(np.mean(values)), np.mean(grads, axis=0)


def train(net: Network, dataset: Sequence, loss: LossSpec, cfg: TrainConfig) -> TrainHistory:
    """Optimise every phase of ``net``; deterministic for a fixed ``cfg.seed``.

    ``dataset`` holds ``(field, target)`` pairs and may be empty for a
    :class:`UnitaryFidelity` loss, which depends on the network alone.
    """
    dataset = list(dataset)
    if not dataset and not isinstance(loss, UnitaryFidelity):
        raise ValueError("training needs a non-empty dataset")
    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "random":
        net = net.with_parameters(rng.uniform(0.0, 2.0 * math.pi, net.parameters().size))
    opt = make_optimizer(cfg)
    history = TrainHistory()
    for it in range(cfg.iterations):
        if cfg.batch_size and cfg.batch_size < len(dataset):
            batch = [dataset[i] for i in rng.choice(len(dataset), cfg.batch_size, replace=False)]
        else:
            batch = dataset
        value, grad = loss_gradient(net, batch, loss, cfg.grad_method, cfg.fd_step, cfg.threads)
        if not math.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DivergenceError(it, value)
        history.iters.append(it)
        history.losses.append(value)
        history.grad_norms.append(float(np.linalg.norm(grad)))
        if value < EARLY_STOP:
            break
        net = net.with_parameters(opt.step(net.parameters(), grad))
    history.final = net
    history.final_loss = dataset_loss(net, dataset, loss)
    return history


def make_unitary_task(n: int, seed: int):
    """``4n`` random unit-power inputs labelled by the intensities of ``random_unitary(n, seed)``."""
    if n < 2:
        raise ValueError(f"task needs at least 2 modes, got {n}")
    hidden = random_unitary(n, seed)
    rng = np.random.default_rng([seed, n])
    dataset = []
    for _ in range(4 * n):
        e = random_field(n, rng)
        out = hidden @ e
        dataset.append((e, out.real**2 + out.imag**2))
    return dataset, IntensityMSE()

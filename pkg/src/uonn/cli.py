"""Command-line front end: ``uonn {decompose,gradcheck,train,forward} --config FILE``.

Exit codes: 0 success, 1 unreadable input or config, 2 validation failure
(non-unitary matrix), 3 gradient check failed, 4 training diverged,
5 network incompatible with the requested mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .field import DimensionError, random_unitary
from .losses import ObservableTarget, UnitaryFidelity
from .mesh import CLEMENTS, NonUnitaryError, decompose, round_trip_residual
from .network import (
    ModeError,
    Network,
    Observable,
    forward_field,
    forward_intensity,
    identity_network,
    propagate,
)
from .oracles import FDConfig, grad_analytic, grad_loss_analytic, grad_network_fd
from .psr import CountingForward, grad_field_psr, grad_intensity_psr, grad_loss_chained
from .trainer import DivergenceError, TrainConfig, make_unitary_task, train

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_GRADCHECK, EXIT_DIVERGED, EXIT_MODE = range(6)


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _load_config(args) -> tuple[dict, Path]:
    base = Path(".")
    cfg = {}
    if args.config:
        base = Path(args.config).parent
        try:
            cfg = io.read_json(args.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return cfg, base


def _path(cfg: dict, key: str, base: Path) -> Path:
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    p = Path(cfg[key])
    return p if p.is_absolute() else base / p


def _network(cfg: dict, base: Path) -> Network:
    path = _path(cfg, "network_path", base)
    try:
        return io.load_network(path)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load network {path}: {exc}") from exc


def _field(cfg: dict, n: int) -> np.ndarray:
    try:
        e = io.load_field(cfg.get("input_field", [1.0] + [0.0] * (n - 1)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad input_field: {exc}") from exc
    if e.size != n:
        raise ConfigError(f"input_field has {e.size} modes, network has {n}")
    return e


def cmd_decompose(cfg: dict, base: Path, args) -> int:
    src = _path(cfg, "input_matrix_path", base)
    try:
        u = io.load_matrix(src)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load matrix {src}: {exc}") from exc
    scheme = cfg.get("scheme", CLEMENTS)
    try:
        layout = decompose(u, scheme)
    except NonUnitaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"unitarity residual: {_fmt(exc.residual)}")
        return EXIT_INVALID
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.output) / "layout.json" if args.output else _path(cfg, "output_path", base)
    io.save_layout(out, layout)
    print(f"scheme: {scheme}")
    print(f"round-trip residual: {_fmt(round_trip_residual(u, layout))}")
    print(f"layout written to {out}")
    return EXIT_OK


def cmd_gradcheck(cfg: dict, base: Path, args) -> int:
    net = _network(cfg, base)
    e = _field(cfg, net.n_modes)
    obs = Observable(tuple(cfg.get("observable", Observable.mode(0, net.n_modes).diag)))
    if obs.n_modes != net.n_modes:
        raise ConfigError(f"observable has {obs.n_modes} modes, network has {net.n_modes}")
    tol = float(cfg.get("tolerance", 1e-9))
    if not tol > 0:
        raise ConfigError("tolerance must be positive")
    methods = cfg.get("methods", ["psr", "fd", "analytic"])
    fd_cfg = FDConfig(float(cfg.get("fd_step", 1e-6)))
    refs = net.param_refs()
    loss = ObservableTarget(obs)

    budget_ok = True
    field_residual = None
    if net.is_unitary_only:
        counter = CountingForward()
        psr = []
        for ref in refs:
            before = counter.calls
            psr.extend(grad_intensity_psr(net, e, obs, [ref], forward=counter, threads=args.threads).records)
            budget_ok &= counter.calls - before == 2
        psr = [r.value for r in psr]
        field_residual = 0.0
        for ref in refs:
            before = counter.calls
            d = grad_field_psr(net, e, ref, forward=counter)
            budget_ok &= counter.calls - before == 2
            field_residual = max(field_residual, float(np.max(np.abs(d - grad_analytic(net, e, ref)))))
    else:
        psr = list(grad_loss_chained(net, e, loss, threads=args.threads).values())
    analytic = list(grad_loss_analytic(net, e, loss).values())
    fd = None
    if "fd" in methods:
        fd = list(grad_network_fd(lambda n: loss.value(_readout(n, e)), net, cfg=fd_cfg).values())

    print(f"{'param':<22} {'psr':>25} {'fd':>25} {'analytic':>25}")
    for i, ref in enumerate(refs):
        fd_s = _fmt(fd[i]) if fd is not None else "-"
        print(f"{str(ref):<22} {_fmt(psr[i]):>25} {fd_s:>25} {_fmt(analytic[i]):>25}")
    diffs = np.abs(np.array(psr) - np.array(analytic)) if refs else np.zeros(0)
    worst = int(np.argmax(diffs)) if refs else None
    max_pa = float(diffs.max(initial=0.0))
    print(f"max |psr - analytic|: {_fmt(max_pa)}")
    if fd is not None:
        print(f"max |fd - psr|: {_fmt(float(np.max(np.abs(np.array(fd) - psr), initial=0.0)))} (h={fd_cfg.step:g})")
    if field_residual is not None:
        print(f"max |complex psr - analytic|: {_fmt(field_residual)}")
        print(f"forward evaluations per parameter: {'2 (ok)' if budget_ok else 'UNEXPECTED'}")
    if args.output:
        io.write_json(
            Path(args.output) / "gradcheck.json",
            {"params": [str(r) for r in refs], "psr": psr, "fd": fd, "analytic": analytic,
             "max_psr_analytic": max_pa, "max_field_residual": field_residual},
        )
    failed = max_pa > tol or (field_residual is not None and field_residual > tol) or not budget_ok
    if failed:
        where = str(refs[worst]) if worst is not None else "-"
        print(f"gradcheck FAILED: tolerance {tol:g} exceeded, worst parameter {where}", file=sys.stderr)
        return EXIT_GRADCHECK
    return EXIT_OK


def _readout(net: Network, e) -> np.ndarray:
    return propagate(net, e)[-1]


_SWAP = np.array([[0.0, 1j], [1j, 0.0]])


def _task(spec: dict, base: Path):
    kind = spec.get("kind", "unitary")
    n = int(spec.get("n_modes", 2))
    if kind == "unitary":
        return make_unitary_task(n, int(spec.get("seed", 0)))
    if kind == "fidelity":
        target = spec.get("target", "random")
        if target == "swap":
            u = _SWAP
        elif target == "random":
            u = random_unitary(n, int(spec.get("seed", 0)))
        else:
            u = io.load_matrix(_path(spec, "target", base))
        return [], UnitaryFidelity(u)
    raise ConfigError(f"unknown task kind {kind!r}")


def cmd_train(cfg: dict, base: Path, args) -> int:
    task = cfg.get("task", {})
    try:
        dataset, loss = _task(task, base)
        if "network_path" in cfg:
            net = _network(cfg, base)
        else:
            gen = cfg.get("generator", {})
            n = loss.target.shape[0] if isinstance(loss, UnitaryFidelity) else int(task.get("n_modes", 2))
            net = identity_network(int(gen.get("n_modes", n)), int(gen.get("depth", 1)), gen.get("scheme", CLEMENTS))
        tc = dict(cfg.get("train", {}))
        if args.seed is not None:
            tc["seed"] = args.seed
        if args.threads:
            tc["threads"] = args.threads
        tcfg = TrainConfig(**tc)
    except (TypeError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad train config: {exc}") from exc
    out = Path(args.output or cfg.get("output_dir", "."))
    if not out.is_absolute() and not args.output:
        out = base / out
    try:
        history = train(net, dataset, loss, tcfg)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ModeError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODE
    out.mkdir(parents=True, exist_ok=True)
    history.to_csv(out / "history.csv")
    io.save_network(out / "network.json", history.final)
    print(f"iterations: {len(history)}")
    print(f"final loss: {_fmt(history.final_loss)}")
    return EXIT_OK


def cmd_forward(cfg: dict, base: Path, args) -> int:
    net = _network(cfg, base)
    e = _field(cfg, net.n_modes)
    mode = cfg.get("mode", "field")
    try:
        if mode == "field":
            out = forward_field(net, e)
            print(io.dumps17([[z.real, z.imag] for z in out]))
        elif mode == "intensity":
            print(io.dumps17(list(forward_intensity(net, e))))
        else:
            raise ConfigError(f"unknown forward mode {mode!r}")
    except ModeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODE
    return EXIT_OK


COMMANDS = {
    "decompose": cmd_decompose,
    "gradcheck": cmd_gradcheck,
    "train": cmd_train,
    "forward": cmd_forward,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uonn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config document")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1, help="max concurrent shift evaluations")
        p.add_argument("--output", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, base = _load_config(args)
        return COMMANDS[args.command](cfg, base, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

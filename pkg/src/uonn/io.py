"""JSON persistence for matrices, fields, layouts and networks."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .field import field_from_json, matrix_from_json, matrix_to_json
from .mesh import MeshLayout, layout_from_dict, layout_to_dict
from .network import Network, network_from_dict, network_to_dict


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_json(path, data) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def dumps17(data) -> str:
    """Compact JSON with every float written to 17 significant digits."""
    if isinstance(data, (float, np.floating)):
        x = float(data)
        return f"{x:.17g}" if math.isfinite(x) else json.dumps(x)
    if isinstance(data, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps17(x) for x in data) + "]"
    if isinstance(data, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps17(v)}" for k, v in data.items()) + "}"
    if isinstance(data, np.integer):
        return str(int(data))
    return json.dumps(data)


def load_matrix(path) -> np.ndarray:
    data = read_json(path)
    if isinstance(data, dict):
        data = data["matrix"]
    return matrix_from_json(data)


def save_matrix(path, m) -> None:
    write_json(path, {"matrix": matrix_to_json(m)})


def load_field(data) -> np.ndarray:
    """Field from ``[[re, im], ...]`` or a list of real amplitudes."""
    if data and all(isinstance(x, (int, float)) for x in data):
        return field_from_json([[x, 0.0] for x in data])
    return field_from_json(data)


def save_layout(path, layout: MeshLayout) -> None:
    write_json(path, layout_to_dict(layout))


def load_layout(path) -> MeshLayout:
    return layout_from_dict(read_json(path))


def save_network(path, net: Network) -> None:
    write_json(path, network_to_dict(net))


def load_network(path) -> Network:
    return network_from_dict(read_json(path))

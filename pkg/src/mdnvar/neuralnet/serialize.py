"""Portable JSON form of a trained network.

Layout (format version 1)::

    {
      "format": "mdnvar-network",
      "version": 1,
      "config": {...NetworkConfig fields...},
      "seed": 911,
      "params": [
        {"name": "lstm_Wf", "shape": [7, 6], "values": [row-major floats]},
        ...
      ]
    }

Floats are written with ``repr`` precision, so a load/dump round trip is
exact and two identical fits produce byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from ..stats_dist import MixtureParams
from .network import NetworkConfig, NetworkParams, forward, forward_batch

FORMAT = "mdnvar-network"
VERSION = 1


@dataclass
class TrainedNetwork:
    config: NetworkConfig
    params: NetworkParams
    seed: int | None = None

    def predict(self, window) -> MixtureParams:
        return forward(window, self.params, self.config)

    def predict_batch(self, X):
        return forward_batch(X, self.params, self.config)


def to_dict(model: TrainedNetwork) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": model.config.to_dict(),
        "seed": model.seed,
        "params": [
            {"name": name, "shape": list(arr.shape), "values": [float(v) for v in arr.ravel()]}
            for name, arr in model.params.items()
        ],
    }


def from_dict(doc: dict) -> TrainedNetwork:
    if doc.get("format") != FORMAT:
        raise DataError(f"not a network file (format={doc.get('format')!r})")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported network file version {doc.get('version')!r}")
    config = NetworkConfig(**doc["config"])
    arrays = {}
    for entry in doc["params"]:
        values = np.array(entry["values"], dtype=float)
        shape = tuple(entry["shape"])
        if values.size != int(np.prod(shape)):
            raise DataError(f"{entry['name']}: {values.size} values for shape {shape}")
        arrays[entry["name"]] = values.reshape(shape)
    params = NetworkParams(arrays)
    try:
        params.check(config)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    return TrainedNetwork(config, params, doc.get("seed"))


def dumps(model: TrainedNetwork) -> str:
    return json.dumps(to_dict(model), indent=1) + "\n"


def loads(text: str) -> TrainedNetwork:
    return from_dict(json.loads(text))

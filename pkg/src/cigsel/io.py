"""File formats: sample-block CSV and JSON helpers."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .model import SampleBlock


def write_samples(path: str | Path, X: SampleBlock) -> None:
    """Header line ``p,N`` then ``N + 1`` rows of ``p`` values (time runs down the rows)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"{X.p},{X.N}\n")
        for row in X.values.T:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_samples(path: str | Path) -> SampleBlock:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        try:
            p, N = int(header[0]), int(header[1])
        except (IndexError, ValueError):
            raise InvalidInputError(f"{path}: first line must be 'p,N'") from None
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape != (N + 1, p):
        raise InvalidInputError(f"{path}: expected {N + 1} rows of {p} values, got {data.shape}")
    return SampleBlock(data.T)


def read_json(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path: str | Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text

"""JSON serialization for matrices, channels, instruments, and processes.

Matrix format: {"dims": [...], "re": [[...]], "im": [[...]]}, row-major.
Process format: {"registry": [{"label", "d_in", "d_out"}, ...],
                 "order": [...] | null, "matrix": <matrix>}.
Channel format: {"in_dims", "out_dims", "in_labels", "out_labels", "matrix"}.
Instrument format: {"outcomes": [...], "branches": [<channel>, ...]}.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .linalg import ComplexMatrix
from .objects import ChoiMap, Instrument
from .processes import ProcessMatrix, Site, SiteRegistry


def matrix_to_dict(m: ComplexMatrix) -> dict:
    return {
        "dims": list(m.dims),
        "re": np.real(m.array).tolist(),
        "im": np.imag(m.array).tolist(),
    }


def matrix_from_dict(d: dict) -> ComplexMatrix:
    arr = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
    return ComplexMatrix(arr, tuple(d["dims"]))


def choi_to_dict(c: ChoiMap) -> dict:
    return {
        "in_dims": list(c.in_dims),
        "out_dims": list(c.out_dims),
        "in_labels": list(c.in_labels) if c.in_labels else None,
        "out_labels": list(c.out_labels) if c.out_labels else None,
        "matrix": matrix_to_dict(c.mat),
    }


def choi_from_dict(d: dict) -> ChoiMap:
    return ChoiMap(
        matrix_from_dict(d["matrix"]),
        tuple(d["in_dims"]),
        tuple(d["out_dims"]),
        tuple(d["in_labels"]) if d.get("in_labels") else None,
        tuple(d["out_labels"]) if d.get("out_labels") else None,
    )


def instrument_to_dict(ins: Instrument) -> dict:
    return {
        "outcomes": list(ins.outcomes),
        "branches": [choi_to_dict(b) for b in ins.branches],
    }


def instrument_from_dict(d: dict) -> Instrument:
    return Instrument(
        tuple(choi_from_dict(b) for b in d["branches"]),
        tuple(d["outcomes"]),
    )


def registry_to_dict(reg: SiteRegistry) -> list[dict]:
    return [
        {"label": s.label, "d_in": s.d_in, "d_out": s.d_out} for s in reg.sites
    ]


def registry_from_dict(items: list[dict]) -> SiteRegistry:
    return SiteRegistry(
        tuple(Site(s["label"], s["d_in"], s["d_out"]) for s in items)
    )


def process_to_dict(w: ProcessMatrix) -> dict:
    return {
        "registry": registry_to_dict(w.registry),
        "order": list(w.order) if w.order else None,
        "matrix": matrix_to_dict(w.mat),
    }


def process_from_dict(d: dict) -> ProcessMatrix:
    return ProcessMatrix(
        matrix_from_dict(d["matrix"]),
        registry_from_dict(d["registry"]),
        tuple(d["order"]) if d.get("order") else None,
    )


def load_process(path: str) -> ProcessMatrix:
    with open(path) as f:
        return process_from_dict(json.load(f))


def save_process(w: ProcessMatrix, path: str) -> None:
    with open(path, "w") as f:
        json.dump(process_to_dict(w), f)

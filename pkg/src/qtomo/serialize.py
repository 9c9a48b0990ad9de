"""JSON (de)serialization for POMs, states, counts, channels and reports.

Complex entries are written as [re, im] pairs and matrices row-major, so every
file is inspectable and round-trips bit-exactly. Structural problems (missing
keys, malformed nesting) raise :class:`ParseError`; semantic problems (bad
dimensions, violated invariants) surface as plain ``ValueError`` from the
constructors.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .poms import Pom
from .sampling import CountsRecord, ProcessDataset
from .states import DensityMatrix
from .processes import ChoiOperator

__all__ = [
    "ParseError",
    "load_json",
    "dump_json",
    "matrix_to_json",
    "matrix_from_json",
    "pom_to_json",
    "pom_from_json",
    "state_to_json",
    "state_from_json",
    "choi_to_json",
    "choi_from_json",
    "counts_to_json",
    "counts_from_json",
    "inputs_to_json",
    "inputs_from_json",
    "dataset_to_json",
    "dataset_from_json",
]


class ParseError(ValueError):
    """A file failed to parse against its schema."""


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def dump_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def _require(obj, key, what):
    if not isinstance(obj, dict):
        raise ParseError(f"{what} must be a JSON object")
    if key not in obj:
        raise ParseError(f"{what} is missing required key '{key}'")
    return obj[key]


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(obj, what: str = "matrix") -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise ParseError(f"{what} must be a non-empty list of rows")
    width = None
    rows = []
    for row in obj:
        if not isinstance(row, list) or (width is not None and len(row) != width):
            raise ParseError(f"{what} rows must be equal-length lists")
        width = len(row)
        try:
            rows.append([complex(float(z[0]), float(z[1])) for z in row])
        except (TypeError, IndexError, ValueError) as exc:
            raise ParseError(f"{what} entries must be [re, im] pairs") from exc
    return np.array(rows, dtype=complex)


def pom_to_json(pom: Pom) -> dict:
    out = {
        "dim": pom.dim,
        "outcomes": [matrix_to_json(m) for m in pom.outcomes],
        "labels": list(pom.labels) if pom.labels is not None else None,
    }
    return out


def pom_from_json(obj) -> Pom:
    dim = _require(obj, "dim", "POM file")
    outcomes = _require(obj, "outcomes", "POM file")
    if not isinstance(outcomes, list) or not outcomes:
        raise ParseError("POM file has an empty outcome list")
    mats = [matrix_from_json(o, f"outcome {j}") for j, o in enumerate(outcomes)]
    if any(m.shape != (dim, dim) for m in mats):
        raise ParseError("POM outcomes do not match the declared dimension")
    labels = obj.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != len(mats):
            raise ParseError("POM labels must match the outcome count")
        labels = tuple(str(s) for s in labels)
    return Pom(tuple(mats), labels=labels)


def state_to_json(rho) -> dict:
    m = np.asarray(getattr(rho, "matrix", rho), dtype=complex)
    return {"dim": m.shape[0], "matrix": matrix_to_json(m)}


def state_from_json(obj) -> DensityMatrix:
    dim = _require(obj, "dim", "state file")
    m = matrix_from_json(_require(obj, "matrix", "state file"), "state matrix")
    if m.shape != (dim, dim):
        raise ParseError("state matrix does not match the declared dimension")
    return DensityMatrix(m)


def choi_to_json(e: ChoiOperator) -> dict:
    return {
        "dim_in": e.dim_in,
        "dim_out": e.dim_out,
        "matrix": matrix_to_json(e.matrix),
        "trace_preserving": e.trace_preserving,
    }


def choi_from_json(obj) -> ChoiOperator:
    di = _require(obj, "dim_in", "channel file")
    do = _require(obj, "dim_out", "channel file")
    m = matrix_from_json(_require(obj, "matrix", "channel file"), "channel matrix")
    if m.shape != (di * do, di * do):
        raise ParseError("channel matrix does not match the declared dimensions")
    return ChoiOperator(di, do, m)


def counts_to_json(counts: CountsRecord, pom_ref: str) -> dict:
    return {
        "pom_ref": pom_ref,
        "counts": list(counts.counts),
        "total": counts.total,
        "n_undetected": counts.n_undetected,
        "seed": counts.seed,
    }


def counts_from_json(obj) -> tuple[CountsRecord, str]:
    pom_ref = _require(obj, "pom_ref", "counts file")
    raw = _require(obj, "counts", "counts file")
    if not isinstance(raw, list) or not raw:
        raise ParseError("counts file has an empty counts list")
    try:
        counts = tuple(int(c) for c in raw)
    except (TypeError, ValueError) as exc:
        raise ParseError("counts must be integers") from exc
    record = CountsRecord(counts, n_undetected=obj.get("n_undetected"), seed=obj.get("seed"))
    declared = _require(obj, "total", "counts file")
    if int(declared) != record.total:
        raise ValueError(f"declared total {declared} does not match the counts sum {record.total}")
    return record, str(pom_ref)


def inputs_to_json(states) -> dict:
    mats = [np.asarray(getattr(s, "matrix", s), dtype=complex) for s in states]
    return {"dim": mats[0].shape[0], "states": [matrix_to_json(m) for m in mats]}


def inputs_from_json(obj) -> tuple[DensityMatrix, ...]:
    dim = _require(obj, "dim", "inputs file")
    raw = _require(obj, "states", "inputs file")
    if not isinstance(raw, list) or not raw:
        raise ParseError("inputs file has an empty state list")
    states = []
    for j, entry in enumerate(raw):
        m = matrix_from_json(entry, f"input state {j}")
        if m.shape != (dim, dim):
            raise ParseError("input state does not match the declared dimension")
        states.append(DensityMatrix(m))
    return tuple(states)


def dataset_to_json(dataset: ProcessDataset, pom_ref: str) -> dict:
    out = {
        "dim_in": dataset.dim_in,
        "dim_out": dataset.dim_out,
        "inputs": [matrix_to_json(s.matrix) for s in dataset.input_states],
        "pom_ref": pom_ref,
        "counts": [[int(c) for c in row] for row in dataset.counts],
        "n_per_input": dataset.copies_per_input,
        "n_undetected": list(dataset.n_undetected) if dataset.n_undetected is not None else None,
        "seed": dataset.seed,
    }
    return out


def dataset_from_json(obj, pom: Pom) -> ProcessDataset:
    di = _require(obj, "dim_in", "dataset file")
    do = _require(obj, "dim_out", "dataset file")
    raw_inputs = _require(obj, "inputs", "dataset file")
    if not isinstance(raw_inputs, list) or not raw_inputs:
        raise ParseError("dataset file has an empty input list")
    inputs = []
    for j, entry in enumerate(raw_inputs):
        m = matrix_from_json(entry, f"input state {j}")
        if m.shape != (di, di):
            raise ParseError("dataset input state does not match dim_in")
        inputs.append(DensityMatrix(m))
    if pom.dim != do:
        raise ValueError(f"POM dimension {pom.dim} does not match dataset dim_out {do}")
    raw_counts = _require(obj, "counts", "dataset file")
    if not isinstance(raw_counts, list):
        raise ParseError("dataset counts must be a list of rows")
    try:
        counts = np.array([[int(c) for c in row] for row in raw_counts], dtype=int)
    except (TypeError, ValueError) as exc:
        raise ParseError("dataset counts must be integers") from exc
    n_per_input = int(_require(obj, "n_per_input", "dataset file"))
    n_undetected = obj.get("n_undetected")
    return ProcessDataset(
        tuple(inputs),
        pom,
        counts,
        n_per_input,
        n_undetected=tuple(int(u) for u in n_undetected) if n_undetected is not None else None,
        seed=obj.get("seed"),
    )


def dataset_pom_ref(obj) -> str:
    return str(_require(obj, "pom_ref", "dataset file"))

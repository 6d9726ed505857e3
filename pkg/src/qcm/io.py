"""File formats: model and graph documents (JSON), distributions (CSV), fiducials (text).

Every writer accepts a header string; readers ignore headers.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import DiscardInput, FunctionalModel, PrepareProjector, SicMeasure, Unitary, Wire
from .dist import JointDistribution
from .errors import InputError
from .graph import CausalGraph
from .sic import Fiducial, resolve_povm

MODEL_FORMAT = "qcm-model"
GRAPH_FORMAT = "qcm-graph"


def file_digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def header_line(inputs=(), **extra) -> str:
    """``qcm <version>; inputs: name=digest, ...; key=value`` (paths reduced to file names)."""
    parts = [f"qcm {__version__}"]
    if inputs:
        parts.append("inputs: " + ", ".join(f"{Path(p).name}={file_digest(p)}" for p in inputs))
    parts += [f"{k}={v}" for k, v in sorted(extra.items()) if v is not None]
    return "; ".join(parts)


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def _load_json(text: str, what: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{what} must be a JSON object")
    return doc


# --- models -------------------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def gate_to_dict(g) -> dict:
    if isinstance(g, Unitary):
        d = {"type": "unitary", "wires": list(g.wires)}
        if g.matrix is not None:
            d["matrix"] = _matrix_to_json(g.matrix)
        else:
            d["haar_random"] = g.haar_seed
        if g.adjoint:
            d["adjoint"] = True
        return d
    if isinstance(g, SicMeasure):
        return {"type": "measure", "node": g.node, "wire": g.wire, "povm": g.povm_ref}
    if isinstance(g, DiscardInput):
        return {"type": "discard", "wire": g.wire}
    if isinstance(g, PrepareProjector):
        return {"type": "prepare", "node": g.node, "wire": g.wire, "outcome": g.outcome, "povm": g.povm_ref}
    raise InputError(f"unknown gate {g!r}")


def gate_from_dict(d: dict, base_dir=None):
    kind = d.get("type")
    if kind == "unitary":
        if "matrix" in d and "haar_random" in d:
            raise InputError("unitary gives both 'matrix' and 'haar_random'")
        if "matrix" in d:
            return Unitary(d["wires"], _matrix_from_json(d["matrix"]), adjoint=bool(d.get("adjoint", False)))
        seed = d.get("haar_random")
        if isinstance(seed, dict):  # {"haar_random": {"seed": n}} also accepted
            seed = seed.get("seed")
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise InputError(f"unitary needs 'matrix' or integer 'haar_random', got {d!r}")
        return Unitary(d["wires"], haar_seed=seed, adjoint=bool(d.get("adjoint", False)))
    if kind == "measure":
        ref = d.get("povm", "sic2")
        return SicMeasure(d["node"], d["wire"], resolve_povm(ref, base_dir), ref)
    if kind == "discard":
        return DiscardInput(d["wire"])
    if kind == "prepare":
        ref = d.get("povm", "sic2")
        return PrepareProjector(d["wire"], d["node"], int(d["outcome"]), resolve_povm(ref, base_dir), ref)
    raise InputError(f"unknown gate type {kind!r}")


def model_to_dict(m: FunctionalModel, header: str | None = None) -> dict:
    doc = {"format": MODEL_FORMAT}
    if header:
        doc["header"] = header
    doc["wires"] = [{"id": w.id, "dim": w.dim} for w in m.wires]
    doc["gates"] = [gate_to_dict(g) for g in m.gates]
    return doc


def model_from_dict(doc: dict, base_dir=None) -> FunctionalModel:
    if doc.get("format", MODEL_FORMAT) != MODEL_FORMAT:
        raise InputError(f"not a model document (format={doc.get('format')!r})")
    try:
        wires = [Wire(str(w["id"]), int(w["dim"])) for w in doc["wires"]]
        gates = [gate_from_dict(g, base_dir) for g in doc["gates"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model document: {exc!r}") from None
    return FunctionalModel(wires, gates)


def dumps_model(m: FunctionalModel, header: str | None = None) -> str:
    return _dump(model_to_dict(m, header))


def loads_model(text: str, base_dir=None) -> FunctionalModel:
    return model_from_dict(_load_json(text, "model file"), base_dir)


def read_model(path) -> FunctionalModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return loads_model(text, path.parent)


# --- graphs -------------------------------------------------------------------


def dumps_graph(g: CausalGraph, header: str | None = None) -> str:
    doc = {"format": GRAPH_FORMAT}
    if header:
        doc["header"] = header
    doc.update(g.to_dict())
    return _dump(doc)


def loads_graph(text: str) -> CausalGraph:
    doc = _load_json(text, "graph file")
    if doc.get("format", GRAPH_FORMAT) != GRAPH_FORMAT:
        raise InputError(f"not a graph document (format={doc.get('format')!r})")
    return CausalGraph.from_dict(doc)


def read_graph(path) -> CausalGraph:
    try:
        return loads_graph(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


# --- distributions and fiducials -----------------------------------------------


def read_distribution(path) -> JointDistribution:
    try:
        return JointDistribution.from_csv(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def dumps_fiducial(f: Fiducial, header: str | None = None) -> str:
    return (f"# {header}\n" if header else "") + f.to_text()


def loads_fiducial(text: str) -> Fiducial:
    return Fiducial.from_text(text)


def dumps_report(doc: dict, header: str | None = None) -> str:
    if header:
        doc = {"header": header, **doc}
    return _dump(doc)

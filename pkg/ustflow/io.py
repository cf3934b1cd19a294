"""Text formats: graphs, measures, point clouds, edge weights and result matrices."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import GraphFormatError, MeasuresFormatError, OmegaFormatError, PointsFormatError
from .graph import PhysicalGraph, build_graph
from .measure import DiscreteMeasure, new_measure

logger = logging.getLogger(__name__)

__all__ = [
    "LabeledMeasure",
    "format_float",
    "parse_graph",
    "read_graph",
    "format_graph",
    "write_graph",
    "parse_measures",
    "read_measures",
    "read_points",
    "read_omega",
    "format_matrix_csv",
    "write_matrix",
    "write_json",
    "write_table",
]


# --- floats ---

def format_float(x) -> str:
    """Shortest decimal that reads back to the same double, without a trailing ``.0``."""
    x = float(x)
    if x == 0:
        return "0"
    text = repr(x)
    return text[:-2] if text.endswith(".0") else text


# --- graphs: "nodes N" then "u v w" per line, '#' starts a comment ---

def parse_graph(text: str, path: Optional[str] = None) -> PhysicalGraph:
    node_count = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if node_count is None:
            if len(parts) != 2 or parts[0] != "nodes":
                raise GraphFormatError("expected header 'nodes N'", path, lineno)
            try:
                node_count = int(parts[1])
            except ValueError:
                raise GraphFormatError(f"node count {parts[1]!r} is not an integer", path, lineno) from None
            continue
        if len(parts) != 3:
            raise GraphFormatError(f"expected 'u v w', got {len(parts)} fields", path, lineno)
        try:
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise GraphFormatError(f"cannot parse edge {line!r}", path, lineno) from None
    if node_count is None:
        raise GraphFormatError("missing header 'nodes N'", path)
    return build_graph(node_count, edges)


def read_graph(path) -> PhysicalGraph:
    path = Path(path)
    g = parse_graph(path.read_text(), str(path))
    logger.info("loaded graph %s: %d nodes, %d edges", path, g.node_count, g.edge_count)
    return g


def format_graph(g: PhysicalGraph) -> str:
    lines = [f"nodes {g.node_count}"]
    lines += [f"{u} {v} {format_float(w)}" for u, v, w in g.edges]
    return "\n".join(lines) + "\n"


def write_graph(g: PhysicalGraph, path) -> None:
    Path(path).write_text(format_graph(g))


# --- measures ---

class MeasureEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    node: int
    mass: float


class MeasureRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: Optional[str] = None
    entries: list[MeasureEntry]


class MeasuresDocument(BaseModel):
    measures: list[MeasureRecord]


class LabeledMeasure(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    label: str
    measure: DiscreteMeasure


def parse_measures(text: str, path: Optional[str] = None) -> list[LabeledMeasure]:
    """Parse ``{measures: [{label, entries: [{node, mass}]}]}``.

    Unlabelled measures are named by their position.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise MeasuresFormatError(f"not valid YAML: {exc}", path) from None
    try:
        doc = MeasuresDocument.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise MeasuresFormatError(f"{where}: {first['msg']}", path) from None
    out = []
    for i, rec in enumerate(doc.measures):
        m = new_measure((e.node, e.mass) for e in rec.entries)
        out.append(LabeledMeasure(label=rec.label if rec.label is not None else str(i), measure=m))
    return out


def read_measures(path) -> list[LabeledMeasure]:
    path = Path(path)
    ms = parse_measures(path.read_text(), str(path))
    logger.info("loaded %d measures from %s", len(ms), path)
    return ms


# --- point clouds and edge weights ---

def read_points(path) -> np.ndarray:
    """One point per line, whitespace-separated coordinates."""
    try:
        pts = np.loadtxt(path, ndmin=2, comments="#")
    except ValueError as exc:
        raise PointsFormatError(str(exc), str(path)) from None
    return pts


def read_omega(path, edge_count: Optional[int] = None) -> tuple[float, ...]:
    """One nonnegative weight per line, in edge-id order."""
    try:
        vals = np.loadtxt(path, ndmin=1, comments="#")
    except ValueError as exc:
        raise OmegaFormatError(str(exc), str(path)) from None
    if vals.ndim != 1:
        raise OmegaFormatError("expected one value per line", str(path))
    if edge_count is not None and len(vals) != edge_count:
        raise OmegaFormatError(f"{len(vals)} values for a graph with {edge_count} edges", str(path))
    return tuple(float(v) for v in vals)


# --- outputs ---

def format_matrix_csv(matrix) -> str:
    rows = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    return "".join(",".join(format_float(x) for x in row) + "\n" for row in rows)


def write_matrix(matrix, out: TextIO, fmt: str = "csv", labels: Optional[Sequence[str]] = None) -> None:
    if fmt == "csv":
        out.write(format_matrix_csv(matrix))
    elif fmt == "json":
        doc = {"matrix": np.asarray(matrix, dtype=np.float64).tolist()}
        if labels is not None:
            doc["labels"] = list(labels)
        write_json(doc, out)
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def write_json(doc, out: TextIO) -> None:
    out.write(json.dumps(doc, sort_keys=True) + "\n")


def write_table(rows: Iterable[dict], out: TextIO, columns: Sequence[str]) -> None:
    """Plot-ready CSV of result rows."""
    pd.DataFrame(list(rows), columns=list(columns)).to_csv(out, index=False, lineterminator="\n")

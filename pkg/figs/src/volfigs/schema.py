"""Readers for the frozen artifact formats.

The renderer accepts exactly three inputs: the flow-graph JSON document
and the per-instrument profile and histogram CSV tables. Parsing is
deliberately strict; a file that does not match the written format is
rejected with the offending line rather than repaired.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_SCHEMA_VERSION = 1
SLOTS_PER_DAY = 288

PROFILE_HEADER = ("slot", "utc", "value")
HIST_HEADER = ("bin_left", "bin_right", "count_before", "count_after")


class SchemaError(Exception):
    """Input file does not match the expected format."""


class SchemaMismatchError(SchemaError):
    """Document declares a schema version this renderer does not support."""

    def __init__(self, found, supported: int):
        self.found = found
        self.supported = supported
        super().__init__(
            f"schema_version {found!r} is not supported; this renderer "
            f"reads version {supported}"
        )


@dataclass(frozen=True)
class FlowDoc:
    nodes: tuple
    edges: tuple          # dicts: source, target, weight, sign
    self_loops: tuple     # dicts: node, weight
    significance_level: float


@dataclass(frozen=True)
class Profile:
    labels: tuple         # 288 UTC labels taken from the file
    values: np.ndarray


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray     # (bins + 1,)
    before: np.ndarray    # (bins,) int
    after: np.ndarray


def load_flowgraph(path) -> FlowDoc:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top-level value must be an object")
    version = doc.get("schema_version")
    if version != SUPPORTED_SCHEMA_VERSION:
        raise SchemaMismatchError(version, SUPPORTED_SCHEMA_VERSION)
    try:
        nodes = tuple(str(n) for n in doc["nodes"])
        edges = tuple(doc["edges"])
        loops = tuple(doc["self_loops"])
        level = float(doc["significance_level"])
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"{path}: malformed flow-graph document: {e}") from None
    known = set(nodes)
    for i, e in enumerate(edges):
        if not isinstance(e, dict) or not {"source", "target", "weight", "sign"} <= set(e):
            raise SchemaError(f"{path}: edge {i} lacks source/target/weight/sign")
        if e["source"] not in known or e["target"] not in known:
            raise SchemaError(f"{path}: edge {i} references an unknown node")
        if not math.isfinite(float(e["weight"])):
            raise SchemaError(f"{path}: edge {i} has a non-finite weight")
    for i, s in enumerate(loops):
        if not isinstance(s, dict) or not {"node", "weight"} <= set(s):
            raise SchemaError(f"{path}: self-loop {i} lacks node/weight")
        if s["node"] not in known:
            raise SchemaError(f"{path}: self-loop {i} references an unknown node")
    return FlowDoc(nodes=nodes, edges=edges, self_loops=loops,
                   significance_level=level)


def read_profile(path) -> Profile:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != PROFILE_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(PROFILE_HEADER)}")
    body = rows[1:]
    if len(body) != SLOTS_PER_DAY:
        raise SchemaError(
            f"{path}: expected {SLOTS_PER_DAY} slot rows, found {len(body)}")
    labels = []
    values = np.zeros(SLOTS_PER_DAY)
    for i, row in enumerate(body):
        try:
            slot = int(row[0])
            labels.append(row[1])
            values[i] = float(row[2])
        except (IndexError, ValueError) as e:
            raise SchemaError(f"{path}: line {i + 2}: {e}") from None
        if slot != i:
            raise SchemaError(f"{path}: line {i + 2}: slot {slot} out of order")
    return Profile(labels=tuple(labels), values=values)


def read_histogram(path) -> Histogram:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != HIST_HEADER:
        raise SchemaError(f"{path}: expected header {','.join(HIST_HEADER)}")
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: no histogram rows")
    lo = np.zeros(len(body))
    hi = np.zeros(len(body))
    before = np.zeros(len(body), dtype=np.int64)
    after = np.zeros(len(body), dtype=np.int64)
    for i, row in enumerate(body):
        try:
            lo[i], hi[i] = float(row[0]), float(row[1])
            before[i], after[i] = int(row[2]), int(row[3])
        except (IndexError, ValueError) as e:
            raise SchemaError(f"{path}: line {i + 2}: {e}") from None
        if i and lo[i] != hi[i - 1]:
            raise SchemaError(f"{path}: line {i + 2}: bins are not contiguous")
    edges = np.append(lo, hi[-1])
    return Histogram(edges=edges, before=before, after=after)

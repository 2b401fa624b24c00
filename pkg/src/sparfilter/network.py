"""Undirected weighted networks read off a (filtered) matrix, and their export formats."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Literal

import networkx as nx
import numpy as np

from .covariance import SymMatrix
from .errors import InvalidInput, WeightOutOfRange

Format = Literal["edge_csv", "graph_json", "graphml"]
FORMATS: tuple[str, ...] = ("edge_csv", "graph_json", "graphml")
EXTENSIONS = {"edge_csv": "csv", "graph_json": "json", "graphml": "graphml"}


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    weight: float


@dataclass(frozen=True)
class Network:
    """Nodes in a fixed order; each edge has ``source`` before ``target`` in that order."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        pos = {v: i for i, v in enumerate(nodes)}
        if len(pos) != len(nodes):
            raise InvalidInput("duplicate node labels")
        seen = set()
        edges = []
        for e in self.edges:
            if e.source not in pos or e.target not in pos:
                raise InvalidInput(f"edge {e.source}-{e.target} references an unknown node")
            if e.source == e.target:
                raise InvalidInput(f"self-loop on {e.source}")
            if e.weight == 0:
                raise InvalidInput(f"edge {e.source}-{e.target} has zero weight")
            if pos[e.source] > pos[e.target]:
                e = Edge(e.target, e.source, e.weight)
            key = (e.source, e.target)
            if key in seen:
                raise InvalidInput(f"duplicate edge {key}")
            seen.add(key)
            edges.append(e)
        edges.sort(key=lambda e: (pos[e.source], pos[e.target]))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", tuple(edges))

    def edge_set(self) -> frozenset[frozenset[str]]:
        """Unordered node pairs, comparable across networks with different node orders."""
        return frozenset(frozenset((e.source, e.target)) for e in self.edges)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_weighted_edges_from((e.source, e.target, e.weight) for e in self.edges)
        return g

    def n_components(self) -> int:
        return nx.number_connected_components(self.to_networkx())

    def components(self) -> list[list[str]]:
        """Connected components, each listed in node order, largest first."""
        pos = {v: i for i, v in enumerate(self.nodes)}
        comps = [sorted(c, key=pos.__getitem__) for c in nx.connected_components(self.to_networkx())]
        comps.sort(key=lambda c: (-len(c), pos[c[0]]))
        return comps


def build_network(m: SymMatrix) -> Network:
    a = m.entries
    i, j = np.triu_indices(m.p, 1)
    keep = a[i, j] != 0
    edges = tuple(
        Edge(m.labels[s], m.labels[t], float(a[s, t])) for s, t in zip(i[keep], j[keep])
    )
    return Network(m.labels, edges)


def metric_weights(net: Network) -> Network:
    """Map correlation weights to the distance ``sqrt(2 (1 - rho))``."""
    edges = []
    for e in net.edges:
        if not -1.0 <= e.weight <= 1.0:
            raise WeightOutOfRange(f"weight {e.weight!r} on {e.source}-{e.target} is not a correlation")
        edges.append(Edge(e.source, e.target, math.sqrt(2.0 * (1.0 - e.weight))))
    # rho == 1 gives a zero distance, which is still a present edge
    return _unchecked(net.nodes, edges)


def _unchecked(nodes, edges) -> Network:
    net = object.__new__(Network)
    object.__setattr__(net, "nodes", tuple(nodes))
    object.__setattr__(net, "edges", tuple(edges))
    return net


def export(net: Network, fmt: Format) -> bytes:
    if fmt == "edge_csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source", "target", "weight"])
        for e in net.edges:
            w.writerow([e.source, e.target, repr(e.weight)])
        return buf.getvalue().encode("utf-8")
    if fmt == "graph_json":
        doc = {
            "nodes": list(net.nodes),
            "edges": [{"source": e.source, "target": e.target, "weight": e.weight} for e in net.edges],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if fmt == "graphml":
        buf = io.BytesIO()
        nx.write_graphml(net.to_networkx(), buf, encoding="utf-8")
        return buf.getvalue()
    raise InvalidInput(f"unknown export format {fmt!r}")


def write(net: Network, path, fmt: Format) -> None:
    with open(path, "wb") as fh:
        fh.write(export(net, fmt))


def from_graph_json(data: bytes | str) -> Network:
    doc = json.loads(data)
    return Network(
        tuple(doc["nodes"]),
        tuple(Edge(e["source"], e["target"], float(e["weight"])) for e in doc["edges"]),
    )


def from_edge_csv(data: bytes | str, nodes: Iterable[str] | None = None) -> Network:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["source", "target", "weight"]:
        raise InvalidInput("edge CSV must start with the header source,target,weight")
    edges = [Edge(r[0], r[1], float(r[2])) for r in rows[1:] if r]
    if nodes is None:
        order: dict[str, None] = {}
        for e in edges:
            order.setdefault(e.source)
            order.setdefault(e.target)
        nodes = order
    return Network(tuple(nodes), tuple(edges))

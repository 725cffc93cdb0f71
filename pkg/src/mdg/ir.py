"""Dataflow-graph intermediate representation.

A graph owns a symbol table, an ordered container list, and a linear state
sequence. Each state holds an ordered node list (the canonical topological
order); map and for nodes own their bodies, so scope nesting is explicit in
the structure. Memlets address a single point per access with affine
subsets; write-conflict resolution (sum) is representable but nothing in
the shipped programs needs it.

Graphs are value-like: every operation that changes a graph works on a deep
copy and returns it. Node ids are unique within one graph and survive
copying, which is how transforms correlate a lookup made on the original
with the copy they mutate; ids are never serialized, so structural equality
ignores them.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

from . import tasklang
from .errors import GraphLookupError
from .symexpr import Affine, MinExpr, RangeEnd, is_identifier

__all__ = [
    "Storage",
    "Schedule",
    "Wcr",
    "DataContainer",
    "Range",
    "Memlet",
    "Tasklet",
    "MapNode",
    "ForNode",
    "CopyNode",
    "State",
    "DataflowGraph",
    "Diagnostic",
    "validate",
    "find_map_by_param",
    "specialize_symbol",
    "structurally_equal",
]


class Storage(Enum):
    HOST_HEAP = "HostHeap"
    DEVICE_GLOBAL = "DeviceGlobal"
    SCRATCH_SHARED = "ScratchShared"
    REGISTER_TRANSIENT = "RegisterTransient"


class Schedule(Enum):
    SEQUENTIAL = "Sequential"
    CPU_PARALLEL = "CpuParallel"
    DEVICE_GRID = "DeviceGrid"
    DEVICE_BLOCK = "DeviceBlock"


class Wcr(Enum):
    NONE = "none"
    SUM = "sum"


@dataclass
class DataContainer:
    name: str
    shape: tuple[Affine, ...]
    storage: Storage = Storage.HOST_HEAP
    transient: bool = False

    @property
    def rank(self) -> int:
        return len(self.shape)


@dataclass(frozen=True)
class Range:
    """Half-open iteration interval [begin, end)."""

    begin: Affine
    end: RangeEnd

    def vars(self) -> set[str]:
        return self.begin.vars() | self.end.vars()

    def extent_const(self) -> int | None:
        """The trip count when it is a known constant, else None.

        Handles the strip-mined shape [c*p, c*p + w) where the symbolic
        terms cancel out.
        """
        if isinstance(self.end, MinExpr):
            if self.begin.is_const and self.end.is_const:
                return min(self.end.a.const, self.end.b.const) - self.begin.const
            return None
        if self.end.terms == self.begin.terms:
            return self.end.const - self.begin.const
        return None


@dataclass
class Memlet:
    container: str
    subset: tuple[Affine, ...]
    wcr: Wcr = Wcr.NONE


@dataclass
class Tasklet:
    node_id: int
    ins: dict[str, Memlet]
    outs: dict[str, Memlet]
    body: str


@dataclass
class MapNode:
    node_id: int
    params: tuple[str, ...]
    ranges: tuple[Range, ...]
    schedule: Schedule
    body: list["Node"] = field(default_factory=list)


@dataclass
class ForNode:
    node_id: int
    param: str
    range: Range
    body: list["Node"] = field(default_factory=list)


@dataclass
class CopyNode:
    """Copy a slice of src into dst, covering dst entirely.

    src_offset has one entry per src dimension: an affine expression pins
    the dimension, None copies its full extent. The None dimensions
    correspond, in order, to the dimensions of dst.
    """

    node_id: int
    src: str
    dst: str
    src_offset: tuple[Affine | None, ...]


Node = Union[Tasklet, MapNode, ForNode, CopyNode]


@dataclass
class State:
    name: str
    nodes: list[Node] = field(default_factory=list)


@dataclass
class DataflowGraph:
    name: str
    symbols: set[str] = field(default_factory=set)
    containers: list[DataContainer] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    next_node_id: int = 0

    def new_id(self) -> int:
        nid = self.next_node_id
        self.next_node_id += 1
        return nid

    def container(self, name: str) -> DataContainer:
        for c in self.containers:
            if c.name == name:
                return c
        raise GraphLookupError(f"no container named '{name}'", count=0)

    def has_container(self, name: str) -> bool:
        return any(c.name == name for c in self.containers)

    def add_container(
        self,
        name: str,
        shape,
        storage: Storage = Storage.HOST_HEAP,
        transient: bool = False,
    ) -> DataContainer:
        c = DataContainer(
            name=name,
            shape=tuple(Affine.of(s) for s in shape),
            storage=storage,
            transient=transient,
        )
        self.containers.append(c)
        return c

    def clone(self) -> "DataflowGraph":
        return copy.deepcopy(self)

    def walk(self) -> Iterator[tuple[Node, tuple[Node, ...]]]:
        """Yield (node, enclosing scope nodes outermost-first) in program order."""

        def rec(nodes: list[Node], scopes: tuple[Node, ...]):
            for node in nodes:
                yield node, scopes
                if isinstance(node, (MapNode, ForNode)):
                    yield from rec(node.body, scopes + (node,))

        for state in self.states:
            yield from rec(state.nodes, ())

    def find_node(self, node_id: int) -> Node:
        for node, _ in self.walk():
            if node.node_id == node_id:
                return node
        raise GraphLookupError(f"no node with id {node_id}", count=0)

    def parent_of(self, node_id: int) -> tuple[list[Node], int]:
        """(owning node list, index within it) for a node id."""

        def rec(nodes: list[Node]):
            for idx, node in enumerate(nodes):
                if node.node_id == node_id:
                    return nodes, idx
                if isinstance(node, (MapNode, ForNode)):
                    found = rec(node.body)
                    if found is not None:
                        return found
            return None

        for state in self.states:
            found = rec(state.nodes)
            if found is not None:
                return found
        raise GraphLookupError(f"no node with id {node_id}", count=0)


@dataclass(frozen=True)
class Diagnostic:
    node_id: int | None
    rule: str
    message: str

    def __str__(self) -> str:
        where = f"node {self.node_id}" if self.node_id is not None else "graph"
        return f"[{self.rule}] {where}: {self.message}"


def _node_accesses(node: Node) -> list[tuple[str, tuple[Affine, ...], bool, Wcr]]:
    """(container, subset, is_write, wcr) for tasklet and copy accesses."""
    acc = []
    if isinstance(node, Tasklet):
        for m in node.ins.values():
            acc.append((m.container, m.subset, False, m.wcr))
        for m in node.outs.values():
            acc.append((m.container, m.subset, True, m.wcr))
    elif isinstance(node, CopyNode):
        point = tuple(e for e in node.src_offset if e is not None)
        acc.append((node.src, point, False, Wcr.NONE))
        acc.append((node.dst, (), True, Wcr.NONE))
    return acc


def validate(g: DataflowGraph) -> list[Diagnostic]:
    """Check every structural invariant; returns diagnostics, never raises."""
    diags: list[Diagnostic] = []

    seen_names: set[str] = set()
    for c in g.containers:
        if not is_identifier(c.name):
            diags.append(
                Diagnostic(None, "container-name", f"invalid container name {c.name!r}")
            )
        if c.name in seen_names:
            diags.append(
                Diagnostic(None, "container-name", f"duplicate container '{c.name}'")
            )
        seen_names.add(c.name)
        if not c.transient and c.storage in (
            Storage.SCRATCH_SHARED,
            Storage.REGISTER_TRANSIENT,
        ):
            diags.append(
                Diagnostic(
                    None,
                    "storage",
                    f"non-transient container '{c.name}' cannot use "
                    f"{c.storage.value} storage",
                )
            )
        for dim, size in enumerate(c.shape):
            for v in size.vars():
                if v not in g.symbols:
                    diags.append(
                        Diagnostic(
                            None,
                            "symbol-table",
                            f"shape of '{c.name}' dim {dim} uses undeclared "
                            f"symbol '{v}'",
                        )
                    )
            if size.is_const and size.const < 0:
                diags.append(
                    Diagnostic(
                        None, "shape", f"container '{c.name}' dim {dim} is negative"
                    )
                )

    containers = {c.name: c for c in g.containers}

    def check_expr_vars(expr_vars: set[str], visible: set[str], what: str, nid: int):
        for v in sorted(expr_vars):
            if v not in visible and v not in g.symbols:
                diags.append(
                    Diagnostic(
                        nid,
                        "free-variable",
                        f"{what} references '{v}', which is neither an "
                        "enclosing iterator nor a graph symbol",
                    )
                )

    def check_memlet(m: Memlet, visible: set[str], nid: int, role: str):
        c = containers.get(m.container)
        if c is None:
            diags.append(
                Diagnostic(
                    nid, "memlet-container", f"{role} names unknown container "
                    f"'{m.container}'"
                )
            )
            return
        if len(m.subset) != c.rank:
            diags.append(
                Diagnostic(
                    nid,
                    "memlet-rank",
                    f"{role} on '{m.container}' has {len(m.subset)} subset "
                    f"dims, container rank is {c.rank}",
                )
            )
        for e in m.subset:
            check_expr_vars(e.vars(), visible, f"{role} subset on '{m.container}'", nid)

    written_transients: set[str] = set()

    def visit(nodes: list[Node], visible: set[str], grid_depth: int):
        for node in nodes:
            if isinstance(node, MapNode):
                if len(node.params) != len(node.ranges):
                    diags.append(
                        Diagnostic(
                            node.node_id,
                            "map-params",
                            "param and range counts differ",
                        )
                    )
                for p in node.params:
                    if not is_identifier(p):
                        diags.append(
                            Diagnostic(
                                node.node_id, "map-params", f"bad iterator name {p!r}"
                            )
                        )
                    if p in visible:
                        diags.append(
                            Diagnostic(
                                node.node_id,
                                "map-params",
                                f"iterator '{p}' shadows an enclosing iterator",
                            )
                        )
                if len(set(node.params)) != len(node.params):
                    diags.append(
                        Diagnostic(
                            node.node_id, "map-params", "duplicate iterator names"
                        )
                    )
                if node.schedule is Schedule.DEVICE_BLOCK and grid_depth == 0:
                    diags.append(
                        Diagnostic(
                            node.node_id,
                            "schedule-nesting",
                            "DeviceBlock map has no enclosing DeviceGrid map",
                        )
                    )
                for r in node.ranges:
                    check_expr_vars(r.vars(), visible, "map range", node.node_id)
                    ext = r.extent_const()
                    if ext is not None and ext < 0:
                        diags.append(
                            Diagnostic(
                                node.node_id, "range", "negative iteration extent"
                            )
                        )
                inner = visible | set(node.params)
                depth = grid_depth + (1 if node.schedule is Schedule.DEVICE_GRID else 0)
                visit(node.body, inner, depth)
            elif isinstance(node, ForNode):
                if node.param in visible:
                    diags.append(
                        Diagnostic(
                            node.node_id,
                            "map-params",
                            f"iterator '{node.param}' shadows an enclosing iterator",
                        )
                    )
                check_expr_vars(node.range.vars(), visible, "loop range", node.node_id)
                visit(node.body, visible | {node.param}, grid_depth)
            elif isinstance(node, Tasklet):
                for conn, m in node.ins.items():
                    check_memlet(m, visible, node.node_id, f"input '{conn}'")
                for conn, m in node.outs.items():
                    check_memlet(m, visible, node.node_id, f"output '{conn}'")
                    if m.wcr is Wcr.NONE:
                        pass
                problems = tasklang.check_body(
                    node.body, set(node.ins), set(node.outs)
                )
                for p in problems:
                    diags.append(Diagnostic(node.node_id, "tasklet-body", p))
                # transient read-before-write, in program order
                for m in node.ins.values():
                    c = containers.get(m.container)
                    if (
                        c is not None
                        and c.transient
                        and m.container not in written_transients
                    ):
                        diags.append(
                            Diagnostic(
                                node.node_id,
                                "uninitialized-read",
                                f"transient '{m.container}' is read before any "
                                "write precedes it in program order",
                            )
                        )
                for m in node.outs.values():
                    c = containers.get(m.container)
                    if c is not None and c.transient:
                        written_transients.add(m.container)
            elif isinstance(node, CopyNode):
                src = containers.get(node.src)
                dst = containers.get(node.dst)
                if src is None:
                    diags.append(
                        Diagnostic(
                            node.node_id, "memlet-container",
                            f"copy source names unknown container '{node.src}'",
                        )
                    )
                if dst is None:
                    diags.append(
                        Diagnostic(
                            node.node_id, "memlet-container",
                            f"copy target names unknown container '{node.dst}'",
                        )
                    )
                if src is not None and len(node.src_offset) != src.rank:
                    diags.append(
                        Diagnostic(
                            node.node_id,
                            "memlet-rank",
                            f"copy offset has {len(node.src_offset)} dims, "
                            f"source rank is {src.rank}",
                        )
                    )
                free = sum(1 for e in node.src_offset if e is None)
                if dst is not None and free != dst.rank:
                    diags.append(
                        Diagnostic(
                            node.node_id,
                            "memlet-rank",
                            f"copy leaves {free} free dims, target rank is "
                            f"{dst.rank}",
                        )
                    )
                for e in node.src_offset:
                    if e is not None:
                        check_expr_vars(e.vars(), visible, "copy offset", node.node_id)
                if src is not None and src.transient and node.src not in written_transients:
                    diags.append(
                        Diagnostic(
                            node.node_id,
                            "uninitialized-read",
                            f"transient '{node.src}' is read before any write "
                            "precedes it in program order",
                        )
                    )
                if dst is not None and dst.transient:
                    written_transients.add(node.dst)
            else:
                diags.append(
                    Diagnostic(None, "node-kind", f"unknown node type {type(node)!r}")
                )

    for state in g.states:
        visit(state.nodes, set(), 0)
    return diags


def find_map_by_param(g: DataflowGraph, param: str) -> MapNode:
    """The unique map whose parameter list contains `param`."""
    matches = [
        node
        for node, _ in g.walk()
        if isinstance(node, MapNode) and param in node.params
    ]
    if len(matches) != 1:
        raise GraphLookupError(
            f"expected exactly one map with parameter '{param}', found "
            f"{len(matches)}",
            count=len(matches),
        )
    return matches[0]


def rewrite_exprs(g: DataflowGraph, fn) -> None:
    """Apply fn to every affine expression in the graph, in place.

    fn receives an Affine (or a range-end MinExpr) and returns the
    replacement; used by specialization and iterator renaming.
    """
    for c in g.containers:
        c.shape = tuple(fn(e) for e in c.shape)
    for node, _ in g.walk():
        if isinstance(node, MapNode):
            node.ranges = tuple(
                Range(begin=fn(r.begin), end=fn(r.end)) for r in node.ranges
            )
        elif isinstance(node, ForNode):
            node.range = Range(begin=fn(node.range.begin), end=fn(node.range.end))
        elif isinstance(node, Tasklet):
            for m in list(node.ins.values()) + list(node.outs.values()):
                m.subset = tuple(fn(e) for e in m.subset)
        elif isinstance(node, CopyNode):
            node.src_offset = tuple(
                fn(e) if e is not None else None for e in node.src_offset
            )


def specialize_symbol(g: DataflowGraph, name: str, value: int) -> DataflowGraph:
    """Replace a symbol with a constant everywhere and drop it from the table."""
    if name not in g.symbols:
        raise GraphLookupError(f"graph has no symbol '{name}'", count=0)
    out = g.clone()
    out.symbols = set(out.symbols) - {name}
    rewrite_exprs(out, lambda e: e.substitute(name, value))
    return out


def _expr_doc(e: RangeEnd) -> str:
    return str(e)


def to_document(g: DataflowGraph) -> dict:
    """The canonical object-tree form (node ids omitted)."""

    def node_doc(node: Node) -> dict:
        if isinstance(node, MapNode):
            return {
                "kind": "map",
                "params": list(node.params),
                "ranges": [
                    {"begin": _expr_doc(r.begin), "end": _expr_doc(r.end)}
                    for r in node.ranges
                ],
                "schedule": node.schedule.value,
                "body": [node_doc(n) for n in node.body],
            }
        if isinstance(node, ForNode):
            return {
                "kind": "for",
                "param": node.param,
                "range": {
                    "begin": _expr_doc(node.range.begin),
                    "end": _expr_doc(node.range.end),
                },
                "body": [node_doc(n) for n in node.body],
            }
        if isinstance(node, Tasklet):
            return {
                "kind": "tasklet",
                "ins": [
                    {
                        "connector": conn,
                        "container": m.container,
                        "subset": [_expr_doc(e) for e in m.subset],
                        "wcr": m.wcr.value,
                    }
                    for conn, m in sorted(node.ins.items())
                ],
                "outs": [
                    {
                        "connector": conn,
                        "container": m.container,
                        "subset": [_expr_doc(e) for e in m.subset],
                        "wcr": m.wcr.value,
                    }
                    for conn, m in sorted(node.outs.items())
                ],
                "body": node.body,
            }
        if isinstance(node, CopyNode):
            return {
                "kind": "copy",
                "src": node.src,
                "dst": node.dst,
                "offset": [
                    None if e is None else _expr_doc(e) for e in node.src_offset
                ],
            }
        raise TypeError(f"unknown node type {type(node)!r}")

    return {
        "version": "mdg-1",
        "name": g.name,
        "symbols": sorted(g.symbols),
        "containers": [
            {
                "name": c.name,
                "shape": [_expr_doc(s) for s in c.shape],
                "storage": c.storage.value,
                "transient": c.transient,
            }
            for c in g.containers
        ],
        "states": [
            {"name": s.name, "nodes": [node_doc(n) for n in s.nodes]}
            for s in g.states
        ],
    }


def structurally_equal(a: DataflowGraph, b: DataflowGraph) -> bool:
    """Equality up to node identity."""
    return to_document(a) == to_document(b)

"""Reference executor for dataflow graphs.

Two engines share one storage model and produce bit-identical results:

- The scalar engine walks the tree and runs every map iteration in
  lexicographic order. It defines the semantics and supports everything,
  including an iteration recorder and per-cell uninitialized-read checks.
- The vector engine executes each tasklet once for the whole enclosed
  iteration grid with numpy index arrays. It only reorders work *across*
  grid points of a single statement, which cannot change any output bit
  when a conservative structural safety check passes: every pair of
  accesses to a written container must pin each shared map axis through
  a structurally identical coefficient-1 subset dimension, and writes must
  be injective over the grid. Anything the check cannot prove safe falls
  back to the scalar engine (per top-level node).

Transients start zero-filled, but reading a cell no prior statement wrote
is a hard error when check_reads is on; the shipped programs initialize
explicitly, so the error only fires on broken transform output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tasklang
from .errors import BindingError, ContractError, UninitializedReadError
from .ir import (
    CopyNode,
    DataflowGraph,
    ForNode,
    MapNode,
    Memlet,
    Node,
    Storage,
    Tasklet,
    Wcr,
    validate,
)
from .symexpr import Affine, MinExpr, RangeEnd

__all__ = ["Bindings", "execute"]


@dataclass
class Bindings:
    """Concrete inputs: one float64 buffer per non-transient container,
    one integer per graph symbol."""

    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    symbols: dict[str, int] = field(default_factory=dict)


def _eval_end(end: RangeEnd, env: dict[str, int]) -> int:
    if isinstance(end, MinExpr):
        return min(end.a.evaluate(env), end.b.evaluate(env))
    return end.evaluate(env)


def _written_containers(g: DataflowGraph) -> set[str]:
    written: set[str] = set()
    for node, _ in g.walk():
        if isinstance(node, Tasklet):
            written.update(m.container for m in node.outs.values())
        elif isinstance(node, CopyNode):
            written.add(node.dst)
    return written


class _Store:
    """Buffers plus optional per-cell init masks for transients."""

    def __init__(self, g: DataflowGraph, b: Bindings, check_reads: bool):
        env = dict(b.symbols)
        for s in g.symbols:
            if s not in env:
                raise BindingError(f"graph symbol '{s}' is not bound")
        self.env = env
        self.arrays: dict[str, np.ndarray] = {}
        self.masks: dict[str, np.ndarray | None] = {}
        written = _written_containers(g)
        self.written = written
        for c in g.containers:
            try:
                shape = tuple(int(s.evaluate(env)) for s in c.shape)
            except KeyError as exc:
                raise BindingError(
                    f"shape of '{c.name}' needs unbound symbol {exc.args[0]!r}"
                ) from exc
            if c.transient:
                self.arrays[c.name] = np.zeros(shape, dtype=np.float64)
                self.masks[c.name] = (
                    np.zeros(shape, dtype=bool) if check_reads else None
                )
                continue
            if c.name not in b.arrays:
                raise BindingError(f"container '{c.name}' is not bound")
            arr = np.asarray(b.arrays[c.name], dtype=np.float64)
            if arr.shape != shape:
                raise BindingError(
                    f"container '{c.name}' bound with shape {arr.shape}, "
                    f"declared shape is {shape}"
                )
            if c.name in written:
                arr = arr.copy()
            else:
                arr = np.ascontiguousarray(arr)
            self.arrays[c.name] = arr
            self.masks[c.name] = None


def _tasklet_fn(node: Tasklet, cache: dict) -> tuple[list[str], list[str], Callable]:
    hit = cache.get(node.node_id)
    if hit is None:
        # Sorted so builder-order and round-tripped graphs agree on the
        # (pathological) case of two outputs landing on the same cell.
        in_names = sorted(node.ins)
        out_names = sorted(node.outs)
        fn = tasklang.compile_body(node.body, in_names, out_names)
        hit = (in_names, out_names, fn)
        cache[node.node_id] = hit
    return hit


# ---------------------------------------------------------------- scalar

class _ScalarEngine:
    def __init__(self, store: _Store, record):
        self.store = store
        self.record = record
        self.fn_cache: dict = {}

    def run_nodes(self, nodes: list[Node], env: dict[str, int]) -> None:
        for node in nodes:
            self.run_node(node, env)

    def run_node(self, node: Node, env: dict[str, int]) -> None:
        if isinstance(node, MapNode):
            self._run_map(node, env, 0)
        elif isinstance(node, ForNode):
            begin = node.range.begin.evaluate(env)
            end = _eval_end(node.range.end, env)
            for v in range(begin, end):
                env[node.param] = v
                self.run_nodes(node.body, env)
            env.pop(node.param, None)
        elif isinstance(node, Tasklet):
            self._run_tasklet(node, env)
        elif isinstance(node, CopyNode):
            self._run_copy(node, env)
        else:
            raise ContractError(f"cannot interpret node type {type(node)!r}")

    def _run_map(self, node: MapNode, env: dict[str, int], dim: int) -> None:
        if dim == len(node.params):
            if self.record is not None:
                self.record(
                    node.node_id,
                    node.params,
                    tuple(env[p] for p in node.params),
                )
            self.run_nodes(node.body, env)
            return
        begin = node.ranges[dim].begin.evaluate(env)
        end = _eval_end(node.ranges[dim].end, env)
        param = node.params[dim]
        for v in range(begin, end):
            env[param] = v
            self._run_map(node, env, dim + 1)
        env.pop(param, None)

    def _read(self, m: Memlet, env: dict[str, int]) -> float:
        idx = tuple(e.evaluate(env) for e in m.subset)
        mask = self.store.masks[m.container]
        if mask is not None and not mask[idx]:
            raise UninitializedReadError(m.container, idx)
        return self.store.arrays[m.container][idx]

    def _write(self, m: Memlet, val, env: dict[str, int]) -> None:
        idx = tuple(e.evaluate(env) for e in m.subset)
        arr = self.store.arrays[m.container]
        if m.wcr is Wcr.SUM:
            arr[idx] = arr[idx] + val
        else:
            arr[idx] = val
        mask = self.store.masks[m.container]
        if mask is not None:
            mask[idx] = True

    def _run_tasklet(self, node: Tasklet, env: dict[str, int]) -> None:
        in_names, out_names, fn = _tasklet_fn(node, self.fn_cache)
        vals = fn(*(self._read(node.ins[n], env) for n in in_names))
        for name, val in zip(out_names, vals):
            self._write(node.outs[name], val, env)

    def _run_copy(self, node: CopyNode, env: dict[str, int]) -> None:
        idx = tuple(
            slice(None) if e is None else e.evaluate(env) for e in node.src_offset
        )
        src_mask = self.store.masks[node.src]
        if src_mask is not None and not np.all(src_mask[idx]):
            bad = np.argwhere(~np.atleast_1d(src_mask[idx]))[0]
            raise UninitializedReadError(node.src, tuple(int(v) for v in bad))
        self.store.arrays[node.dst][...] = self.store.arrays[node.src][idx]
        dst_mask = self.store.masks[node.dst]
        if dst_mask is not None:
            dst_mask[...] = True if src_mask is None else src_mask[idx]


# ---------------------------------------------------------------- vector

def _pin_axis(expr: Affine, param: str) -> bool:
    return isinstance(expr, Affine) and expr.terms == ((param, 1),)


def _vector_reject(node: Node, env: dict[str, int]) -> str | None:
    """Why the subtree under a top-level node cannot be vectorized, or None.

    Collects every memlet access with the map axes in scope at that point;
    rejects copies, scratch storage, WCR, non-constant map ranges, and any
    written container whose access pairs do not pin each shared axis.
    """
    accesses: list[tuple[str, tuple[Affine, ...], bool, frozenset[str]]] = []
    bound = set(env)

    def walk(n: Node, axes: frozenset[str], fors: set[str]) -> str | None:
        if isinstance(n, MapNode):
            for r in n.ranges:
                if not r.vars() <= bound:
                    return f"map range '{r.begin}:{r.end}' is not constant"
            for child in n.body:
                reason = walk(child, axes | set(n.params), fors)
                if reason:
                    return reason
            return None
        if isinstance(n, ForNode):
            if not n.range.vars() <= bound | fors:
                return "loop range depends on a map parameter"
            for child in n.body:
                reason = walk(child, axes, fors | {n.param})
                if reason:
                    return reason
            return None
        if isinstance(n, CopyNode):
            return "copy nodes run on the scalar engine"
        if isinstance(n, Tasklet):
            for m in list(n.ins.values()) + list(n.outs.values()):
                if m.wcr is not Wcr.NONE:
                    return "write-conflict resolution runs on the scalar engine"
            for m in n.ins.values():
                accesses.append((m.container, m.subset, False, axes))
            for m in n.outs.values():
                accesses.append((m.container, m.subset, True, axes))
            return None
        return f"cannot vectorize node type {type(n)!r}"

    reason = walk(node, frozenset(), set())
    if reason:
        return reason

    writes = [a for a in accesses if a[2]]
    for _, subset, _, axes in writes:
        for p in axes:
            if not any(_pin_axis(e, p) for e in subset):
                return f"write not injective over axis '{p}'"
    written_names = {w[0] for w in writes}
    for name, w_subset, _, w_axes in writes:
        for other, o_subset, _, o_axes in accesses:
            if other != name:
                continue
            for p in w_axes & o_axes:
                pinned = any(
                    we == oe and _pin_axis(we, p)
                    for we, oe in zip(w_subset, o_subset)
                )
                if not pinned:
                    return (
                        f"accesses to '{name}' do not pin shared axis '{p}'"
                    )
    # scratch containers are per-iteration in scalar semantics
    return None


class _VectorEngine:
    def __init__(self, store: _Store, containers):
        self.store = store
        self.containers = containers
        self.fn_cache: dict = {}

    def run_node(self, node: Node, env: dict[str, int]) -> None:
        self._run(node, env, [])

    def _run(self, node: Node, env, axes: list[tuple[str, int, int]]) -> None:
        if isinstance(node, MapNode):
            new_axes = list(axes)
            for param, r in zip(node.params, node.ranges):
                begin = r.begin.evaluate(env)
                end = _eval_end(r.end, env)
                new_axes.append((param, begin, max(end - begin, 0)))
            for child in node.body:
                self._run(child, env, new_axes)
        elif isinstance(node, ForNode):
            begin = node.range.begin.evaluate(env)
            end = _eval_end(node.range.end, env)
            for v in range(begin, end):
                env[node.param] = v
                for child in node.body:
                    self._run(child, env, axes)
            env.pop(node.param, None)
        elif isinstance(node, Tasklet):
            self._run_tasklet(node, env, axes)
        else:
            raise ContractError(f"vector engine cannot run {type(node)!r}")

    def _index(self, expr: Affine, env, axes):
        """Integer or broadcastable index array over the axis grid."""
        val = expr.const
        rank = len(axes)
        for var, coeff in expr.terms:
            if var in env:
                val = val + coeff * env[var]
                continue
            for pos, (param, begin, extent) in enumerate(axes):
                if param == var:
                    shape = [1] * rank
                    shape[pos] = extent
                    base = np.arange(begin, begin + extent).reshape(shape)
                    val = val + coeff * base
                    break
            else:
                raise ContractError(f"unbound index variable '{var}'")
        return val

    def _gather(self, m: Memlet, env, axes):
        idxs = tuple(self._index(e, env, axes) for e in m.subset)
        mask = self.store.masks[m.container]
        if mask is not None:
            ok = np.atleast_1d(mask[idxs])
            if not ok.all():
                pos = tuple(np.argwhere(~ok)[0])
                bad = tuple(
                    int(np.broadcast_to(i, ok.shape)[pos]) for i in idxs
                )
                raise UninitializedReadError(m.container, bad)
        return self.store.arrays[m.container][idxs]

    def _scatter(self, m: Memlet, val, env, axes):
        idxs = tuple(self._index(e, env, axes) for e in m.subset)
        self.store.arrays[m.container][idxs] = val
        mask = self.store.masks[m.container]
        if mask is not None:
            mask[idxs] = True

    def _run_tasklet(self, node: Tasklet, env, axes) -> None:
        in_names, out_names, fn = _tasklet_fn(node, self.fn_cache)
        vals = fn(*(self._gather(node.ins[n], env, axes) for n in in_names))
        for name, val in zip(out_names, vals):
            self._scatter(node.outs[name], val, env, axes)


# ---------------------------------------------------------------- driver

def execute(
    g: DataflowGraph,
    b: Bindings,
    engine: str = "auto",
    check_reads: bool = True,
    record=None,
) -> Bindings:
    """Run the program over the bindings; returns the written non-transients.

    engine: "auto" picks the vector engine per top-level node when the
    safety analysis allows, "vector" demands it (error otherwise),
    "scalar" forces the reference tree walk. All three produce identical
    bits. record, a callable (node_id, params, index), forces the scalar
    engine and is invoked once per map iteration.
    """
    if engine not in ("auto", "vector", "scalar"):
        raise ContractError(f"unknown engine '{engine}'")
    diags = validate(g)
    if diags:
        raise ContractError(
            "cannot execute an invalid graph: "
            + "; ".join(str(d) for d in diags[:3])
        )
    store = _Store(g, b, check_reads)
    containers = {c.name: c for c in g.containers}
    scalar = _ScalarEngine(store, record)
    vector = _VectorEngine(store, containers)
    force_scalar = engine == "scalar" or record is not None

    scratch_names = {
        c.name
        for c in g.containers
        if c.storage in (Storage.SCRATCH_SHARED, Storage.REGISTER_TRANSIENT)
    }

    def uses_scratch(node: Node) -> bool:
        def touch(n: Node) -> bool:
            if isinstance(n, Tasklet):
                mls = list(n.ins.values()) + list(n.outs.values())
                return any(m.container in scratch_names for m in mls)
            if isinstance(n, CopyNode):
                return n.src in scratch_names or n.dst in scratch_names
            return any(touch(c) for c in getattr(n, "body", []))

        return touch(node)

    for state in g.states:
        for node in state.nodes:
            if force_scalar:
                scalar.run_node(node, dict(store.env))
                continue
            reason = None
            if uses_scratch(node):
                reason = "scratch containers run on the scalar engine"
            else:
                reason = _vector_reject(node, store.env)
            if reason is None:
                vector.run_node(node, dict(store.env))
            elif engine == "vector":
                raise ContractError(f"vector engine refused: {reason}")
            else:
                scalar.run_node(node, dict(store.env))

    out_arrays = {
        name: store.arrays[name]
        for name in store.written
        if name in containers and not containers[name].transient
    }
    return Bindings(arrays=out_arrays, symbols={})

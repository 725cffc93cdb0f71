"""Schedule and storage transformations over dataflow graphs.

Every transform clones the input, mutates the clone, and returns it; when a
precondition fails an ApplicabilityError is raised and the caller's graph
is untouched. None of the transforms re-associates arithmetic, so each one
preserves interpreter output bit for bit.

Map references are accepted as MapNode objects or node ids; the text
recipe front end resolves maps by parameter name instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .errors import ApplicabilityError, GraphLookupError, ParseError
from .ir import (
    CopyNode,
    DataflowGraph,
    ForNode,
    MapNode,
    Memlet,
    Node,
    Range,
    Schedule,
    State,
    Storage,
    Tasklet,
    find_map_by_param,
    specialize_symbol,
    validate,
)
from .symexpr import Affine, MinExpr, make_min

__all__ = [
    "map_expansion",
    "map_collapse",
    "map_fusion",
    "map_tiling",
    "strip_mining",
    "warp_tiling",
    "local_storage",
    "state_fusion",
    "map_to_for_loop",
    "apply_device_transformations",
    "set_schedule",
    "simplify",
    "ax_optimization_recipe",
    "SCRATCH_BUDGET_BYTES",
    "PassRecipe",
    "parse_recipe",
    "apply_recipe",
]

SCRATCH_BUDGET_BYTES = 64 * 1024


def _node_id(ref) -> int:
    if isinstance(ref, int):
        return ref
    nid = getattr(ref, "node_id", None)
    if nid is None:
        raise ApplicabilityError(f"not a node reference: {ref!r}")
    return nid


def _get_map(g: DataflowGraph, ref, what: str) -> MapNode:
    node = g.find_node(_node_id(ref))
    if not isinstance(node, MapNode):
        raise ApplicabilityError(f"{what} is not a map node")
    return node


def _rename_vars(nodes: list[Node], mapping: dict[str, str]) -> None:
    """Rename free variables in every expression under the given nodes."""

    def rn(e):
        for old, new in mapping.items():
            e = e.rename(old, new)
        return e

    for node in nodes:
        if isinstance(node, MapNode):
            node.ranges = tuple(
                Range(begin=rn(r.begin), end=rn(r.end)) for r in node.ranges
            )
            _rename_vars(node.body, mapping)
        elif isinstance(node, ForNode):
            node.range = Range(begin=rn(node.range.begin), end=rn(node.range.end))
            _rename_vars(node.body, mapping)
        elif isinstance(node, Tasklet):
            for m in list(node.ins.values()) + list(node.outs.values()):
                m.subset = tuple(rn(e) for e in m.subset)
        elif isinstance(node, CopyNode):
            node.src_offset = tuple(
                rn(e) if e is not None else None for e in node.src_offset
            )


def _subtree_params(node: Node) -> set[str]:
    out: set[str] = set()

    def rec(n: Node):
        if isinstance(n, (MapNode, ForNode)):
            if isinstance(n, MapNode):
                out.update(n.params)
            else:
                out.add(n.param)
            for child in n.body:
                rec(child)

    rec(node)
    return out


def _subtree_accesses(node: Node):
    """Yield (container, subset, is_write, node) for tasklet accesses and
    (container, None, is_write, node) for copy endpoints."""

    def rec(n: Node):
        if isinstance(n, Tasklet):
            for m in n.ins.values():
                yield (m.container, m.subset, False, n)
            for m in n.outs.values():
                yield (m.container, m.subset, True, n)
        elif isinstance(n, CopyNode):
            yield (n.src, None, False, n)
            yield (n.dst, None, True, n)
        elif isinstance(n, (MapNode, ForNode)):
            for child in n.body:
                yield from rec(child)

    yield from rec(node)


# ------------------------------------------------------------- expansion

def map_expansion(g: DataflowGraph, m) -> DataflowGraph:
    """Split a multi-parameter map into a nest of single-parameter maps."""
    out = g.clone()
    node = _get_map(out, m, "map_expansion target")
    if len(node.params) < 2:
        raise ApplicabilityError("map_expansion needs a map with at least 2 params")
    parent, idx = out.parent_of(node.node_id)
    current_body = node.body
    built: MapNode | None = None
    for param, rng in zip(reversed(node.params), reversed(node.ranges)):
        built = MapNode(
            node_id=out.new_id(),
            params=(param,),
            ranges=(rng,),
            schedule=Schedule.SEQUENTIAL,
            body=current_body,
        )
        current_body = [built]
    built.schedule = node.schedule
    parent[idx] = built
    return out


def map_collapse(g: DataflowGraph, outer, inner) -> DataflowGraph:
    """Merge a perfectly nested pair of maps into one."""
    out = g.clone()
    node_o = _get_map(out, outer, "map_collapse outer")
    inner_id = _node_id(inner)
    if (
        len(node_o.body) != 1
        or not isinstance(node_o.body[0], MapNode)
        or node_o.body[0].node_id != inner_id
    ):
        raise ApplicabilityError(
            "map_collapse requires the inner map to be the sole child of the outer"
        )
    node_i = node_o.body[0]
    merged = MapNode(
        node_id=out.new_id(),
        params=node_o.params + node_i.params,
        ranges=node_o.ranges + node_i.ranges,
        schedule=node_o.schedule,
        body=node_i.body,
    )
    parent, idx = out.parent_of(node_o.node_id)
    parent[idx] = merged
    return out


# --------------------------------------------------------------- fusion

def _pin_expr(e: Affine, fused: set[str]) -> bool:
    return (
        isinstance(e, Affine)
        and len(e.terms) == 1
        and e.terms[0][1] == 1
        and e.terms[0][0] in fused
    )


def map_fusion(g: DataflowGraph, first, second) -> DataflowGraph:
    """Fuse two adjacent sibling maps whose iteration spaces align.

    The dependency condition is the conservative pointwise criterion: for
    every container touched by both maps with at least one write, each
    subset dimension that involves a fused parameter must be the identical
    coefficient-1 expression on both sides, so iteration v of the second
    map touches only cells iteration v of the first owned.

    Transient containers written only by the first map and read by the
    second become per-iteration scratch: storage ScratchShared with the
    fused-parameter dimensions stripped.
    """
    out = g.clone()
    node_f = _get_map(out, first, "map_fusion first")
    node_s = _get_map(out, second, "map_fusion second")
    parent, idx = out.parent_of(node_f.node_id)
    if (
        idx + 1 >= len(parent)
        or not isinstance(parent[idx + 1], MapNode)
        or parent[idx + 1].node_id != node_s.node_id
    ):
        raise ApplicabilityError(
            "map_fusion requires the second map to immediately follow the first"
        )
    if len(node_f.params) != len(node_s.params):
        raise ApplicabilityError("map_fusion: parameter counts differ")
    if node_f.ranges != node_s.ranges:
        raise ApplicabilityError("map_fusion: iteration ranges differ")
    if set(node_f.params) & _subtree_params(node_s):
        raise ApplicabilityError(
            "map_fusion: first map's parameters appear inside the second map"
        )

    mapping = {
        sp: fp for sp, fp in zip(node_s.params, node_f.params) if sp != fp
    }
    _rename_vars(node_s.body, mapping)

    fused = set(node_f.params)
    acc_f: dict[str, list[tuple[tuple[Affine, ...] | None, bool]]] = {}
    acc_s: dict[str, list[tuple[tuple[Affine, ...] | None, bool]]] = {}
    for container, subset, is_write, _ in _subtree_accesses(node_f):
        acc_f.setdefault(container, []).append((subset, is_write))
    for container, subset, is_write, _ in _subtree_accesses(node_s):
        acc_s.setdefault(container, []).append((subset, is_write))

    for name in sorted(set(acc_f) & set(acc_s)):
        for sub_a, w_a in acc_f[name]:
            for sub_b, w_b in acc_s[name]:
                if not (w_a or w_b):
                    continue
                if sub_a is None or sub_b is None:
                    raise ApplicabilityError(
                        f"map_fusion: copy access to '{name}' blocks fusion"
                    )
                for ea, eb in zip(sub_a, sub_b):
                    touches = (ea.vars() | eb.vars()) & fused
                    if not touches:
                        continue
                    if ea != eb or not _pin_expr(ea, fused):
                        raise ApplicabilityError(
                            f"map_fusion: container '{name}' is not accessed "
                            "pointwise in the fused parameters"
                        )

    merged = MapNode(
        node_id=out.new_id(),
        params=node_f.params,
        ranges=node_f.ranges,
        schedule=node_f.schedule,
        body=node_f.body + node_s.body,
    )
    parent[idx] = merged
    del parent[idx + 1]

    _demote_intermediates(out, merged, acc_f, acc_s, fused)
    return out


def _demote_intermediates(g, merged: MapNode, acc_f, acc_s, fused: set[str]) -> None:
    """Strip fused dims from first-to-second transient bridges."""
    containers = {c.name: c for c in g.containers}
    merged_ids = {n.node_id for n, _ in _walk_subtree(merged)}
    outside: set[str] = set()
    for node, _ in g.walk():
        if node.node_id in merged_ids:
            continue
        if isinstance(node, Tasklet):
            outside.update(m.container for m in node.ins.values())
            outside.update(m.container for m in node.outs.values())
        elif isinstance(node, CopyNode):
            outside.add(node.src)
            outside.add(node.dst)

    for name in sorted(set(acc_f) & set(acc_s)):
        c = containers.get(name)
        if c is None or not c.transient or name in outside:
            continue
        if any(w for _, w in acc_s[name]):
            continue
        if not any(w for _, w in acc_f[name]):
            continue
        everything = acc_f[name] + acc_s[name]
        if any(sub is None for sub, _ in everything):
            continue
        template = everything[0][0]
        strip = [
            d
            for d, e in enumerate(template)
            if _pin_expr(e, fused)
            and all(sub[d] == e for sub, _ in everything)
        ]
        if not strip:
            continue
        keep = [d for d in range(len(template)) if d not in strip]
        c.storage = Storage.SCRATCH_SHARED
        c.shape = tuple(c.shape[d] for d in keep)
        for node, _ in g.walk():
            if isinstance(node, Tasklet):
                for m in list(node.ins.values()) + list(node.outs.values()):
                    if m.container == name:
                        m.subset = tuple(m.subset[d] for d in keep)


# --------------------------------------------------------------- tiling

def _const_range(r: Range) -> tuple[int, int]:
    if not r.begin.is_const:
        raise ApplicabilityError("tiling requires constant map ranges")
    if isinstance(r.end, MinExpr) or not r.end.is_const:
        raise ApplicabilityError("tiling requires constant map ranges")
    return r.begin.const, r.end.const


def _fresh_param(g: DataflowGraph, base: str) -> str:
    used = set(g.symbols)
    for node, _ in g.walk():
        if isinstance(node, MapNode):
            used.update(node.params)
        elif isinstance(node, ForNode):
            used.add(node.param)
    name = base
    while name in used:
        name += "t"
    return name


def _tile_ranges(
    g: DataflowGraph, params, ranges, tiles
) -> tuple[tuple[str, ...], tuple[Range, ...], tuple[Range, ...]]:
    outer_params = []
    outer_ranges = []
    inner_ranges = []
    for param, rng, tile in zip(params, ranges, tiles):
        if not isinstance(tile, int) or tile < 1:
            raise ApplicabilityError(f"tile size for '{param}' must be a positive integer")
        begin, end = _const_range(rng)
        extent = max(end - begin, 0)
        n_tiles = -(-extent // tile) if extent else 0
        tp = _fresh_param(g, param + "t")
        outer_params.append(tp)
        outer_ranges.append(Range(Affine.of(0), Affine.of(n_tiles)))
        start = Affine.of(begin) + Affine.of(tp).scaled(tile)
        stop = start + Affine.of(tile)
        if extent % tile:
            inner_ranges.append(Range(start, make_min(stop, Affine.of(end))))
        else:
            inner_ranges.append(Range(start, stop))
    return tuple(outer_params), tuple(outer_ranges), tuple(inner_ranges)


def map_tiling(g: DataflowGraph, m, tile_sizes) -> DataflowGraph:
    """Split a map into a tile-index map over an intra-tile map.

    Inner parameters keep their original names and ranges become
    [t*T, min(t*T+T, end)), so the body needs no rewriting and the
    iteration multiset is preserved exactly.
    """
    out = g.clone()
    node = _get_map(out, m, "map_tiling target")
    tiles = tuple(tile_sizes)
    if len(tiles) != len(node.params):
        raise ApplicabilityError(
            f"map_tiling needs {len(node.params)} tile sizes, got {len(tiles)}"
        )
    outer_params, outer_ranges, inner_ranges = _tile_ranges(
        out, node.params, node.ranges, tiles
    )
    inner = MapNode(
        node_id=out.new_id(),
        params=node.params,
        ranges=inner_ranges,
        schedule=Schedule.SEQUENTIAL,
        body=node.body,
    )
    outer = MapNode(
        node_id=out.new_id(),
        params=outer_params,
        ranges=outer_ranges,
        schedule=node.schedule,
        body=[inner],
    )
    parent, idx = out.parent_of(node.node_id)
    parent[idx] = outer
    return out


def _strip_mine(g: DataflowGraph, m, param: str, strip: int):
    out = g.clone()
    node = _get_map(out, m, "strip_mining target")
    if param not in node.params:
        raise ApplicabilityError(f"map has no parameter '{param}'")
    if not isinstance(strip, int) or strip < 1:
        raise ApplicabilityError("strip factor must be a positive integer")
    pos = node.params.index(param)
    (tp,), (outer_rng,), (inner_rng,) = _tile_ranges(
        out, (param,), (node.ranges[pos],), (strip,)
    )
    inner = MapNode(
        node_id=out.new_id(),
        params=(param,),
        ranges=(inner_rng,),
        schedule=Schedule.SEQUENTIAL,
        body=node.body,
    )
    outer = MapNode(
        node_id=out.new_id(),
        params=node.params[:pos] + (tp,) + node.params[pos + 1 :],
        ranges=node.ranges[:pos] + (outer_rng,) + node.ranges[pos + 1 :],
        schedule=node.schedule,
        body=[inner],
    )
    parent, idx = out.parent_of(node.node_id)
    parent[idx] = outer
    return out, outer, inner


def strip_mining(g: DataflowGraph, m, param: str, strip: int) -> DataflowGraph:
    """Tile a single parameter, keeping the others in the outer map."""
    out, _, _ = _strip_mine(g, m, param, strip)
    return out


def warp_tiling(g: DataflowGraph, m, width: int) -> DataflowGraph:
    """Strip-mine the innermost parameter and run the strip as DeviceBlock.

    Width 1 degenerates to a pure schedule change on the target map.
    """
    probe = _get_map(g, m, "warp_tiling target")
    if width == 1:
        return set_schedule(g, probe, Schedule.DEVICE_BLOCK)
    innermost = probe.params[-1]
    out, _, inner = _strip_mine(g, m, innermost, width)
    return set_schedule(out, inner, Schedule.DEVICE_BLOCK)


# -------------------------------------------------------- local storage

def local_storage(g: DataflowGraph, array: str, node_a, node_b) -> DataflowGraph:
    """Cache the slice of `array` one node_a iteration needs in scratch.

    A dimension is pinned when every read inside node_b uses one identical
    index expression legal at node_a's body scope; pinned dimensions are
    dropped from the cached container and fixed in the copy. All other
    dimensions are cached whole.
    """
    out = g.clone()
    map_a = _get_map(out, node_a, "local_storage node_a")
    map_b = _get_map(out, node_b, "local_storage node_b")
    b_pos = next(
        (
            i
            for i, child in enumerate(map_a.body)
            if child.node_id == map_b.node_id
        ),
        None,
    )
    if b_pos is None:
        raise ApplicabilityError(
            "local_storage requires node_b to be a direct child of node_a"
        )
    if not out.has_container(array):
        raise ApplicabilityError(f"no container named '{array}'")

    reads: list[Memlet] = []
    for container, subset, is_write, node in _subtree_accesses(map_b):
        if container != array:
            continue
        if is_write:
            raise ApplicabilityError(
                f"local_storage: '{array}' is written inside node_b"
            )
        if isinstance(node, CopyNode):
            raise ApplicabilityError(
                f"local_storage: '{array}' is read by a copy node"
            )
    for node, _ in _walk_subtree(map_b):
        if isinstance(node, Tasklet):
            reads.extend(m for m in node.ins.values() if m.container == array)
    if not reads:
        raise ApplicabilityError(
            f"local_storage: '{array}' is not read inside node_b"
        )

    visible = _visible_at(out, map_a)
    src = out.container(array)
    rank = src.rank
    pinned: list[Affine | None] = []
    for d in range(rank):
        exprs = {m.subset[d] for m in reads}
        if len(exprs) == 1:
            e = next(iter(exprs))
            if e.vars() <= visible:
                pinned.append(e)
                continue
        pinned.append(None)

    keep = [d for d in range(rank) if pinned[d] is None]
    local_name = _fresh_container(out, array + "_loc")
    out.add_container(
        local_name,
        [src.shape[d] for d in keep],
        storage=Storage.SCRATCH_SHARED,
        transient=True,
    )
    copy = CopyNode(
        node_id=out.new_id(),
        src=array,
        dst=local_name,
        src_offset=tuple(pinned),
    )
    map_a.body.insert(b_pos, copy)
    for node, _ in _walk_subtree(map_b):
        if isinstance(node, Tasklet):
            for m in node.ins.values():
                if m.container == array:
                    m.container = local_name
                    m.subset = tuple(m.subset[d] for d in keep)
    return out


def _walk_subtree(node: Node):
    def rec(n: Node, scopes):
        yield n, scopes
        if isinstance(n, (MapNode, ForNode)):
            for child in n.body:
                yield from rec(child, scopes + (n,))

    yield from rec(node, ())


def _visible_at(g: DataflowGraph, target: Node) -> set[str]:
    """Graph symbols plus iterators in scope inside the target node."""
    for node, scopes in g.walk():
        if node is target:
            vis = set(g.symbols)
            for s in scopes:
                if isinstance(s, MapNode):
                    vis.update(s.params)
                else:
                    vis.add(s.param)
            if isinstance(target, MapNode):
                vis.update(target.params)
            else:
                vis.add(target.param)
            return vis
    raise GraphLookupError("node not found in graph", count=0)


def _fresh_container(g: DataflowGraph, base: str) -> str:
    name = base
    while g.has_container(name):
        name += "_"
    return name


# ---------------------------------------------------------------- misc

def state_fusion(g: DataflowGraph, s1: str, s2: str) -> DataflowGraph:
    """Concatenate two consecutive states; linear order keeps it a DAG."""
    out = g.clone()
    names = [s.name for s in out.states]
    if s1 not in names or s2 not in names:
        raise ApplicabilityError(f"no such states '{s1}', '{s2}'")
    i1, i2 = names.index(s1), names.index(s2)
    if i2 != i1 + 1:
        raise ApplicabilityError(
            f"state_fusion requires '{s2}' to immediately follow '{s1}'"
        )
    out.states[i1].nodes.extend(out.states[i2].nodes)
    del out.states[i2]
    return out


def map_to_for_loop(g: DataflowGraph, m) -> DataflowGraph:
    """Demote a single-parameter map to a sequential loop."""
    out = g.clone()
    node = _get_map(out, m, "map_to_for_loop target")
    if len(node.params) != 1:
        raise ApplicabilityError(
            "map_to_for_loop needs a single-param map; expand first"
        )
    loop = ForNode(
        node_id=out.new_id(),
        param=node.params[0],
        range=node.ranges[0],
        body=node.body,
    )
    parent, idx = out.parent_of(node.node_id)
    parent[idx] = loop
    return out


def apply_device_transformations(g: DataflowGraph) -> DataflowGraph:
    """Outermost maps become DeviceGrid; inputs/outputs move to DeviceGlobal."""
    out = g.clone()
    for state in out.states:
        for node in state.nodes:
            if isinstance(node, MapNode):
                node.schedule = Schedule.DEVICE_GRID
    for c in out.containers:
        if not c.transient:
            c.storage = Storage.DEVICE_GLOBAL
    return out


def _to_schedule(value) -> Schedule:
    if isinstance(value, Schedule):
        return value
    for member in Schedule:
        if member.value == value or member.name == value:
            return member
    raise ApplicabilityError(f"unknown schedule '{value}'")


def set_schedule(g: DataflowGraph, m, schedule) -> DataflowGraph:
    """Change a map's schedule annotation; semantics are unaffected."""
    sched = _to_schedule(schedule)
    out = g.clone()
    node = _get_map(out, m, "set_schedule target")
    node.schedule = sched
    for d in validate(out):
        if d.rule == "schedule-nesting":
            raise ApplicabilityError(f"set_schedule: {d.message}")
    return out


def simplify(g: DataflowGraph) -> DataflowGraph:
    """Fixed point of state fusion, self-copy removal, and dead-transient
    elimination."""
    out = g.clone()
    while len(out.states) > 1:
        out.states[0].nodes.extend(out.states[1].nodes)
        del out.states[1]

    transients = {c.name for c in out.containers if c.transient}
    changed = True
    while changed:
        changed = False

        read: set[str] = set()
        written: set[str] = set()
        for node, _ in out.walk():
            if isinstance(node, Tasklet):
                read.update(m.container for m in node.ins.values())
                written.update(m.container for m in node.outs.values())
            elif isinstance(node, CopyNode):
                read.add(node.src)
                written.add(node.dst)

        def prune(nodes: list[Node]) -> bool:
            did = False
            for i in range(len(nodes) - 1, -1, -1):
                node = nodes[i]
                if isinstance(node, (MapNode, ForNode)):
                    did = prune(node.body) or did
                elif isinstance(node, CopyNode):
                    if node.src == node.dst and all(
                        e is None for e in node.src_offset
                    ):
                        del nodes[i]
                        did = True
                elif isinstance(node, Tasklet):
                    outs = set(m.container for m in node.outs.values())
                    if outs and outs <= transients and not (outs & read):
                        del nodes[i]
                        did = True
            return did

        for state in out.states:
            if prune(state.nodes):
                changed = True

        accessed: set[str] = set()
        for node, _ in out.walk():
            for name, _, _, _ in _subtree_accesses(node):
                accessed.add(name)
        before = len(out.containers)
        out.containers = [
            c
            for c in out.containers
            if not c.transient or c.name in accessed
        ]
        if len(out.containers) != before:
            changed = True
    return out


# --------------------------------------------------------------- recipe

def _scratch_bytes(g: DataflowGraph) -> int | None:
    total = 0
    for c in g.containers:
        if c.storage is not Storage.SCRATCH_SHARED:
            continue
        n = 1
        for s in c.shape:
            if not s.is_const:
                return None
            n *= s.const
        total += 8 * n
    return total


def ax_optimization_recipe(g: DataflowGraph, lx_val: int) -> DataflowGraph:
    """The two-phase schedule: restructure each element map to an outer
    element loop over a collapsed k,j,i DeviceBlock map with its inputs
    cached in scratch, then fuse the element maps and clean up.

    Raises ApplicabilityError carrying the 1-based step index of the
    failing pass.
    """
    steps: list[tuple[str, object]] = []

    def phase(suffix: str, arrays: tuple[str, ...]):
        kp, jp, ip, ep = "k" + suffix, "j" + suffix, "i" + suffix, "e" + suffix
        steps.extend(
            [
                (f"expand the {ep} map", lambda h: map_expansion(h, find_map_by_param(h, ep))),
                (
                    f"collapse {jp},{ip}",
                    lambda h: map_collapse(
                        h, find_map_by_param(h, jp), find_map_by_param(h, ip)
                    ),
                ),
                (
                    f"collapse {kp},{jp}{ip}",
                    lambda h: map_collapse(
                        h, find_map_by_param(h, kp), find_map_by_param(h, jp)
                    ),
                ),
            ]
        )
        if not suffix:
            steps.append(("specialize lx", lambda h: _specialize_lx(h, lx_val)))
        steps.append(
            (
                f"schedule {kp},{jp},{ip} as DeviceBlock",
                lambda h: set_schedule(
                    h, find_map_by_param(h, kp), Schedule.DEVICE_BLOCK
                ),
            )
        )
        for arr in arrays:
            steps.append(
                (
                    f"cache {arr}",
                    lambda h, a=arr: local_storage(
                        h,
                        a,
                        find_map_by_param(h, ep),
                        find_map_by_param(h, kp),
                    ),
                )
            )

    steps.append(("apply device transformations", apply_device_transformations))
    phase("", ("ud", "dxd", "dyd", "dzd"))
    phase("2", ("dxtd", "dytd", "dztd"))
    steps.append(
        (
            "fuse the element maps",
            lambda h: map_fusion(
                h, find_map_by_param(h, "e"), find_map_by_param(h, "e2")
            ),
        )
    )
    steps.append(("simplify", simplify))

    current = g
    for index, (label, fn) in enumerate(steps, start=1):
        try:
            current = fn(current)
        except (ApplicabilityError, GraphLookupError) as exc:
            raise ApplicabilityError(
                f"recipe step {index} ({label}) failed: {exc}", step=index
            ) from exc

    grid_maps = [
        n
        for n, _ in current.walk()
        if isinstance(n, MapNode) and n.schedule is Schedule.DEVICE_GRID
    ]
    if len(grid_maps) != 1:
        raise ApplicabilityError(
            f"recipe post-condition failed: {len(grid_maps)} DeviceGrid maps remain"
        )
    diags = validate(current)
    if diags:
        raise ApplicabilityError(
            "recipe post-condition failed: " + "; ".join(str(d) for d in diags[:3])
        )
    total = _scratch_bytes(current)
    if total is not None and total > SCRATCH_BUDGET_BYTES:
        warnings.warn(
            f"scratch usage {total} bytes exceeds the "
            f"{SCRATCH_BUDGET_BYTES} byte budget",
            stacklevel=2,
        )
    return current


def _specialize_lx(g: DataflowGraph, lx_val: int) -> DataflowGraph:
    if "lx" in g.symbols:
        return specialize_symbol(g, "lx", lx_val)
    # already specialized: accept only if the inner extents agree
    try:
        inner = find_map_by_param(g, "k")
    except GraphLookupError as exc:
        raise ApplicabilityError(str(exc)) from exc
    ext = inner.ranges[0].extent_const()
    if ext != lx_val:
        raise ApplicabilityError(
            f"graph is specialized to extent {ext}, recipe asked for {lx_val}"
        )
    return g


# ---------------------------------------------------------- text recipes

@dataclass
class PassRecipe:
    entries: list[tuple[str, dict[str, object]]]


def _coerce(text: str):
    if "," in text:
        return tuple(_coerce(part) for part in text.split(","))
    try:
        return int(text)
    except ValueError:
        return text


def parse_recipe(text: str) -> PassRecipe:
    entries: list[tuple[str, dict[str, object]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        name = parts[0]
        if name not in _REGISTRY:
            raise ParseError(f"line {lineno}: unknown transform '{name}'")
        params: dict[str, object] = {}
        for part in parts[1:]:
            if "=" not in part:
                raise ParseError(
                    f"line {lineno}: expected key=value, got '{part}'"
                )
            key, val = part.split("=", 1)
            params[key] = _coerce(val)
        entries.append((name, params))
    return PassRecipe(entries=entries)


def apply_recipe(g: DataflowGraph, recipe: PassRecipe) -> DataflowGraph:
    current = g
    for name, params in recipe.entries:
        applier = _REGISTRY.get(name)
        if applier is None:
            raise ApplicabilityError(f"unknown transform '{name}'")
        try:
            current = applier(current, dict(params))
        except TypeError as exc:
            raise ApplicabilityError(f"{name}: bad parameters: {exc}") from exc
        except KeyError as exc:
            raise ApplicabilityError(
                f"{name}: missing parameter {exc.args[0]!r}"
            ) from exc
    return current


def _by_param(g: DataflowGraph, name) -> MapNode:
    try:
        return find_map_by_param(g, str(name))
    except GraphLookupError as exc:
        raise ApplicabilityError(str(exc)) from exc


def _tiles_tuple(value) -> tuple[int, ...]:
    if isinstance(value, int):
        return (value,)
    return tuple(int(v) for v in value)


_REGISTRY = {
    "map_expansion": lambda g, p: map_expansion(g, _by_param(g, p["param"])),
    "map_collapse": lambda g, p: map_collapse(
        g, _by_param(g, p["outer"]), _by_param(g, p["inner"])
    ),
    "map_fusion": lambda g, p: map_fusion(
        g, _by_param(g, p["first"]), _by_param(g, p["second"])
    ),
    "map_tiling": lambda g, p: map_tiling(
        g, _by_param(g, p["param"]), _tiles_tuple(p["tiles"])
    ),
    "strip_mining": lambda g, p: strip_mining(
        g, _by_param(g, p["param"]), str(p["param"]), int(p["strip"])
    ),
    "warp_tiling": lambda g, p: warp_tiling(
        g, _by_param(g, p["param"]), int(p["width"])
    ),
    "local_storage": lambda g, p: local_storage(
        g,
        str(p["array"]),
        _by_param(g, p["node_a"]),
        _by_param(g, p["node_b"]),
    ),
    "state_fusion": lambda g, p: state_fusion(
        g, str(p["first"]), str(p["second"])
    ),
    "map_to_for_loop": lambda g, p: map_to_for_loop(g, _by_param(g, p["param"])),
    "apply_device_transformations": lambda g, p: apply_device_transformations(g),
    "set_schedule": lambda g, p: set_schedule(
        g, _by_param(g, p["param"]), str(p["schedule"])
    ),
    "simplify": lambda g, p: simplify(g),
    "specialize_symbol": lambda g, p: specialize_symbol(
        g, str(p["name"]), int(p["value"])
    ),
    "ax_optimization_recipe": lambda g, p: ax_optimization_recipe(
        g, int(p["lx"])
    ),
}

"""Graph structure, builder shape, validation rules, lookups, equality."""

import pytest

from mdg import (
    ABI_CONTAINER_ORDER,
    CopyNode,
    DataflowGraph,
    GraphLookupError,
    MapNode,
    Memlet,
    Range,
    Schedule,
    State,
    Storage,
    Tasklet,
    build_ax_program,
    parse_affine,
    structurally_equal,
    validate,
)
from mdg.ir import find_map_by_param, specialize_symbol, to_document
from mdg.symexpr import Affine


def aff(text):
    return parse_affine(str(text))


def rng01(end):
    return Range(aff(0), aff(end))


def empty_graph():
    g = DataflowGraph(name="t")
    g.states.append(State(name="main"))
    return g


def graph_with_tasklet(subset=("0",), shape=(4,), body="y = x + 1.0"):
    """Minimal one-tasklet graph: reads a[...], writes b[...]."""
    g = empty_graph()
    g.add_container("a", [aff(s) for s in shape])
    g.add_container("b", [aff(s) for s in shape])
    t = Tasklet(
        node_id=g.new_id(),
        ins={"x": Memlet("a", tuple(aff(s) for s in subset))},
        outs={"y": Memlet("b", tuple(aff(s) for s in subset))},
        body=body,
    )
    g.states[0].nodes.append(t)
    return g, t


class TestBuilder:
    def test_interface_container_order_is_the_abi(self):
        g = build_ax_program(4, "nel")
        iface = tuple(c.name for c in g.containers if not c.transient)
        assert iface == ABI_CONTAINER_ORDER

    def test_transients_and_symbols(self):
        g = build_ax_program(4, "nel")
        trans = [c.name for c in g.containers if c.transient]
        assert trans == ["rtmp", "stmp", "ttmp", "urtmp", "ustmp", "uttmp"]
        assert g.symbols == {"nel"}
        assert all(
            g.container(n).storage is Storage.HOST_HEAP for n in trans
        )

    def test_shapes(self):
        g = build_ax_program(4, "nel")
        assert [str(d) for d in g.container("ud").shape] == ["nel", "4", "4", "4"]
        assert [str(d) for d in g.container("dxtd").shape] == ["4", "4"]
        g2 = build_ax_program("lx", "nel")
        assert g2.symbols == {"nel", "lx"}
        assert [str(d) for d in g2.container("wd").shape] == ["nel", "lx", "lx", "lx"]

    def test_two_device_grid_maps_in_one_state(self):
        g = build_ax_program(4, "nel")
        assert [s.name for s in g.states] == ["main"]
        maps = [n for n in g.states[0].nodes if isinstance(n, MapNode)]
        assert len(maps) == 2
        assert maps[0].params == ("e", "k", "j", "i")
        assert maps[1].params == ("e2", "k2", "j2", "i2")
        assert all(m.schedule is Schedule.DEVICE_GRID for m in maps)

    def test_first_map_bodies(self):
        g = build_ax_program(4, "nel")
        init, loop, combine = g.states[0].nodes[0].body
        assert init.body == "r = 0.0\ns = 0.0\nt = 0.0"
        assert loop.param == "l"
        acc = loop.body[0]
        assert acc.body == (
            "r_out = r_in + dx * ux\n"
            "s_out = s_in + dy * uy\n"
            "t_out = t_in + dz * uz"
        )
        assert str(acc.ins["ux"].subset[3]) == "l"
        assert str(acc.ins["uy"].subset[2]) == "l"
        assert str(acc.ins["uz"].subset[1]) == "l"
        assert sorted(combine.outs) == ["ur", "us", "ut"]

    def test_validates_clean_for_const_and_symbolic(self):
        assert validate(build_ax_program(4, "nel")) == []
        assert validate(build_ax_program("lx", "nel")) == []
        assert validate(build_ax_program(5, 7)) == []

class TestValidateRules:
    def assert_rule(self, g, rule):
        rules = [d.rule for d in validate(g)]
        assert rule in rules, f"expected {rule!r}, got {rules}"

    def test_clean_graph_has_no_diagnostics(self):
        g, _ = graph_with_tasklet()
        assert validate(g) == []

    def test_duplicate_container(self):
        g, _ = graph_with_tasklet()
        g.add_container("a", [aff(4)])
        self.assert_rule(g, "container-name")

    def test_invalid_container_name(self):
        g, _ = graph_with_tasklet()
        g.add_container("not an ident", [aff(4)])
        self.assert_rule(g, "container-name")

    def test_nontransient_scratch_storage(self):
        g, _ = graph_with_tasklet()
        g.add_container("s", [aff(4)], storage=Storage.SCRATCH_SHARED)
        self.assert_rule(g, "storage")

    def test_shape_with_undeclared_symbol(self):
        g, _ = graph_with_tasklet()
        g.add_container("c", [aff("m")])
        self.assert_rule(g, "symbol-table")

    def test_negative_shape(self):
        g, _ = graph_with_tasklet()
        g.add_container("c", [aff(-2)])
        self.assert_rule(g, "shape")

    def test_map_param_range_count_mismatch(self):
        g, t = graph_with_tasklet(subset=("i",))
        m = MapNode(
            node_id=g.new_id(),
            params=("i", "j"),
            ranges=(rng01(4),),
            schedule=Schedule.SEQUENTIAL,
            body=[t],
        )
        g.states[0].nodes = [m]
        self.assert_rule(g, "map-params")

    def test_shadowing_iterator(self):
        g, t = graph_with_tasklet(subset=("i",))
        inner = MapNode(g.new_id(), ("i",), (rng01(4),), Schedule.SEQUENTIAL, [t])
        outer = MapNode(g.new_id(), ("i",), (rng01(4),), Schedule.SEQUENTIAL, [inner])
        g.states[0].nodes = [outer]
        self.assert_rule(g, "map-params")

    def test_device_block_needs_grid(self):
        g, t = graph_with_tasklet(subset=("i",))
        m = MapNode(g.new_id(), ("i",), (rng01(4),), Schedule.DEVICE_BLOCK, [t])
        g.states[0].nodes = [m]
        self.assert_rule(g, "schedule-nesting")

    def test_negative_extent(self):
        g, t = graph_with_tasklet(subset=("i",))
        m = MapNode(
            g.new_id(), ("i",), (Range(aff(3), aff(1)),), Schedule.SEQUENTIAL, [t]
        )
        g.states[0].nodes = [m]
        self.assert_rule(g, "range")

    def test_free_variable_in_subset(self):
        g, _ = graph_with_tasklet(subset=("q",))
        self.assert_rule(g, "free-variable")

    def test_unknown_container_in_memlet(self):
        g, t = graph_with_tasklet()
        t.ins["x"] = Memlet("nope", (aff(0),))
        self.assert_rule(g, "memlet-container")

    def test_memlet_rank_mismatch(self):
        g, t = graph_with_tasklet()
        t.ins["x"] = Memlet("a", (aff(0), aff(0)))
        self.assert_rule(g, "memlet-rank")

    def test_tasklet_body_must_cover_connectors(self):
        g, _ = graph_with_tasklet(body="y = x + q")
        self.assert_rule(g, "tasklet-body")

    def test_tasklet_body_unassigned_output(self):
        g, _ = graph_with_tasklet(body="z = x")
        self.assert_rule(g, "tasklet-body")

    def test_uninitialized_transient_read(self):
        g, t = graph_with_tasklet()
        g.add_container("tmp", [aff(4)], transient=True)
        t.ins["x"] = Memlet("tmp", (aff(0),))
        self.assert_rule(g, "uninitialized-read")

    def test_write_before_read_is_fine(self):
        g, t = graph_with_tasklet()
        g.add_container("tmp", [aff(4)], transient=True)
        w = Tasklet(
            node_id=g.new_id(),
            ins={},
            outs={"z": Memlet("tmp", (aff(0),))},
            body="z = 0.0",
        )
        t.ins["x"] = Memlet("tmp", (aff(0),))
        g.states[0].nodes.insert(0, w)
        assert validate(g) == []

    def test_diagnostic_str_names_rule(self):
        g, _ = graph_with_tasklet(subset=("q",))
        d = validate(g)[0]
        assert "free-variable" in str(d)


class TestLookups:
    def test_find_map_by_param(self):
        g = build_ax_program(4, "nel")
        m = find_map_by_param(g, "e2")
        assert isinstance(m, MapNode) and "e2" in m.params

    def test_find_map_missing(self):
        g = build_ax_program(4, "nel")
        with pytest.raises(GraphLookupError) as ei:
            find_map_by_param(g, "zz")
        assert ei.value.count == 0

    def test_find_map_ambiguous(self):
        g, t = graph_with_tasklet(subset=("i",))
        m1 = MapNode(g.new_id(), ("i",), (rng01(4),), Schedule.SEQUENTIAL, [t])
        t2 = Tasklet(
            node_id=g.new_id(),
            ins={"x": Memlet("a", (aff("i"),))},
            outs={"y": Memlet("b", (aff("i"),), )},
            body="y = x",
        )
        m2 = MapNode(g.new_id(), ("i",), (rng01(4),), Schedule.SEQUENTIAL, [t2])
        g.states[0].nodes = [m1, m2]
        with pytest.raises(GraphLookupError) as ei:
            find_map_by_param(g, "i")
        assert ei.value.count == 2

    def test_parent_of_nested(self):
        g = build_ax_program(4, "nel")
        loop = g.states[0].nodes[0].body[1]
        owner, idx = g.parent_of(loop.node_id)
        assert owner is g.states[0].nodes[0].body and idx == 1

    def test_walk_program_order(self):
        g = build_ax_program(4, "nel")
        kinds = [type(n).__name__ for n, _ in g.walk()]
        assert kinds == [
            "MapNode", "Tasklet", "ForNode", "Tasklet", "Tasklet",
            "MapNode", "Tasklet", "ForNode", "Tasklet",
        ]
        scopes = dict((n.node_id, s) for n, s in g.walk())
        acc = g.states[0].nodes[0].body[1].body[0]
        assert [type(s).__name__ for s in scopes[acc.node_id]] == [
            "MapNode", "ForNode",
        ]


class TestSpecialize:
    def test_specialize_removes_symbol_and_rewrites(self):
        g = build_ax_program("lx", "nel")
        s = specialize_symbol(g, "lx", 6)
        assert "lx" not in s.symbols and "nel" in s.symbols
        assert [str(d) for d in s.container("ud").shape] == ["nel", "6", "6", "6"]
        m = find_map_by_param(s, "k")
        assert m.ranges[1].extent_const() == 6
        # the original is untouched
        assert "lx" in g.symbols

    def test_specialized_equals_directly_built(self):
        s = specialize_symbol(build_ax_program("lx", "nel"), "lx", 5)
        assert structurally_equal(s, build_ax_program(5, "nel"))


class TestStructuralEquality:
    def test_ignores_node_ids(self):
        a = build_ax_program(4, "nel")
        b = build_ax_program(4, "nel")
        b.next_node_id += 100
        for n, _ in b.walk():
            n.node_id += 100
        assert structurally_equal(a, b)

    def test_connector_order_is_canonical(self):
        a, _ = graph_with_tasklet()
        b, tb = graph_with_tasklet()
        tb.ins = dict(reversed(list(tb.ins.items())))
        assert structurally_equal(a, b)

    def test_container_order_matters(self):
        a = DataflowGraph(name="t")
        a.add_container("a", [aff(2)])
        a.add_container("b", [aff(2)])
        a.states.append(State(name="main"))
        b = DataflowGraph(name="t")
        b.add_container("b", [aff(2)])
        b.add_container("a", [aff(2)])
        b.states.append(State(name="main"))
        assert not structurally_equal(a, b)

    def test_body_difference_detected(self):
        a, _ = graph_with_tasklet(body="y = x + 1.0")
        b, _ = graph_with_tasklet(body="y = x + 2.0")
        assert not structurally_equal(a, b)

    def test_document_is_plain_data(self):
        import json

        doc = to_document(build_ax_program(4, "nel"))
        json.dumps(doc)
        assert doc["version"] == "mdg-1"

    def test_clone_isolated(self):
        g = build_ax_program(4, "nel")
        c = g.clone()
        c.states[0].nodes[0].body[0].body = "r = 1.0\ns = 0.0\nt = 0.0"
        assert g.states[0].nodes[0].body[0].body.startswith("r = 0.0")
        assert structurally_equal(g, build_ax_program(4, "nel"))


class TestCopyNodeChecks:
    def test_copy_rank_checked(self):
        g = empty_graph()
        g.add_container("src", [aff(4), aff(4)])
        g.add_container("dst", [aff(4)], storage=Storage.SCRATCH_SHARED, transient=True)
        g.states[0].nodes.append(
            CopyNode(g.new_id(), "src", "dst", (aff(0),))
        )
        rules = [d.rule for d in validate(g)]
        assert rules != []

    def test_valid_copy(self):
        g = empty_graph()
        g.add_container("src", [aff(4), aff(4)])
        g.add_container("dst", [aff(4)], storage=Storage.SCRATCH_SHARED, transient=True)
        g.states[0].nodes.append(CopyNode(g.new_id(), "src", "dst", (aff(1), None)))
        assert validate(g) == []

"""C source generation.

Lowers a validated dataflow graph to one self-contained C99 translation
unit plus a matching interface header.  The emitted bytes are a pure
function of the graph document and the :class:`EmitConfig`, so generating
twice from equal graphs yields byte-identical files.

ABI: one ``double*`` per non-transient container, in container declaration
order, ``const`` unless the kernel writes it, followed by ``int nelv`` and
``int lx``.  The polynomial order must already be specialized into the
graph; ``lx`` is accepted (and ignored) so callers can keep one call shape.
The only symbol allowed to survive is ``nel``, which maps to ``nelv``.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import tasklang
from .errors import CodegenError
from .ir import (
    CopyNode,
    DataContainer,
    DataflowGraph,
    ForNode,
    MapNode,
    Node,
    Schedule,
    Storage,
    Tasklet,
    Wcr,
    validate,
)
from .symexpr import Affine, MinExpr, RangeEnd

_SYMBOL_C_NAMES = {"nel": "nelv"}
_INDENT = "    "


@dataclass(frozen=True)
class EmitConfig:
    """Knobs for the C backend.

    parallel_annotations: emit one ``#pragma omp parallel for`` per
        DeviceGrid map (the source still compiles without OpenMP).
    restrict_aliasing: qualify interface pointers with ``restrict``.
    strict_fp: forbid contraction (``FP_CONTRACT OFF``) so results match
        the interpreter bit for bit on SSE2 hardware.
    """

    entry_symbol: str = "__dace_ax_helm"
    parallel_annotations: bool = True
    restrict_aliasing: bool = True
    strict_fp: bool = True


# ---------------------------------------------------------------- expressions


def _affine_c(expr: Affine) -> str:
    parts: list[str] = []
    for var, coeff in expr.terms:
        name = _SYMBOL_C_NAMES.get(var, var)
        if coeff == 1:
            parts.append(name)
        elif coeff == -1:
            parts.append(f"-{name}")
        else:
            parts.append(f"{coeff} * {name}")
    if expr.const != 0 or not parts:
        parts.append(str(expr.const))
    out = parts[0]
    for part in parts[1:]:
        if part.startswith("-"):
            out += f" - {part[1:]}"
        else:
            out += f" + {part}"
    return out


def _atom(text: str) -> str:
    return text if text.lstrip("-").isalnum() else f"({text})"


def _end_c(end: RangeEnd) -> str:
    if isinstance(end, MinExpr):
        a = _affine_c(end.a)
        b = _affine_c(end.b)
        return f"(({a}) < ({b}) ? ({a}) : ({b}))"
    return _affine_c(end)


def _flat_index(container: DataContainer, subset: tuple[Affine, ...]) -> str:
    if not subset:
        return "0"
    out = _atom(_affine_c(subset[0]))
    for dim, idx in zip(container.shape[1:], subset[1:]):
        out = f"({out} * {_atom(_affine_c(dim))} + {_affine_c(idx)})"
    return out


def _size_c(container: DataContainer) -> str:
    if not container.shape:
        return "1"
    if all(d.is_const for d in container.shape):
        n = 1
        for d in container.shape:
            n *= d.const
        return str(n)
    return " * ".join(f"(size_t){_atom(_affine_c(d))}" for d in container.shape)


def _prefix_vars(expr: tasklang.Expr) -> tasklang.Expr:
    kind = expr[0]
    if kind == "const":
        return expr
    if kind == "var":
        return ("var", f"v_{expr[1]}")
    if kind == "neg":
        return ("neg", _prefix_vars(expr[1]))
    return (kind, _prefix_vars(expr[1]), _prefix_vars(expr[2]))


# ---------------------------------------------------------------- layout


def _written_containers(g: DataflowGraph) -> set[str]:
    written: set[str] = set()
    for node, _ in g.walk():
        if isinstance(node, Tasklet):
            written.update(m.container for m in node.outs.values())
        elif isinstance(node, CopyNode):
            written.add(node.dst)
    return written


def _scratch_owners(g: DataflowGraph) -> dict[int | None, list[DataContainer]]:
    """Assign each stack-allocated transient to its declaring scope.

    The owner is the deepest MapNode on the longest common prefix of all
    access scope chains; trailing For scopes are trimmed so a container is
    never re-declared per sequential iteration.  ``None`` keys mean
    function scope.
    """
    chains: dict[str, list[tuple[int, ...]]] = {}

    def note(name: str, scopes: tuple[Node, ...]) -> None:
        chains.setdefault(name, []).append(tuple(s.node_id for s in scopes))

    for node, scopes in g.walk():
        if isinstance(node, Tasklet):
            for m in list(node.ins.values()) + list(node.outs.values()):
                note(m.container, scopes)
        elif isinstance(node, CopyNode):
            note(node.src, scopes)
            note(node.dst, scopes)

    maps = {
        node.node_id for node, _ in g.walk() if isinstance(node, MapNode)
    }
    owners: dict[int | None, list[DataContainer]] = {}
    for c in g.containers:
        if c.storage not in (Storage.SCRATCH_SHARED, Storage.REGISTER_TRANSIENT):
            continue
        accesses = chains.get(c.name, [])
        if not accesses:
            continue
        prefix = accesses[0]
        for chain in accesses[1:]:
            keep = 0
            for a, b in zip(prefix, chain):
                if a != b:
                    break
                keep += 1
            prefix = prefix[:keep]
        while prefix and prefix[-1] not in maps:
            prefix = prefix[:-1]
        owner = prefix[-1] if prefix else None
        owners.setdefault(owner, []).append(c)
    return owners


def _signature(g: DataflowGraph, cfg: EmitConfig) -> str:
    written = _written_containers(g)
    restrict = " restrict" if cfg.restrict_aliasing else ""
    params = []
    for c in g.containers:
        if c.transient:
            continue
        const = "" if c.name in written else "const "
        params.append(f"{const}double*{restrict} {c.name}")
    params.append("int nelv")
    params.append("int lx")
    return f"void {cfg.entry_symbol}({', '.join(params)})"


# ---------------------------------------------------------------- emitter


class _Emitter:
    def __init__(self, g: DataflowGraph, cfg: EmitConfig):
        self.g = g
        self.cfg = cfg
        self.lines: list[str] = []
        self.depth = 0
        self.owners = _scratch_owners(g)

    def line(self, text: str = "") -> None:
        self.lines.append(_INDENT * self.depth + text if text else "")

    def scratch_decls(self, owner: int | None) -> None:
        for c in self.owners.get(owner, []):
            self.line(f"double {c.name}[{_size_c(c)}];")

    def emit_map(self, node: MapNode) -> None:
        if (
            node.schedule is Schedule.DEVICE_GRID
            and self.cfg.parallel_annotations
        ):
            self.line("#pragma omp parallel for")
        opened = 0
        for param, rng in zip(node.params, node.ranges):
            begin = _affine_c(rng.begin)
            end = _end_c(rng.end)
            self.line(f"for (int {param} = {begin}; {param} < {end}; ++{param}) {{")
            self.depth += 1
            opened += 1
        self.scratch_decls(node.node_id)
        for child in node.body:
            self.emit_node(child)
        for _ in range(opened):
            self.depth -= 1
            self.line("}")

    def emit_for(self, node: ForNode) -> None:
        begin = _affine_c(node.range.begin)
        end = _end_c(node.range.end)
        p = node.param
        self.line(f"for (int {p} = {begin}; {p} < {end}; ++{p}) {{")
        self.depth += 1
        for child in node.body:
            self.emit_node(child)
        self.depth -= 1
        self.line("}")

    def emit_tasklet(self, node: Tasklet) -> None:
        self.line("{")
        self.depth += 1
        for name in sorted(node.ins):
            m = node.ins[name]
            c = self.g.container(m.container)
            self.line(
                f"const double v_{name} = {c.name}[{_flat_index(c, m.subset)}];"
            )
        for stmt in tasklang.parse_body(node.body):
            rhs = tasklang.expr_to_c(_prefix_vars(stmt.expr))
            self.line(f"const double v_{stmt.target} = {rhs};")
        for name in sorted(node.outs):
            m = node.outs[name]
            c = self.g.container(m.container)
            op = "+=" if m.wcr is Wcr.SUM else "="
            self.line(f"{c.name}[{_flat_index(c, m.subset)}] {op} v_{name};")
        self.depth -= 1
        self.line("}")

    def emit_copy(self, node: CopyNode) -> None:
        src = self.g.container(node.src)
        dst = self.g.container(node.dst)
        free = [d for d, off in enumerate(node.src_offset) if off is None]
        loop_vars = [f"c{k}_" for k in range(len(free))]
        opened = 0
        for var, dim in zip(loop_vars, dst.shape):
            self.line(f"for (int {var} = 0; {var} < {_affine_c(dim)}; ++{var}) {{")
            self.depth += 1
            opened += 1
        src_subset = []
        it = iter(loop_vars)
        for off in node.src_offset:
            src_subset.append(
                Affine.of(next(it)) if off is None else off
            )
        dst_subset = tuple(Affine.of(v) for v in loop_vars)
        self.line(
            f"{dst.name}[{_flat_index(dst, dst_subset)}] = "
            f"{src.name}[{_flat_index(src, tuple(src_subset))}];"
        )
        for _ in range(opened):
            self.depth -= 1
            self.line("}")

    def emit_node(self, node: Node) -> None:
        if isinstance(node, MapNode):
            self.emit_map(node)
        elif isinstance(node, ForNode):
            self.emit_for(node)
        elif isinstance(node, Tasklet):
            self.emit_tasklet(node)
        else:
            self.emit_copy(node)


def generate_source(g: DataflowGraph, cfg: EmitConfig | None = None) -> str:
    """Render the graph as a C99 translation unit.

    Raises CodegenError if the graph fails validation or still carries
    symbols other than ``nel``.
    """
    cfg = cfg or EmitConfig()
    diags = validate(g)
    if diags:
        raise CodegenError(
            "cannot generate code for invalid graph: " + "; ".join(
                str(d) for d in diags[:3]
            )
        )
    unresolved = sorted(g.symbols - set(_SYMBOL_C_NAMES))
    if unresolved:
        raise CodegenError(
            "unresolved symbols: "
            + ", ".join(unresolved)
            + "; specialize them before generating code"
        )

    heap = [
        c
        for c in g.containers
        if c.transient and c.storage in (Storage.HOST_HEAP, Storage.DEVICE_GLOBAL)
    ]

    em = _Emitter(g, cfg)
    em.line(f"/* {g.name}: generated C99 kernel */")
    if heap:
        em.line("#include <stdlib.h>")
        em.line()
    em.line(_signature(g, cfg))
    em.line("{")
    em.depth += 1
    if cfg.strict_fp:
        em.line("#pragma STDC FP_CONTRACT OFF")
    em.line("(void)lx;")
    if "nel" not in g.symbols:
        em.line("(void)nelv;")
    for c in heap:
        em.line(
            f"double* {c.name} = (double*)malloc(sizeof(double) * {_size_c(c)});"
        )
    em.scratch_decls(None)
    for state in g.states:
        for node in state.nodes:
            em.emit_node(node)
    for c in heap:
        em.line(f"free({c.name});")
    em.depth -= 1
    em.line("}")
    return "\n".join(em.lines) + "\n"


def generate_interface_header(g: DataflowGraph, cfg: EmitConfig | None = None) -> str:
    """Render a header declaring the kernel entry point."""
    cfg = cfg or EmitConfig()
    guard = "MDG_" + "".join(
        ch if ch.isalnum() else "_" for ch in cfg.entry_symbol.upper()
    ) + "_H"
    return (
        f"#ifndef {guard}\n"
        f"#define {guard}\n"
        "\n"
        f"{_signature(g, cfg)};\n"
        "\n"
        f"#endif\n"
    )

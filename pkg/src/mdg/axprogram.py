"""Builder for the spectral-element stiffness apply as a dataflow graph.

The program has two top-level element maps in one state. The first computes
the three reference-direction derivative accumulations into rtmp/stmp/ttmp,
then combines them with the geometric factors into urtmp/ustmp/uttmp. The
second contracts back with the transposed derivative matrices into wd.
Arithmetic matches ax_reference statement for statement, so interpretation
is bit-identical to the oracle.
"""

from __future__ import annotations

import numpy as np

from .ir import (
    DataflowGraph,
    ForNode,
    MapNode,
    Memlet,
    Range,
    Schedule,
    State,
    Storage,
    Tasklet,
)
from .sem import ElementField, GeomFactors, GllBasis, operator_matrices
from .symexpr import Affine

__all__ = ["build_ax_program", "ax_arrays", "ABI_CONTAINER_ORDER"]

# The exported-kernel parameter order; also the builder's declaration order.
ABI_CONTAINER_ORDER = (
    "wd",
    "ud",
    "dxd",
    "dyd",
    "dzd",
    "dxtd",
    "dytd",
    "dztd",
    "h1d",
    "g11d",
    "g22d",
    "g33d",
    "g12d",
    "g13d",
    "g23d",
)

_TRANSIENTS = ("rtmp", "stmp", "ttmp", "urtmp", "ustmp", "uttmp")


def build_ax_program(lx: int | str = "lx", nel: int | str = "nel") -> DataflowGraph:
    """The two-map element-loop program over symbolic or constant sizes."""
    g = DataflowGraph(name="ax")
    for s in (lx, nel):
        if isinstance(s, str):
            g.symbols.add(s)

    field = (nel, lx, lx, lx)
    matrix = (lx, lx)
    for name in ABI_CONTAINER_ORDER:
        g.add_container(name, matrix if name.startswith("d") else field)
    for name in _TRANSIENTS:
        g.add_container(name, field, storage=Storage.HOST_HEAP, transient=True)

    state = State(name="main")
    g.states.append(state)
    state.nodes.append(_first_map(g, lx, nel))
    state.nodes.append(_second_map(g, lx, nel))
    return g


def ax_arrays(
    u: ElementField, basis: GllBasis, geom: GeomFactors
) -> dict[str, np.ndarray]:
    """One buffer per program input, keyed by container name.

    All three derivative containers carry the same matrix because the
    reference element is the same cube in every direction; they stay
    separate containers so the caching transforms treat them as the
    kernel declares them.
    """
    dxd, dxtd = operator_matrices(basis)
    return {
        "wd": np.zeros_like(u.data),
        "ud": u.data,
        "dxd": dxd,
        "dyd": dxd,
        "dzd": dxd,
        "dxtd": dxtd,
        "dytd": dxtd,
        "dztd": dxtd,
        "h1d": geom.h1,
        "g11d": geom.g11,
        "g22d": geom.g22,
        "g33d": geom.g33,
        "g12d": geom.g12,
        "g13d": geom.g13,
        "g23d": geom.g23,
    }


def _pt(*exprs) -> tuple[Affine, ...]:
    return tuple(Affine.of(e) for e in exprs)


def _grid_map(g: DataflowGraph, params: tuple[str, ...], lx, nel) -> MapNode:
    ends = (nel, lx, lx, lx)
    return MapNode(
        node_id=g.new_id(),
        params=params,
        ranges=tuple(Range(Affine.of(0), Affine.of(end)) for end in ends),
        schedule=Schedule.DEVICE_GRID,
    )


def _first_map(g: DataflowGraph, lx, nel) -> MapNode:
    m = _grid_map(g, ("e", "k", "j", "i"), lx, nel)
    here = _pt("e", "k", "j", "i")

    m.body.append(
        Tasklet(
            node_id=g.new_id(),
            ins={},
            outs={
                "r": Memlet("rtmp", here),
                "s": Memlet("stmp", here),
                "t": Memlet("ttmp", here),
            },
            body="r = 0.0\ns = 0.0\nt = 0.0",
        )
    )

    loop = ForNode(
        node_id=g.new_id(),
        param="l",
        range=Range(Affine.of(0), Affine.of(lx)),
    )
    loop.body.append(
        Tasklet(
            node_id=g.new_id(),
            ins={
                "r_in": Memlet("rtmp", here),
                "s_in": Memlet("stmp", here),
                "t_in": Memlet("ttmp", here),
                "dx": Memlet("dxd", _pt("l", "i")),
                "dy": Memlet("dyd", _pt("l", "j")),
                "dz": Memlet("dzd", _pt("l", "k")),
                "ux": Memlet("ud", _pt("e", "k", "j", "l")),
                "uy": Memlet("ud", _pt("e", "k", "l", "i")),
                "uz": Memlet("ud", _pt("e", "l", "j", "i")),
            },
            outs={
                "r_out": Memlet("rtmp", here),
                "s_out": Memlet("stmp", here),
                "t_out": Memlet("ttmp", here),
            },
            body=(
                "r_out = r_in + dx * ux\n"
                "s_out = s_in + dy * uy\n"
                "t_out = t_in + dz * uz"
            ),
        )
    )
    m.body.append(loop)

    m.body.append(
        Tasklet(
            node_id=g.new_id(),
            ins={
                "r": Memlet("rtmp", here),
                "s": Memlet("stmp", here),
                "t": Memlet("ttmp", here),
                "H": Memlet("h1d", here),
                "G00": Memlet("g11d", here),
                "G01": Memlet("g12d", here),
                "G02": Memlet("g13d", here),
                "G11": Memlet("g22d", here),
                "G12": Memlet("g23d", here),
                "G22": Memlet("g33d", here),
            },
            outs={
                "ur": Memlet("urtmp", here),
                "us": Memlet("ustmp", here),
                "ut": Memlet("uttmp", here),
            },
            body=(
                "ur = H * (G00 * r + G01 * s + G02 * t)\n"
                "us = H * (G01 * r + G11 * s + G12 * t)\n"
                "ut = H * (G02 * r + G12 * s + G22 * t)"
            ),
        )
    )
    return m


def _second_map(g: DataflowGraph, lx, nel) -> MapNode:
    m = _grid_map(g, ("e2", "k2", "j2", "i2"), lx, nel)
    here = _pt("e2", "k2", "j2", "i2")

    m.body.append(
        Tasklet(
            node_id=g.new_id(),
            ins={},
            outs={"w": Memlet("wd", here)},
            body="w = 0.0",
        )
    )

    loop = ForNode(
        node_id=g.new_id(),
        param="l2",
        range=Range(Affine.of(0), Affine.of(lx)),
    )
    loop.body.append(
        Tasklet(
            node_id=g.new_id(),
            ins={
                "w_in": Memlet("wd", here),
                "dxt": Memlet("dxtd", _pt("l2", "i2")),
                "dyt": Memlet("dytd", _pt("l2", "j2")),
                "dzt": Memlet("dztd", _pt("l2", "k2")),
                "ur": Memlet("urtmp", _pt("e2", "k2", "j2", "l2")),
                "us": Memlet("ustmp", _pt("e2", "k2", "l2", "i2")),
                "ut": Memlet("uttmp", _pt("e2", "l2", "j2", "i2")),
            },
            outs={"w_out": Memlet("wd", here)},
            body="w_out = w_in + dxt * ur + dyt * us + dzt * ut",
        )
    )
    m.body.append(loop)
    return m

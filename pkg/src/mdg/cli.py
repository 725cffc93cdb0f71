"""Command-line front door.

Subcommands: basis, build, transform, validate, run, codegen, bench, plot.
Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import (
    axprogram,
    bench,
    codegen,
    interp,
    ir,
    plotsvg,
    sem,
    serde,
    tensorfile,
    transforms,
)
from .errors import MdgError


def _load_graph(path: str) -> ir.DataflowGraph:
    return serde.deserialize(Path(path).read_bytes())


def _save_graph(g: ir.DataflowGraph, path: str) -> None:
    data = serde.serialize(g, compress=path.endswith(".gz"))
    Path(path).write_bytes(data)


def _graph_lx(g: ir.DataflowGraph) -> int:
    dim = g.container("dxd").shape[0]
    if not dim.is_const:
        raise MdgError(
            "graph still has a symbolic polynomial order; "
            "specialize it (transform --ax-opt LX) before running"
        )
    return dim.const


def _seeded_inputs(lx: int, nel: int, seed: int) -> dict[str, np.ndarray]:
    basis = sem.gll_basis(lx)
    geom = sem.random_spd_geometry(nel, lx, seed)
    rng = np.random.default_rng(seed)
    u = sem.ElementField(nel, lx, rng.standard_normal((nel, lx, lx, lx)))
    return axprogram.ax_arrays(u, basis, geom)


def _oracle_wd(arrays: dict[str, np.ndarray], lx: int, nel: int) -> np.ndarray:
    basis = sem.gll_basis(lx)
    geom = sem.GeomFactors(
        g11=arrays["g11d"],
        g22=arrays["g22d"],
        g33=arrays["g33d"],
        g12=arrays["g12d"],
        g13=arrays["g13d"],
        g23=arrays["g23d"],
        h1=arrays["h1d"],
    )
    u = sem.ElementField(nel, lx, arrays["ud"])
    return sem.ax_reference(u, basis, geom).data


# ------------------------------------------------------------- subcommands


def _cmd_basis(args) -> int:
    b = sem.gll_basis(args.lx)
    print(f"lx {b.lx} order {b.order}")
    print("points " + " ".join(repr(float(x)) for x in b.points))
    print("weights " + " ".join(repr(float(x)) for x in b.weights))
    return 0


def _cmd_build(args) -> int:
    nel = args.nel if args.nel is not None else "nel"
    g = axprogram.build_ax_program(args.lx, nel)
    _save_graph(g, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_transform(args) -> int:
    g = _load_graph(args.input)
    if args.ax_opt is not None:
        g = transforms.ax_optimization_recipe(g, args.ax_opt)
    else:
        recipe = transforms.parse_recipe(Path(args.recipe).read_text(encoding="utf-8"))
        g = transforms.apply_recipe(g, recipe)
    _save_graph(g, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_validate(args) -> int:
    g = _load_graph(args.input)
    diags = ir.validate(g)
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        return 1
    print(f"{args.input}: ok ({g.name}, {len(g.containers)} containers)")
    return 0


def _cmd_run(args) -> int:
    g = _load_graph(args.input)
    lx = _graph_lx(g)
    if "nel" in g.symbols:
        nel = args.nel if args.nel is not None else 8
        symbols = {"nel": nel}
    else:
        nel = g.container("ud").shape[0].const
        if args.nel is not None and args.nel != nel:
            raise MdgError(f"graph is specialized to nel={nel}, got --nel {args.nel}")
        symbols = {}
    arrays = _seeded_inputs(lx, nel, args.seed)

    bindings = interp.Bindings(arrays=dict(arrays), symbols=symbols)
    t0 = time.perf_counter()
    out = interp.execute(g, bindings, engine=args.engine)
    dt = time.perf_counter() - t0
    wd = out.arrays["wd"]
    print(
        f"ran {g.name}: lx={lx} nel={nel} seed={args.seed} "
        f"({dt:.6f} s, checksum {float(wd.sum())!r})"
    )

    status = 0
    if args.compare_oracle:
        want = _oracle_wd(arrays, lx, nel)
        diff = float(np.max(np.abs(wd - want))) if wd.size else 0.0
        print(f"max abs diff {diff!r}")
        if diff != 0.0:
            status = 1
    if args.dump:
        out_dir = Path(args.dump)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in axprogram.ABI_CONTAINER_ORDER:
            tensorfile.write_tensor(out_dir / f"{name}.t", arrays[name])
        tensorfile.write_sizes(out_dir / "sizes.txt", nel, lx)
        tensorfile.write_tensor(out_dir / "expected_wd.t", wd)
        print(f"dumped {len(axprogram.ABI_CONTAINER_ORDER)} tensors to {out_dir}")
    return status


def _cmd_codegen(args) -> int:
    g = _load_graph(args.input)
    cfg = codegen.EmitConfig(
        entry_symbol=args.entry,
        parallel_annotations=not args.no_parallel,
        strict_fp=not args.fast_fp,
    )
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "kernel.c").write_text(codegen.generate_source(g, cfg), encoding="utf-8")
    (out_dir / "kernel.h").write_text(
        codegen.generate_interface_header(g, cfg), encoding="utf-8"
    )
    print(f"wrote {out_dir / 'kernel.c'} and {out_dir / 'kernel.h'}")
    return 0


def _parse_lx_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("expected LO:HI")
    try:
        return int(lo), int(hi)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _cmd_bench(args) -> int:
    records = bench.run_bench(
        lx_range=args.lx_range,
        mesh_list=args.mesh_list,
        reps=args.reps,
        variants=args.variants or bench.DEFAULT_VARIANTS,
        max_nel=args.max_nel,
        log=lambda msg: print(msg, file=sys.stderr),
    )
    bench.write_csv(records, args.output)
    print(f"wrote {len(records)} records to {args.output}")
    return 0


def _cmd_plot(args) -> int:
    svg = plotsvg.plot_svg(Path(args.input).read_text(encoding="ascii"))
    Path(args.output).write_text(svg, encoding="utf-8")
    print(f"wrote {args.output}")
    return 0


# ------------------------------------------------------------- dispatch


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mdg",
        description="Build, transform, execute, and benchmark operator dataflow graphs.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("basis", help="print the GLL basis for an order")
    sp.add_argument("--lx", type=int, required=True)
    sp.set_defaults(fn=_cmd_basis)

    sp = sub.add_parser("build", help="build the operator graph")
    sp.add_argument("--lx", type=int, required=True)
    sp.add_argument("--nel", type=int, default=None, help="bake the element count")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(fn=_cmd_build)

    sp = sub.add_parser("transform", help="apply a recipe to a graph file")
    sp.add_argument("-i", "--input", required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--recipe", help="recipe text file")
    group.add_argument("--ax-opt", type=int, help="built-in optimization recipe for order LX")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(fn=_cmd_transform)

    sp = sub.add_parser("validate", help="validate a graph file")
    sp.add_argument("-i", "--input", required=True)
    sp.set_defaults(fn=_cmd_validate)

    sp = sub.add_parser("run", help="execute a graph on seeded random inputs")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--nel", type=int, default=None)
    sp.add_argument("--engine", choices=("auto", "vector", "scalar"), default="auto")
    sp.add_argument("--compare-oracle", action="store_true")
    sp.add_argument("--dump", metavar="DIR", help="write input/output tensor files")
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("codegen", help="emit C source and header")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("-o", "--output", required=True, metavar="DIR")
    sp.add_argument("--entry", default="__dace_ax_helm")
    sp.add_argument("--no-parallel", action="store_true")
    fp = sp.add_mutually_exclusive_group()
    fp.add_argument("--strict-fp", action="store_true", help="bit-comparable floats (default)")
    fp.add_argument("--fast-fp", action="store_true", help="allow contraction")
    sp.set_defaults(fn=_cmd_codegen)

    sp = sub.add_parser("bench", help="run the benchmark sweep")
    sp.add_argument("--lx-range", type=_parse_lx_range, default=(3, 8), metavar="LO:HI")
    sp.add_argument("--mesh-list", type=_parse_int_list, default=None, metavar="CSV")
    sp.add_argument("--max-nel", type=int, default=bench.DEFAULT_MAX_NEL)
    sp.add_argument("--reps", type=int, default=9)
    sp.add_argument("--variants", type=lambda s: s.split(","), default=None)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(fn=_cmd_bench)

    sp = sub.add_parser("plot", help="render a benchmark CSV as SVG")
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(fn=_cmd_plot)

    return p


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MdgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

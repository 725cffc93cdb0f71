"""Benchmark sweep over operator variants.

Reproduces the shape of the reference experiment: polynomial orders 3..8
against a geometric ladder of cubical meshes, reporting median wall time
and derived Gflops/s per variant.  All variants computing a given problem
must agree on a checksum before any timing is reported.
"""

from __future__ import annotations

import statistics
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import axprogram, codegen, interp, kernelrt, sem, transforms
from .errors import ContractError, ParseError

FULL_MESH_SIZES = (128, 256, 512, 1024, 2048, 4096, 8192, 16384, 32768)
DEFAULT_VARIANTS = ("oracle", "interp-naive", "gen-naive", "gen-opt")
CSV_HEADER = "lx,nel,unknowns,variant,seconds_median,gflops,checksum"
CHECKSUM_RTOL = 1e-10
DEFAULT_MAX_NEL = 4096


@dataclass(frozen=True)
class BenchRecord:
    lx: int
    nel: int
    unknowns: int
    variant: str
    seconds_median: float
    gflops: float
    checksum: float


def _problem(lx: int, nel: int) -> tuple[sem.GllBasis, dict[str, np.ndarray]]:
    seed = 7919 * lx + nel
    basis = sem.gll_basis(lx)
    geom = sem.random_spd_geometry(nel, lx, seed)
    rng = np.random.default_rng(seed)
    u = sem.ElementField(nel, lx, rng.standard_normal((nel, lx, lx, lx)))
    return basis, axprogram.ax_arrays(u, basis, geom)


def _gen_kernels(
    lx: int, wanted: Sequence[str], strict_fp: bool
) -> dict[str, kernelrt.KernelFn]:
    kernels: dict[str, kernelrt.KernelFn] = {}
    for variant in wanted:
        if variant == "gen-naive":
            g = transforms.apply_device_transformations(
                axprogram.build_ax_program(lx, "nel")
            )
        else:
            g = transforms.ax_optimization_recipe(
                axprogram.build_ax_program(lx, "nel"), lx
            )
        src = codegen.generate_source(g, codegen.EmitConfig(strict_fp=strict_fp))
        so = kernelrt.compile_shared(src, strict_fp=strict_fp)
        kernels[variant] = kernelrt.load_kernel(so)
    return kernels


def run_bench(
    lx_range: tuple[int, int] = (3, 8),
    mesh_list: Iterable[int] | None = None,
    reps: int = 9,
    variants: Sequence[str] = DEFAULT_VARIANTS,
    max_nel: int = DEFAULT_MAX_NEL,
    strict_fp: bool = True,
    log: Callable[[str], None] | None = None,
) -> list[BenchRecord]:
    """Time every (lx, nel, variant) cell and return one record per cell.

    The warm-up run doubles as the checksum run; variants disagreeing with
    the first variant's checksum beyond 1e-10 relative abort the sweep.
    Generated-code variants are skipped with a warning when no compiler is
    available.
    """
    unknown = set(variants) - set(DEFAULT_VARIANTS)
    if unknown:
        raise ValueError(f"unknown variants: {sorted(unknown)}")
    wanted = [v for v in DEFAULT_VARIANTS if v in variants]
    gen_wanted = [v for v in wanted if v.startswith("gen-")]
    if gen_wanted and kernelrt.find_compiler() is None:
        warnings.warn("no C compiler configured; skipping generated-code variants")
        wanted = [v for v in wanted if not v.startswith("gen-")]
        gen_wanted = []
    if not wanted:
        return []

    meshes = [n for n in (tuple(mesh_list) if mesh_list else FULL_MESH_SIZES) if n <= max_nel]
    records: list[BenchRecord] = []
    lo, hi = lx_range
    for lx in range(lo, hi + 1):
        kernels = _gen_kernels(lx, gen_wanted, strict_fp)
        naive_graph = axprogram.build_ax_program(lx, "nel")
        for nel in meshes:
            basis, arrays = _problem(lx, nel)
            runners: dict[str, Callable[[], np.ndarray]] = {}
            for variant in wanted:
                if variant == "oracle":
                    u = sem.ElementField(nel, lx, arrays["ud"].copy())
                    geom = sem.GeomFactors(
                        g11=arrays["g11d"],
                        g22=arrays["g22d"],
                        g33=arrays["g33d"],
                        g12=arrays["g12d"],
                        g13=arrays["g13d"],
                        g23=arrays["g23d"],
                        h1=arrays["h1d"],
                    )
                    runners[variant] = lambda u=u, geom=geom: sem.ax_reference(
                        u, basis, geom
                    ).data
                elif variant == "interp-naive":
                    def run_interp(arrays=arrays, nel=nel):
                        b = interp.Bindings(
                            arrays=dict(arrays), symbols={"nel": nel}
                        )
                        out = interp.execute(
                            naive_graph, b, engine="vector", check_reads=False
                        )
                        return out.arrays["wd"]

                    runners[variant] = run_interp
                else:
                    def run_gen(fn=kernels[variant], arrays=arrays, nel=nel, lx=lx):
                        fn(arrays, nel, lx)
                        return arrays["wd"]

                    runners[variant] = run_gen

            baseline: float | None = None
            for variant in wanted:
                run = runners[variant]
                wd = run()
                checksum = float(wd.sum())
                if baseline is None:
                    baseline = checksum
                elif abs(checksum - baseline) > CHECKSUM_RTOL * max(
                    abs(checksum), abs(baseline)
                ):
                    raise ContractError(
                        f"checksum mismatch at lx={lx} nel={nel}: "
                        f"{variant} got {checksum!r}, expected {baseline!r}"
                    )
                times = []
                for _ in range(reps):
                    t0 = time.perf_counter()
                    run()
                    times.append(time.perf_counter() - t0)
                sec = statistics.median(times)
                rec = BenchRecord(
                    lx=lx,
                    nel=nel,
                    unknowns=nel * (lx - 1) ** 3,
                    variant=variant,
                    seconds_median=sec,
                    gflops=sem.flops_model(lx, nel) / sec / 1e9,
                    checksum=checksum,
                )
                records.append(rec)
                if log:
                    log(
                        f"lx={lx} nel={nel} {variant}: "
                        f"{sec:.6f} s, {rec.gflops:.3f} Gflops/s"
                    )
    return records


# ------------------------------------------------------------------- CSV


def render_csv(records: Sequence[BenchRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.lx},{r.nel},{r.unknowns},{r.variant},"
            f"{r.seconds_median!r},{r.gflops!r},{r.checksum!r}"
        )
    return "\n".join(lines) + "\n"


def write_csv(records: Sequence[BenchRecord], path: str | Path) -> None:
    Path(path).write_text(render_csv(records), encoding="ascii")


def read_csv(text: str) -> list[BenchRecord]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ParseError(f"line 1: expected header {CSV_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise ParseError(f"line {lineno}: expected 7 fields, got {len(fields)}")
        try:
            records.append(
                BenchRecord(
                    lx=int(fields[0]),
                    nel=int(fields[1]),
                    unknowns=int(fields[2]),
                    variant=fields[3],
                    seconds_median=float(fields[4]),
                    gflops=float(fields[5]),
                    checksum=float(fields[6]),
                )
            )
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    return records

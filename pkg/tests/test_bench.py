"""Benchmark sweep: record invariants, checksum gate, CSV round trip."""

import numpy as np
import pytest

from mdg import ContractError, ParseError, bench
from mdg.bench import (
    CSV_HEADER,
    DEFAULT_VARIANTS,
    BenchRecord,
    read_csv,
    render_csv,
    run_bench,
    write_csv,
)
from mdg.kernelrt import find_compiler
from mdg.sem import flops_model

needs_cc = pytest.mark.skipif(find_compiler() is None, reason="no C compiler")


def tiny_sweep(**kw):
    args = dict(lx_range=(3, 3), mesh_list=[1, 2], reps=2)
    args.update(kw)
    return run_bench(**args)


@needs_cc
class TestSweep:
    def test_full_grid_of_records(self):
        records = tiny_sweep()
        assert len(records) == 2 * len(DEFAULT_VARIANTS)
        cells = {(r.lx, r.nel, r.variant) for r in records}
        assert cells == {
            (3, n, v) for n in (1, 2) for v in DEFAULT_VARIANTS
        }

    def test_record_invariants(self):
        for r in tiny_sweep():
            assert r.unknowns == r.nel * (r.lx - 1) ** 3
            assert r.seconds_median > 0.0
            assert r.gflops == flops_model(r.lx, r.nel) / r.seconds_median / 1e9

    def test_checksums_agree_across_variants(self):
        records = tiny_sweep()
        by_cell = {}
        for r in records:
            by_cell.setdefault((r.lx, r.nel), []).append(r.checksum)
        for sums in by_cell.values():
            assert len(sums) == len(DEFAULT_VARIANTS)
            assert all(s == sums[0] for s in sums)

    def test_variant_subset(self):
        records = tiny_sweep(variants=("oracle", "interp-naive"))
        assert {r.variant for r in records} == {"oracle", "interp-naive"}

    def test_max_nel_filters_meshes(self):
        records = tiny_sweep(mesh_list=[1, 2, 9000], max_nel=4096)
        assert {r.nel for r in records} == {1, 2}

    def test_checksum_gate_aborts(self, monkeypatch):
        real = bench.sem.ax_reference

        def skewed(u, basis, geom):
            out = real(u, basis, geom)
            data = out.data.copy()
            data[0, 0, 0, 0] += 1.0
            return type(out)(out.nel, out.lx, data)

        monkeypatch.setattr(bench.sem, "ax_reference", skewed)
        with pytest.raises(ContractError, match="checksum mismatch"):
            tiny_sweep()

    def test_log_callback(self):
        lines = []
        tiny_sweep(mesh_list=[1], reps=1, log=lines.append)
        assert len(lines) == len(DEFAULT_VARIANTS)
        assert all("lx=3 nel=1" in ln for ln in lines)


class TestNoCompiler:
    def test_gen_variants_skipped_with_warning(self, monkeypatch):
        monkeypatch.setattr(bench.kernelrt, "find_compiler", lambda: None)
        with pytest.warns(UserWarning, match="no C compiler"):
            records = tiny_sweep(reps=1, mesh_list=[1])
        assert {r.variant for r in records} == {"oracle", "interp-naive"}

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError, match="gen-fast"):
            run_bench(variants=("oracle", "gen-fast"))


def sample_records():
    return [
        BenchRecord(3, 128, 1024, "oracle", 0.0012345, 1.75, 42.5),
        BenchRecord(3, 128, 1024, "gen-opt", 1 / 3, 0.1 + 0.2, -42.5),
    ]


class TestCsv:
    def test_header_and_shape(self):
        text = render_csv(sample_records())
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3
        assert text.endswith("\n")

    def test_round_trip_is_exact(self, tmp_path):
        records = sample_records()
        p = tmp_path / "bench.csv"
        write_csv(records, p)
        assert read_csv(p.read_text()) == records

    def test_floats_survive_repr(self):
        back = read_csv(render_csv(sample_records()))
        assert back[1].seconds_median == 1 / 3
        assert back[1].gflops == 0.1 + 0.2

    def test_bad_header(self):
        with pytest.raises(ParseError, match="line 1"):
            read_csv("nope\n3,1,8,oracle,1.0,1.0,0.0\n")

    def test_bad_field_count(self):
        with pytest.raises(ParseError, match="line 2: expected 7 fields, got 3"):
            read_csv(CSV_HEADER + "\n3,1,8\n")

    def test_bad_number(self):
        with pytest.raises(ParseError, match="line 3"):
            read_csv(
                CSV_HEADER
                + "\n3,1,8,oracle,0.5,1.0,0.0\n3,1,8,oracle,fast,1.0,0.0\n"
            )

    def test_blank_lines_skipped(self):
        text = render_csv(sample_records()) + "\n\n"
        assert len(read_csv(text)) == 2

    def test_empty_input(self):
        with pytest.raises(ParseError):
            read_csv("")

import logging

import pytest

from hybridmin.bench import (
    BenchEntry,
    BenchReport,
    ReferenceMinimaTable,
    ReferenceTableError,
    load_reference_minima,
    parse_reference_minima,
    run_benchmark,
)
from hybridmin.global_opt import BasinHopOptions, basin_hopping
from hybridmin.potential import LJCluster
from hybridmin.seeding import icosahedral_seed


def test_parse_examples():
    t = parse_reference_minima("4,-6.0\n")
    assert len(t) == 1 and t[4] == -6.0
    t = parse_reference_minima("# comment\n13,-44.326801  # icosahedron\n\n")
    assert t[13] == -44.326801
    with pytest.raises(ReferenceTableError, match="duplicate"):
        parse_reference_minima("4,-6.0\n4,-6.0\n")


@pytest.mark.parametrize("text", ["4,-6.0\n5,-5.0\n", "1,-0.5\n", "4;-6.0\n", "4,abc\n"])
def test_parse_rejects(text):
    with pytest.raises(ReferenceTableError):
        parse_reference_minima(text, source="t.csv")


def test_non_monotone_reports_line():
    with pytest.raises(ReferenceTableError, match="strictly decrease"):
        ReferenceMinimaTable({5: -9.0, 6: -8.0})


def test_bundled_table():
    t = load_reference_minima()
    assert sorted(t.entries) == list(range(2, 151))
    assert t[2] == -1.0 and t[4] == -6.0
    assert t[13] == pytest.approx(-44.326801, abs=1e-6)
    assert t[38] == pytest.approx(-173.928427, abs=1e-6)


def test_load_from_path(tmp_path):
    p = tmp_path / "ref.csv"
    p.write_text("2,-1\n3,-3\n")
    assert load_reference_minima(p).entries == {2: -1.0, 3: -3.0}


@pytest.mark.parametrize("n", range(2, 16))
def test_bundled_entries_verified_small(n):
    # a short basin-hopping run from the icosahedral seed reaches each entry
    ref = load_reference_minima()[n]
    tr = basin_hopping(LJCluster(), icosahedral_seed(n), BasinHopOptions(iterations=300, rng_seed=1))
    assert tr.best_energy == pytest.approx(ref, rel=1e-6)


def test_empty_range():
    rep = run_benchmark([], 10)
    assert rep.entries == [] and rep.skipped == []
    assert rep.to_text().splitlines()[-1] == "hit_rate 0/0 tol 0.0001"


def test_missing_reference_skipped(caplog):
    table = ReferenceMinimaTable({4: -6.0})
    with caplog.at_level(logging.WARNING):
        rep = run_benchmark([4, 5], 5, table)
    assert [e.n for e in rep.entries] == [4]
    assert rep.skipped == [5]
    assert "no reference energy for N=5" in caplog.text
    assert "# skipped N=5" in rep.to_text()


def test_report_fields_and_text():
    rep = run_benchmark([5, 4], 20, seeds=(0, 1))
    assert [(e.n, e.rng_seed) for e in rep.entries] == [(5, 0), (5, 1), (4, 0), (4, 1)]
    for e in rep.entries:
        assert e.gap >= -1e-6
        assert e.iterations == 20
        assert e.first_hit == 0  # the icosahedral seed already relaxes to the minimum
    assert rep.hit_rate == 1.0
    lines = rep.to_text().splitlines()
    assert lines[0] == "N seed found reference rel_gap hit first_hit"
    assert lines[-1] == "hit_rate 4/4 tol 0.0001"
    assert rep.to_text(timing=True).splitlines()[0].endswith("wall_s")


def test_better_than_reference_warns(caplog):
    table = ReferenceMinimaTable({5: -9.0})
    with caplog.at_level(logging.WARNING):
        rep = run_benchmark([5], 5, table)
    assert rep.entries[0].gap < 0
    assert "table entry looks wrong" in caplog.text


def test_hit_accounting():
    rep = BenchReport([BenchEntry(4, 0, -6.0, -6.0, 0.1, 10, 0),
                       BenchEntry(5, 0, -8.0, -9.103852, 0.1, 10, None)])
    assert rep.hits() == 1
    assert rep.hit_rate == 0.5


def test_parallel_workers_same_report():
    serial = run_benchmark([6, 7], 15, seeds=(0, 1), workers=1)
    parallel = run_benchmark([6, 7], 15, seeds=(0, 1), workers=2)
    assert serial.to_text() == parallel.to_text()


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="basin-hopping at T=0.8 stays in the icosahedral funnel of LJ38 "
                                        "for 2000 steps; see the decisions ledger")
def test_lj38_double_funnel_hit_rate():
    rep = run_benchmark([38], 2000, seeds=range(20))
    assert rep.hit_rate >= 0.5

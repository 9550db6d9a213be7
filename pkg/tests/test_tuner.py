"""Format profiling and plan selection."""

import numpy as np
import pytest

from dynsparse import (
    FORMATS,
    SERIAL,
    EmptySearchSpace,
    FormatId,
    GridSpec,
    TimingTable,
    generate_problem,
    profile_formats,
    read_timing_table,
    select_plan,
    split_local_remote,
    write_timing_table,
)

COO, CSR, DIA = FormatId.COO, FormatId.CSR, FormatId.DIA


def table_from(times: dict, reps: int = 5, skipped=(), npartitions=None) -> TimingTable:
    nparts = npartitions or (1 + max(k for k, _, _ in list(times) + list(skipped)))
    return TimingTable(entries=dict(times), reps=reps, skipped=set(skipped),
                       npartitions=nparts)


def full_table(nparts: int, fill: float = 1.0) -> dict:
    return {(k, lf, rf): fill for k in range(nparts) for lf in FORMATS for rf in FORMATS}


# ---------------------------------------------------------------------------
# select_plan on synthetic tables
# ---------------------------------------------------------------------------

def test_csr_dominant_everywhere():
    times = full_table(2, fill=5.0)
    for k in range(2):
        times[(k, CSR, CSR)] = 1.0
    table = table_from(times)
    for mode in ("fixed", "morpheus", "ghost", "multi"):
        plan = select_plan(table, mode)
        assert plan.assignments == [(CSR, CSR)] * 2, mode


def test_multi_picks_per_partition_argmin():
    times = full_table(2, fill=9.0)
    times[(0, DIA, COO)] = 0.5
    times[(1, CSR, CSR)] = 0.25
    table = table_from(times)
    plan = select_plan(table, "multi")
    assert plan.assignments == [(DIA, COO), (CSR, CSR)]
    morpheus = select_plan(table, "morpheus")
    assert len({lf for lf, _ in morpheus.assignments}) == 1
    assert all(rf is CSR for _, rf in morpheus.assignments)


def test_morpheus_minimizes_worst_partition():
    # DIA is great on partition 0 but terrible on partition 1; COO is even
    times = full_table(2, fill=5.0)
    times[(0, DIA, CSR)] = 0.1
    times[(1, DIA, CSR)] = 20.0
    times[(0, COO, CSR)] = 2.0
    times[(1, COO, CSR)] = 2.0
    table = table_from(times)
    plan = select_plan(table, "morpheus")
    assert plan.assignments == [(COO, CSR)] * 2


def test_ghost_mode_varies_remote_only():
    times = full_table(1, fill=3.0)
    times[(0, CSR, DIA)] = 0.5
    plan = select_plan(table_from(times), "ghost")
    assert plan.assignments == [(CSR, DIA)]


def test_ties_break_toward_lower_format_id():
    table = table_from(full_table(1, fill=1.0))
    assert select_plan(table, "multi").assignments == [(COO, COO)]
    assert select_plan(table, "morpheus").assignments == [(COO, CSR)]
    assert select_plan(table, "ghost").assignments == [(CSR, COO)]


def test_skipped_combinations_never_selected():
    times = full_table(1, fill=2.0)
    times.pop((0, DIA, DIA))  # would win if it were selectable
    table = table_from(times, skipped=[(0, DIA, DIA)])
    plan = select_plan(table, "multi")
    assert plan.assignments[0] != (DIA, DIA)


def test_morpheus_candidate_needs_every_partition():
    times = full_table(2, fill=2.0)
    times[(0, DIA, CSR)] = 0.01
    del times[(1, DIA, CSR)]  # DIA unmeasured on partition 1
    table = table_from(times, skipped=[(1, DIA, CSR)], npartitions=2)
    plan = select_plan(table, "morpheus")
    assert all(lf is not DIA for lf, _ in plan.assignments)


def test_empty_search_space():
    skipped = [(0, lf, rf) for lf in FORMATS for rf in FORMATS]
    table = table_from({}, skipped=skipped, npartitions=1)
    for mode in ("fixed", "morpheus", "ghost", "multi"):
        with pytest.raises(EmptySearchSpace):
            select_plan(table, mode)


def test_select_plan_is_pure():
    times = full_table(3, fill=1.0)
    times[(1, DIA, COO)] = 0.5
    table = table_from(times)
    first = select_plan(table, "multi")
    second = select_plan(table, "multi")
    assert first.assignments == second.assignments


def test_multi_dominates_single_format_modes():
    rng = np.random.default_rng(31)
    for _ in range(25):
        nparts = int(rng.integers(1, 5))
        times = {
            (k, lf, rf): float(rng.uniform(0.1, 10.0))
            for k in range(nparts) for lf in FORMATS for rf in FORMATS
        }
        table = table_from(times, npartitions=nparts)
        multi = select_plan(table, "multi")
        for mode in ("morpheus", "ghost", "fixed"):
            other = select_plan(table, mode)
            for k in range(nparts):
                t_multi = times[(k, *multi.assignments[k])]
                t_other = times[(k, *other.assignments[k])]
                assert t_multi <= t_other


def test_unknown_mode():
    with pytest.raises(ValueError):
        select_plan(table_from(full_table(1)), "best")


# ---------------------------------------------------------------------------
# profile_formats
# ---------------------------------------------------------------------------

def test_profile_single_partition_collapses_remote_axis():
    problem = generate_problem(GridSpec(4, 4, 4))
    splits = [split_local_remote(problem, 0)]
    table = profile_formats(SERIAL, problem, splits, reps=3)
    assert table.reps == 3
    assert len(table.entries) == 9
    assert not table.skipped
    for lf in FORMATS:
        cells = {table.entries[(0, lf, rf)] for rf in FORMATS}
        assert len(cells) == 1  # exact ties across the remote axis
        assert cells.pop() > 0
    plan = select_plan(table, "multi")
    assert plan.assignments[0][1] is COO  # remote tie broken to lowest id


def test_profile_records_skips_and_restores_csr():
    problem = generate_problem(GridSpec(8, 8, 8, 2, 1, 1))
    splits = [split_local_remote(problem, k) for k in range(2)]
    table = profile_formats(SERIAL, problem, splits, reps=2)
    # the irregular remote part overflows the DIA fill limit on this problem
    assert {(k, lf, DIA) for k in range(2) for lf in FORMATS} <= table.skipped
    for cell in table.skipped:
        assert cell not in table.entries
    for k in range(2):
        for lf in FORMATS:
            for rf in (COO, CSR):
                assert table.entries[(k, lf, rf)] > 0
    for split in splits:
        assert split.local.active is CSR
        assert split.remote.active is CSR
    plan = select_plan(table, "multi")
    for cell, assignment in zip(range(2), plan.assignments):
        assert (cell, *assignment) not in table.skipped


def test_profile_rejects_bad_reps():
    problem = generate_problem(GridSpec(2, 2, 2))
    splits = [split_local_remote(problem, 0)]
    with pytest.raises(ValueError):
        profile_formats(SERIAL, problem, splits, reps=0)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def test_timing_table_csv_roundtrip(tmp_path):
    times = full_table(2, fill=1.0)
    times[(0, DIA, COO)] = 0.125
    del times[(1, DIA, DIA)]
    table = table_from(times, reps=7, skipped=[(1, DIA, DIA)], npartitions=2)
    path = tmp_path / "table.csv"
    write_timing_table(table, path)
    header = path.read_text().splitlines()[0]
    assert header == "partition,local_format,remote_format,median_seconds,reps"
    back = read_timing_table(path)
    assert back.reps == 7
    assert back.npartitions == 2
    assert back.skipped == {(1, DIA, DIA)}
    assert back.entries.keys() == table.entries.keys()
    for cell, seconds in table.entries.items():
        assert back.entries[cell] == pytest.approx(seconds, rel=1e-8)

"""Metrics containers, rank statistics, and the CSV table formats."""

import csv

import pytest

from vndnsim.stats import (COMPARISON_COLUMNS, EXACT_ENUMERATION_LIMIT,
                           NODE_COUNTER_FIELDS, RUN_CSV_COLUMNS,
                           SUMMARY_COLUMNS, AppRow, NodeRow, RunMetrics,
                           compare_samples, mann_whitney_u, read_runs_index,
                           summarize, vargha_delaney_a12,
                           write_comparisons_csv, write_run_csv,
                           write_runs_index, write_summary_csv)


def metrics(deployment="standard", scenario=1, seed=1, apps=(), nodes=()):
    return RunMetrics(deployment, scenario, seed,
                      nodes=list(nodes), apps=list(apps))


# ---------------------------------------------------------------------------
# Mann-Whitney U

def test_u_counts_winning_pairs():
    u, _ = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0.0
    u, _ = mann_whitney_u([4, 5, 6], [1, 2, 3])
    assert u == 9.0


def test_u_ties_count_half():
    u, _ = mann_whitney_u([1, 2, 2], [2, 3, 4])
    assert u == 1.0  # 2>nothing twice, two 2v2 ties at half


def test_identical_samples_give_p_one():
    for method in ("exact", "normal"):
        _, p = mann_whitney_u([5, 5, 5], [5, 5, 5], method=method)
        assert p == 1.0


def test_exact_p_fully_separated_triples():
    # 2 of the C(6,3)=20 relabelings are as extreme as the observed split
    _, p = mann_whitney_u([1, 2, 3], [4, 5, 6], method="exact")
    assert p == pytest.approx(0.1, abs=1e-12)


def test_exact_p_smallest_samples():
    # n=2: the best achievable two-sided p is 2/6; the normal
    # approximation would report ~0.245 here, hence the exact path
    _, p = mann_whitney_u([1, 2], [3, 4])
    assert p == pytest.approx(1 / 3, abs=1e-12)


def test_exact_p_with_ties():
    _, p = mann_whitney_u([1, 2, 2], [2, 3, 4], method="exact")
    assert p == pytest.approx(0.3, abs=1e-12)


def test_auto_switches_to_exact_below_limit():
    a, b = [1, 2, 3], [4, 5, 6]
    assert len(a) + len(b) <= EXACT_ENUMERATION_LIMIT
    assert mann_whitney_u(a, b) == mann_whitney_u(a, b, method="exact")


def test_normal_approximation_near_exact_at_the_limit():
    a = [3, 1, 4, 1, 5, 9, 2, 6]
    b = [2, 7, 1, 8, 2, 8, 1, 8]
    _, p_exact = mann_whitney_u(a, b, method="exact")
    _, p_normal = mann_whitney_u(a, b, method="normal")
    assert p_exact == pytest.approx(0.7793317793317793, abs=1e-12)
    assert abs(p_exact - p_normal) < 0.05


def test_disjoint_samples_of_study_size_are_significant():
    a = list(range(31))
    b = list(range(100, 131))
    u, p = mann_whitney_u(a, b)
    assert u == 0.0
    assert p < 1e-9


def test_p_symmetric_in_sample_order():
    a = [3, 1, 4, 1, 5, 9, 2, 6]
    b = [2, 7, 1, 8, 2, 8, 1, 8]
    assert mann_whitney_u(a, b)[1] == pytest.approx(mann_whitney_u(b, a)[1])


def test_rejects_empty_samples_and_bad_method():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1])
    with pytest.raises(ValueError):
        mann_whitney_u([1], [1], method="bootstrap")


# ---------------------------------------------------------------------------
# Vargha-Delaney A12

def test_a12_identical_is_half():
    assert vargha_delaney_a12([1, 2, 3], [1, 2, 3]) == pytest.approx(0.5)


def test_a12_complete_separation():
    assert vargha_delaney_a12([4, 5, 6], [1, 2, 3]) == 1.0
    assert vargha_delaney_a12([1, 2, 3], [4, 5, 6]) == 0.0


def test_a12_antisymmetry():
    a = [3, 1, 4, 1, 5]
    b = [9, 2, 6, 5, 3, 5]
    assert vargha_delaney_a12(a, b) + vargha_delaney_a12(b, a) == \
        pytest.approx(1.0)


def test_a12_invariant_under_monotone_transform():
    a = [3, 1, 4, 1, 5, 9, 2, 6]
    b = [2, 7, 1, 8, 2, 8, 1, 8]
    direct = vargha_delaney_a12(a, b)
    assert direct == pytest.approx(0.453125)
    cubed = vargha_delaney_a12([x ** 3 for x in a], [x ** 3 for x in b])
    assert cubed == pytest.approx(direct)


def test_a12_matches_pair_counting():
    a = [3, 1, 4, 1, 5]
    b = [9, 2, 6, 5, 3]
    wins = sum(1 for x in a for y in b if x > y)
    ties = sum(1 for x in a for y in b if x == y)
    assert vargha_delaney_a12(a, b) == \
        pytest.approx((wins + 0.5 * ties) / (len(a) * len(b)))


def test_compare_samples_bundles_everything():
    res = compare_samples("proposal-1", "standard-1",
                          [4, 5, 6], [1, 2, 3], metric="data_received")
    assert (res.instance_a, res.instance_b) == ("proposal-1", "standard-1")
    assert res.metric == "data_received"
    assert (res.n1, res.n2) == (3, 3)
    assert res.u_statistic == 9.0
    assert res.p_value == pytest.approx(0.1)
    assert res.a12 == 1.0


# ---------------------------------------------------------------------------
# per-run metrics

def test_run_metrics_totals_and_ratio():
    run = metrics(apps=[AppRow("v0", "distinct", 10, 4),
                        AppRow("v1", "shared", 10, 6)])
    assert run.instance == "standard-1"
    assert run.interests_sent == 20
    assert run.data_received == 10
    assert run.satisfaction_ratio == pytest.approx(0.5)
    assert run.by_app_kind() == {"distinct": (10, 4), "shared": (10, 6)}


def test_zero_interests_means_zero_ratio():
    assert metrics().satisfaction_ratio == 0.0


def test_node_counter_totals():
    run = metrics(nodes=[NodeRow("ap0", "ap", cs_hits=3, frames_broadcast=7),
                         NodeRow("v0", "vehicle", cs_hits=2)])
    assert run.total("cs_hits") == 5
    assert run.total("frames_broadcast") == 7
    assert run.total("queue_drops") == 0


# ---------------------------------------------------------------------------
# summaries

def two_runs():
    r1 = metrics(seed=1, apps=[AppRow("v0", "distinct", 10, 4)])
    r2 = metrics(seed=2, apps=[AppRow("v0", "distinct", 10, 6)])
    return [r1, r2]


def test_summary_of_single_run_mirrors_it():
    run = metrics(apps=[AppRow("v0", "distinct", 10, 4),
                        AppRow("v1", "shared", 10, 6)])
    (row,) = summarize([run])
    assert row.instance == "standard-1"
    assert row.runs == 1
    assert row.interests_total == 20
    assert row.data_total == 10
    assert row.satisfaction_mean == pytest.approx(0.5)
    assert row.distinct_satisfaction == pytest.approx(0.4)
    assert row.shared_satisfaction == pytest.approx(0.6)


def test_summary_averages_ratios_across_runs():
    (row,) = summarize(two_runs())
    assert row.runs == 2
    assert row.satisfaction_mean == pytest.approx(0.5)
    assert row.satisfaction_min == pytest.approx(0.4)
    assert row.satisfaction_max == pytest.approx(0.6)
    assert row.interests_total == 20
    assert row.data_total == 10


def test_summary_groups_by_instance_sorted():
    runs = [metrics("proposal", 2, 1), metrics("down", 1, 1),
            metrics("proposal", 1, 1), metrics("down", 1, 2)]
    rows = summarize(runs)
    assert [r.instance for r in rows] == ["down-1", "proposal-1", "proposal-2"]
    assert rows[0].runs == 2


def test_kind_missing_from_all_runs_reports_zero():
    (row,) = summarize([metrics(apps=[AppRow("v0", "distinct", 10, 4)])])
    assert row.shared_interests == 0
    assert row.shared_satisfaction == 0.0


# ---------------------------------------------------------------------------
# CSV formats

def test_run_csv_layout(tmp_path):
    run = metrics(apps=[AppRow("v0", "distinct", 10, 4),
                        AppRow("v1", "shared", 10, 6)],
                  nodes=[NodeRow("ap0", "ap", cs_hits=3),
                         NodeRow("v0", "vehicle", interests_sent=10)])
    path = tmp_path / "run.csv"
    write_run_csv(run, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(RUN_CSV_COLUMNS)
    assert rows[1][:3] == ["total", "standard-1", "run"]
    idx = RUN_CSV_COLUMNS.index("cs_hits")
    assert rows[1][idx] == "3"
    assert [r[0] for r in rows[1:]] == ["total", "apps", "apps", "node", "node"]
    assert rows[2][1] == "distinct" and rows[3][1] == "shared"


def test_runs_index_round_trip(tmp_path):
    path = tmp_path / "runs.csv"
    write_runs_index(two_runs(), path)
    rows = read_runs_index(path)
    assert len(rows) == 2
    assert rows[0]["instance"] == "standard-1"
    assert rows[0]["seed"] == 1
    assert rows[1]["data_received"] == 6
    assert rows[1]["satisfaction_ratio"] == pytest.approx(0.6)


def test_summary_csv_columns(tmp_path):
    path = tmp_path / "summary.csv"
    write_summary_csv(summarize(two_runs()), path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(SUMMARY_COLUMNS)
    assert rows[1][0] == "standard-1"
    assert len(rows) == 2


def test_comparisons_csv_columns(tmp_path):
    res = compare_samples("a-1", "b-1", [1, 2, 3], [4, 5, 6])
    path = tmp_path / "comparisons.csv"
    write_comparisons_csv([res], path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(COMPARISON_COLUMNS)
    assert rows[1][:3] == ["a-1", "b-1", "data_received"]
    assert float(rows[1][6]) == pytest.approx(0.1)


def test_counter_fields_cover_node_row():
    row = NodeRow("n", "ap")
    for field_name in NODE_COUNTER_FIELDS:
        assert hasattr(row, field_name)

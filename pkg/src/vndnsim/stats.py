"""Run metrics, summaries, and the two-sample comparison machinery.

The comparison helpers are deliberately dependency-free.  The Mann-Whitney
p-value uses the tie-corrected normal approximation with a continuity
correction, except for small pooled samples where the exact permutation
distribution is enumerated instead (the approximation is not trustworthy
below roughly a dozen observations).  Vargha-Delaney A12 is computed from
rank sums; ties count half.
"""

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations

EXACT_ENUMERATION_LIMIT = 16  # pooled size up to which the exact p is used


# ---------------------------------------------------------------------------
# Per-run metrics

NODE_COUNTER_FIELDS = (
    "interests_sent", "data_received", "nfd_packets_processed",
    "frames_broadcast", "frames_unicast", "airtime_used_s", "handovers",
    "cs_hits", "queue_drops", "link_losses", "unsolicited_data",
    "pit_expired",
)


@dataclass
class NodeRow:
    node_id: str
    kind: str
    interests_sent: int = 0
    data_received: int = 0
    nfd_packets_processed: int = 0
    frames_broadcast: int = 0
    frames_unicast: int = 0
    airtime_used_s: float = 0.0
    handovers: int = 0
    cs_hits: int = 0
    queue_drops: int = 0
    link_losses: int = 0
    unsolicited_data: int = 0
    pit_expired: int = 0


@dataclass
class AppRow:
    vehicle_id: str
    app_kind: str  # distinct | shared
    interests_sent: int = 0
    data_received: int = 0


@dataclass
class RunMetrics:
    deployment: str
    scenario: int
    seed: int
    nodes: list = field(default_factory=list)  # NodeRow
    apps: list = field(default_factory=list)   # AppRow

    @property
    def instance(self):
        return "%s-%d" % (self.deployment, self.scenario)

    @property
    def interests_sent(self):
        return sum(a.interests_sent for a in self.apps)

    @property
    def data_received(self):
        return sum(a.data_received for a in self.apps)

    @property
    def satisfaction_ratio(self):
        sent = self.interests_sent
        if sent == 0:
            return 0.0
        return self.data_received / sent

    def by_app_kind(self):
        """kind -> (interests_sent, data_received)."""
        out = {}
        for app in self.apps:
            sent, got = out.get(app.app_kind, (0, 0))
            out[app.app_kind] = (sent + app.interests_sent,
                                 got + app.data_received)
        return out

    def total(self, counter):
        return sum(getattr(n, counter) for n in self.nodes)


RUN_CSV_COLUMNS = ("scope", "id", "kind") + NODE_COUNTER_FIELDS


def write_run_csv(metrics, path):
    """One file per run: a total row, per-app-kind rows, then node rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_CSV_COLUMNS)
        total = ["total", metrics.instance, "run"]
        total += [metrics.total(c) for c in NODE_COUNTER_FIELDS]
        writer.writerow(total)
        for kind, (sent, got) in sorted(metrics.by_app_kind().items()):
            row = ["apps", kind, kind, sent, got] + [0] * (len(NODE_COUNTER_FIELDS) - 2)
            writer.writerow(row)
        for node in metrics.nodes:
            writer.writerow(["node", node.node_id, node.kind]
                            + [getattr(node, c) for c in NODE_COUNTER_FIELDS])


# ---------------------------------------------------------------------------
# Rank helpers

def _ranks(values):
    """Fractional (midrank) 1-based ranks."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _u_statistic(a, b):
    """U for sample a: number of (a, b) pairs with a > b, ties half."""
    n1 = len(a)
    ranks = _ranks(list(a) + list(b))
    r1 = sum(ranks[:n1])
    return r1 - n1 * (n1 + 1) / 2.0


def mann_whitney_u(sample_a, sample_b, method="auto"):
    """Two-sided Mann-Whitney U test; returns (U, p).

    U counts pairs where a exceeds b (ties half), so U == 0 means every a
    is below every b.  `method` is "auto", "exact" or "normal"; auto uses
    the exact permutation distribution while the pooled size stays small.
    Samples with no variation at all give p = 1.0 by convention.
    """
    a = list(sample_a)
    b = list(sample_b)
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    total = n1 + n2
    u = _u_statistic(a, b)
    if method == "auto":
        method = "exact" if total <= EXACT_ENUMERATION_LIMIT else "normal"
    if method == "exact":
        return u, _exact_p(a, b, u)
    if method != "normal":
        raise ValueError("method must be auto, exact or normal")

    mean = n1 * n2 / 2.0
    tie_term = 0.0
    pooled = sorted(a + b)
    i = 0
    while i < total:
        j = i
        while j + 1 < total and pooled[j + 1] == pooled[i]:
            j += 1
        t = j - i + 1
        tie_term += t ** 3 - t
        i = j + 1
    correction = 1.0 - tie_term / float(total ** 3 - total)
    if correction <= 0.0:
        return u, 1.0  # all observations identical
    sd = math.sqrt(correction * n1 * n2 * (total + 1) / 12.0)
    deviation = max(abs(u - mean) - 0.5, 0.0)  # continuity correction
    z = deviation / sd
    return u, math.erfc(z / math.sqrt(2.0))


def _exact_p(a, b, u_observed):
    """Two-sided permutation p: share of relabelings at least as extreme."""
    n1 = len(a)
    pooled = a + b
    ranks = _ranks(pooled)
    mean = n1 * len(b) / 2.0
    base = n1 * (n1 + 1) / 2.0
    observed = abs(u_observed - mean)
    hits = 0
    count = 0
    for combo in combinations(range(len(pooled)), n1):
        count += 1
        u = sum(ranks[i] for i in combo) - base
        if abs(u - mean) >= observed - 1e-9:
            hits += 1
    return hits / count


def vargha_delaney_a12(sample_a, sample_b):
    """Probability that a random draw from a beats one from b (ties half)."""
    a = list(sample_a)
    b = list(sample_b)
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    return _u_statistic(a, b) / (len(a) * len(b))


@dataclass
class ComparisonResult:
    instance_a: str
    instance_b: str
    metric: str
    n1: int
    n2: int
    u_statistic: float
    p_value: float
    a12: float


def compare_samples(instance_a, instance_b, values_a, values_b,
                    metric="data_received"):
    u, p = mann_whitney_u(values_a, values_b)
    a12 = vargha_delaney_a12(values_a, values_b)
    return ComparisonResult(instance_a, instance_b, metric,
                            len(values_a), len(values_b), u, p, a12)


# ---------------------------------------------------------------------------
# Aggregation across runs

SUMMARY_COLUMNS = (
    "instance", "deployment", "scenario", "runs",
    "interests_total", "data_total",
    "satisfaction_mean", "satisfaction_min", "satisfaction_max",
    "distinct_interests", "distinct_data", "distinct_satisfaction",
    "shared_interests", "shared_data", "shared_satisfaction",
)


@dataclass
class InstanceSummary:
    instance: str
    deployment: str
    scenario: int
    runs: int
    interests_total: int
    data_total: int
    satisfaction_mean: float
    satisfaction_min: float
    satisfaction_max: float
    distinct_interests: int
    distinct_data: int
    distinct_satisfaction: float
    shared_interests: int
    shared_data: int
    shared_satisfaction: float


def _kind_totals(runs, kind):
    sent = got = 0
    for metrics in runs:
        kind_sent, kind_got = metrics.by_app_kind().get(kind, (0, 0))
        sent += kind_sent
        got += kind_got
    ratio = got / sent if sent else 0.0
    return sent, got, ratio


def summarize(runs):
    """Collapse per-run metrics into one InstanceSummary per instance."""
    groups = {}
    for metrics in runs:
        groups.setdefault((metrics.deployment, metrics.scenario), []).append(metrics)
    rows = []
    for (deployment, scenario) in sorted(groups):
        bunch = groups[(deployment, scenario)]
        ratios = [m.satisfaction_ratio for m in bunch]
        d_sent, d_got, d_ratio = _kind_totals(bunch, "distinct")
        s_sent, s_got, s_ratio = _kind_totals(bunch, "shared")
        rows.append(InstanceSummary(
            instance="%s-%d" % (deployment, scenario),
            deployment=deployment,
            scenario=scenario,
            runs=len(bunch),
            interests_total=sum(m.interests_sent for m in bunch),
            data_total=sum(m.data_received for m in bunch),
            satisfaction_mean=sum(ratios) / len(ratios),
            satisfaction_min=min(ratios),
            satisfaction_max=max(ratios),
            distinct_interests=d_sent,
            distinct_data=d_got,
            distinct_satisfaction=d_ratio,
            shared_interests=s_sent,
            shared_data=s_got,
            shared_satisfaction=s_ratio,
        ))
    return rows


def write_summary_csv(summaries, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in summaries:
            writer.writerow([getattr(row, col) for col in SUMMARY_COLUMNS])


RUNS_INDEX_COLUMNS = ("instance", "deployment", "scenario", "seed",
                      "interests_sent", "data_received", "satisfaction_ratio")


def write_runs_index(runs, path):
    """Flat per-run table used by the compare command."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUNS_INDEX_COLUMNS)
        for m in runs:
            writer.writerow([m.instance, m.deployment, m.scenario, m.seed,
                             m.interests_sent, m.data_received,
                             m.satisfaction_ratio])


def read_runs_index(path):
    rows = []
    with open(path, newline="") as fh:
        for record in csv.DictReader(fh):
            record["scenario"] = int(record["scenario"])
            record["seed"] = int(record["seed"])
            record["interests_sent"] = int(record["interests_sent"])
            record["data_received"] = int(record["data_received"])
            record["satisfaction_ratio"] = float(record["satisfaction_ratio"])
            rows.append(record)
    return rows


COMPARISON_COLUMNS = ("instance_a", "instance_b", "metric", "n1", "n2",
                      "u_statistic", "p_value", "a12")


def write_comparisons_csv(results, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARISON_COLUMNS)
        for res in results:
            writer.writerow([getattr(res, col) for col in COMPARISON_COLUMNS])

import math

import pytest
from hypothesis import given, strategies as st

from manetsim import metrics
from manetsim.metrics import MetricUndefined
from manetsim.trace import TraceRecord


def rec(t, action, node, kind, pid, src, dst, reason="-", size=512):
    return TraceRecord(round(t * 1_000_000), action, node, kind, pid, size, src, dst, reason)


def flows(sent, delivered, kind="DataUdp"):
    """``sent`` packets 0 -> 1, the first ``delivered`` of them arriving 0.1 s later."""
    out = []
    for i in range(sent):
        out.append(rec(i * 0.01, "s", 0, kind, i + 1, 0, 1))
        if i < delivered:
            out.append(rec(i * 0.01 + 0.1, "r", 1, kind, i + 1, 0, 1))
    return sorted(out, key=lambda r: r.time_us)


@pytest.mark.parametrize("sent, got, expected", [
    (3114, 2992, 96.08), (86, 19, 22.09), (3, 2, 66.67),
])
def test_pdf(sent, got, expected):
    assert metrics.pdf(flows(sent, got, "DataTcp")) == pytest.approx(expected, abs=0.005)


def test_pdf_undefined_without_originations():
    with pytest.raises(MetricUndefined):
        metrics.pdf([])


def test_pdf_ignores_relay_receptions():
    recs = [rec(1, "s", 0, "DataUdp", 1, 0, 2), rec(1.1, "r", 1, "DataUdp", 1, 0, 2)]
    assert metrics.pdf(recs) == 0.0


def test_throughput_single_busy_bin():
    recs = [rec(0.5, "r", 1, "DataUdp", i, 0, 1) for i in range(42)]
    assert metrics.throughput_series(recs, 1.0) == [(0.0, 42.0)]


def test_throughput_uniform():
    recs = [rec(0.25 + 0.5 * i, "r", 1, "DataUdp", i, 0, 1) for i in range(10)]
    assert [v for _, v in metrics.throughput_series(recs, 1.0, end=5.0)] == [2.0] * 5


def test_throughput_empty():
    assert metrics.throughput_series([], 1.0, end=3.0) == [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]


def test_nrl_examples():
    routing = [rec(0.1 * i, "s" if i % 2 else "f", i, "Rreq", 100 + i, 0, -1) for i in range(4)]
    data = [rec(1.0, "r", 1, "DataUdp", 1, 0, 1), rec(1.1, "r", 1, "DataUdp", 2, 0, 1)]
    assert metrics.nrl(routing + data) == 2.0
    assert metrics.nrl(data) == 0.0
    with pytest.raises(MetricUndefined):
        metrics.nrl(routing)


def test_nrl_counts_alerts_not_false_packets():
    recs = [rec(0.1, "s", 3, "IdsAlert", 5, 3, 9, "rate-threshold"),
            rec(0.2, "s", 9, "FalseFlood", 6, 9, -1),
            rec(1.0, "r", 1, "DataUdp", 1, 0, 1)]
    assert metrics.nrl(recs) == 1.0


def test_delay():
    one = [rec(1.0, "s", 0, "DataUdp", 1, 0, 1), rec(1.5, "r", 1, "DataUdp", 1, 0, 1)]
    assert metrics.avg_end_to_end_delay(one) == pytest.approx(0.5)
    two = one + [rec(2.0, "s", 0, "DataUdp", 2, 0, 1), rec(2.5, "s", 0, "DataUdp", 3, 0, 1),
                 rec(3.0, "r", 1, "DataUdp", 2, 0, 1)]
    assert metrics.avg_end_to_end_delay(sorted(two, key=lambda r: r.time_us)) == pytest.approx(0.75)


def test_delay_undefined():
    with pytest.raises(MetricUndefined):
        metrics.avg_end_to_end_delay(flows(3, 0))


def test_infection_zero_without_attackers():
    assert all(v == 0.0 for _, v in metrics.infection_series(flows(20, 15), 1.0))


def test_infection_counts_captures_and_accepted_floods():
    recs = [
        rec(0.1, "s", 0, "DataUdp", 1, 0, 2),
        rec(0.2, "d", 9, "DataUdp", 1, 0, 2, "selfish-capture-udp"),
        rec(0.3, "s", 0, "DataUdp", 2, 0, 2),
        rec(0.4, "r", 2, "DataUdp", 2, 0, 2),
        rec(0.5, "s", 9, "FalseFlood", 3, 9, -1),
        rec(0.6, "r", 1, "FalseFlood", 3, 9, -1),
        rec(0.6, "b", 4, "FalseFlood", 3, 9, -1, "blocked-sender"),
    ]
    # (1 capture + 1 accepted flood) / (2 originations + 2 flood receptions)
    assert metrics.infection_series(recs, 1.0) == [(0.0, 50.0)]


def test_block_entry_times():
    recs = [rec(1.0, "s", 28, "IdsAlert", 5, 28, 29, "rate-threshold"),
            rec(1.1, "r", 3, "IdsAlert", 5, 28, 29),
            rec(1.2, "f", 3, "IdsAlert", 5, 28, 29),
            rec(1.3, "r", 3, "IdsAlert", 5, 28, 29)]
    assert metrics.block_entries(recs) == {29: (1.0, "rate-threshold")}
    assert metrics.block_entry_times(recs) == {(28, 29): 1.0, (3, 29): 1.1}


def test_conservation_flags_double_origin_and_double_terminal():
    good = flows(3, 2)
    assert metrics.check_conservation(good).ok
    bad = good + [rec(9, "s", 0, "DataUdp", 1, 0, 1), rec(9, "d", 5, "DataUdp", 2, 0, 1, "no-route")]
    report = metrics.check_conservation(bad)
    assert not report.ok and len(report.violations) == 2


def tcp_trace():
    return [
        rec(1.0, "s", 0, "DataTcp", 1, 0, 7), rec(1.1, "r", 7, "DataTcp", 1, 0, 7),
        rec(1.1, "s", 7, "TcpAck", 2, 7, 0, size=40), rec(1.2, "r", 0, "TcpAck", 2, 7, 0, size=40),
        rec(2.0, "s", 0, "DataTcp", 3, 0, 7),
        rec(2.1, "d", 29, "DataTcp", 3, 0, 7, "selfish-block-tcp"),
        rec(3.0, "s", 2, "DataTcp", 4, 2, 7), rec(3.1, "r", 7, "DataTcp", 4, 2, 7),
        rec(3.1, "s", 7, "TcpAck", 5, 7, 2, size=40),
        rec(3.2, "d", 29, "TcpAck", 5, 7, 2, "selfish-block-tcp"),
    ]


def test_per_node_tables():
    t = metrics.per_node_tables(tcp_trace())
    assert t.data_sent == {0: 2, 2: 1}
    assert t.data_received == {7: 2}
    assert t.data_drops == {29: 1}
    assert t.ack_sent == {7: 2}
    assert t.ack_received == {0: 1}
    assert t.ack_drops == {29: 1}


def test_rendered_table_headers():
    text = metrics.render_tables(metrics.per_node_tables(tcp_trace()))
    lines = text.splitlines()
    assert [c.strip() for c in lines[1].split("  ") if c.strip()] == [
        "Sender Node", "Packets Sends", "Receiver Node", "Packets Receives",
        "Packets Drop by Node", "Drop Packets"]
    assert "Packets send = 3" in text and "Packets receive = 2" in text
    assert "Packet Drop = 1" in text
    ack_header = lines[lines.index("TCP acknowledgements") + 1]
    assert [c.strip() for c in ack_header.split("  ") if c.strip()] == [
        "Ack receiver Node", "Ack packets receives", "Ack drop by Node", "Ack Drop"]
    assert "Total Ack. receives = 1" in text and "Ack. Drop = 1" in text


def test_empty_tables():
    t = metrics.per_node_tables([])
    assert t.empty and all(v == 0 for v in t.totals.values())
    assert "no TCP traffic" in metrics.render_tables(t)


def test_csv_outputs(tmp_path):
    paths = metrics.write_tables_csv(metrics.per_node_tables(tcp_trace()), tmp_path)
    assert len(paths) == 6
    assert (tmp_path / "table_data_drops.csv").read_text().splitlines() == [
        "node,packets", "29,1", "total,1"]
    metrics.write_series_csv([(0.0, 2.0), (1.0, 0.5)], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "time,value"


@given(st.lists(st.tuples(st.floats(min_value=0, max_value=20, allow_nan=False), st.booleans()),
                min_size=1, max_size=40),
       st.sampled_from([0.25, 0.5, 1.0, 2.0]))
def test_pdf_consistent_with_throughput(pkts, bin_width):
    recs = []
    for i, (t, ok) in enumerate(pkts):
        recs.append(rec(t, "s", 0, "DataUdp", i, 0, 1))
        if ok:
            recs.append(rec(t + 0.05, "r", 1, "DataUdp", i, 0, 1))
    recs.sort(key=lambda r: r.time_us)
    series = metrics.throughput_series(recs, bin_width)
    total = sum(v * bin_width for _, v in series)
    assert math.isclose(metrics.pdf(recs), 100.0 * total / len(pkts), rel_tol=1e-9)
    assert 0.0 <= metrics.pdf(recs) <= 100.0


@given(st.lists(st.tuples(st.floats(min_value=0, max_value=10, allow_nan=False),
                          st.sampled_from(["deliver", "capture", "flood", "lost"])),
                max_size=40))
def test_infection_bounded(events):
    recs = []
    for i, (t, what) in enumerate(events):
        if what == "flood":
            recs.append(rec(t, "r", 1, "FalseFlood", i, 9, -1))
            continue
        recs.append(rec(t, "s", 0, "DataUdp", i, 0, 2))
        if what == "deliver":
            recs.append(rec(t + 0.1, "r", 2, "DataUdp", i, 0, 2))
        elif what == "capture":
            recs.append(rec(t + 0.1, "d", 9, "DataUdp", i, 0, 2, "selfish-capture-udp"))
    recs.sort(key=lambda r: r.time_us)
    assert all(0.0 <= v <= 100.0 for _, v in metrics.infection_series(recs, 1.0))

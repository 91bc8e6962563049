"""End-to-end acceptance checks on the three shipped presets.

Each test records a one-line verdict that the terminal summary prints as
``criterion N: PASS|FAIL - detail``; the same line is also printed to stdout.
"""

import io
import time
from collections import Counter, deque

import pytest

from conftest import ACCEPTANCE
from manetsim import metrics
from manetsim.network import simulate
from manetsim.scenario import load_preset

SEEDS = range(1, 21)


def verdict(num: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[num] = (ok, detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


class Run:
    def __init__(self, preset: str, seed: int | None = None):
        self.cfg = load_preset(preset)
        if seed is not None:
            self.cfg.seed = seed
        t0 = time.perf_counter()
        self.net, self.summary = simulate(self.cfg, keep_records=True)
        self.seconds = time.perf_counter() - t0
        self.records = self.net.tracer.records


@pytest.fixture(scope="module")
def baseline():
    return Run("baseline")


@pytest.fixture(scope="module")
def attack():
    return Run("attack")


@pytest.fixture(scope="module")
def ids():
    return Run("ids")


def bfs(net, src):
    dist = {src: 0}
    todo = deque([src])
    while todo:
        u = todo.popleft()
        for v in net.mobility.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                todo.append(v)
    return dist


def test_criterion_1_baseline_sanity(baseline):
    net, recs = baseline.net, baseline.records
    problems = []
    if net.cfg.mobility.moving:
        problems.append("baseline nodes move")
    if len(bfs(net, 0)) != net.cfg.node_count:
        problems.append("topology not connected")
    pdf = metrics.pdf(recs)
    nrl = metrics.nrl(recs)
    if pdf != 100.0:
        problems.append(f"pdf {pdf:.4f}")
    if not nrl > 0:
        problems.append("nrl is zero")
    for conn in net.cfg.traffic:
        entry = net.nodes[conn.source].agent.table.get(conn.sink)
        want = bfs(net, conn.source)[conn.sink]
        if entry is None or entry.hop_count != want:
            got = None if entry is None else entry.hop_count
            problems.append(f"{conn.source}->{conn.sink} hops {got} != bfs {want}")
    if baseline.seconds >= 5.0:
        problems.append(f"runtime {baseline.seconds:.2f}s")
    verdict(1, not problems,
            "; ".join(problems) or f"pdf=100%, nrl={nrl:.3f}, "
            f"{len(net.cfg.traffic)} routes match BFS, {baseline.seconds:.2f}s")


def test_criterion_2_attack_collapse(attack):
    base = Run("baseline", seed=attack.cfg.seed)
    pdf_atk = metrics.pdf(attack.records)
    pdf_base = metrics.pdf(base.records)
    ok = pdf_atk <= 25.0 and pdf_atk <= pdf_base - 40.0 and attack.seconds < 10.0
    verdict(2, ok, f"attack pdf={pdf_atk:.2f}% vs baseline {pdf_base:.2f}% "
                   f"(seed {attack.cfg.seed}), {attack.seconds:.2f}s")


def test_criterion_3_ids_recovery(attack, ids):
    pdf_atk = metrics.pdf(attack.records)
    pdf_ids = metrics.pdf(ids.records)
    ok = pdf_ids >= 82.0 and pdf_ids >= 3.0 * pdf_atk
    verdict(3, ok, f"ids pdf={pdf_ids:.2f}% (>= 82), {pdf_ids / pdf_atk:.1f}x attack pdf")


def test_criterion_4_infection(attack, ids):
    end = attack.cfg.duration
    peak = max(v for _, v in metrics.infection_series(attack.records, 1.0, end=end))
    entries = metrics.block_entry_times(ids.records)
    last = max(entries.values())
    after = [(t, v) for t, v in metrics.infection_series(ids.records, 1.0, end=end) if t >= last]
    nonzero = [(t, v) for t, v in after if v != 0.0]
    ok = peak >= 30.0 and bool(after) and not nonzero
    verdict(4, ok, f"attack peak={peak:.1f}%; ids last block entry {last:.3f}s, "
                   f"{len(after)} later bins, {len(nonzero)} nonzero")


def test_criterion_5_routing_load_ratio(attack, ids):
    r_atk = metrics.routing_transmissions(attack.records)
    r_ids = metrics.routing_transmissions(ids.records)
    ratio = r_ids / r_atk
    verdict(5, ratio >= 4.0, f"routing tx ids={r_ids} attack={r_atk} ratio={ratio:.2f} (>= 4)")


TABLE_HEADERS = (
    ["Sender Node", "Packets Sends", "Receiver Node", "Packets Receives",
     "Packets Drop by Node", "Drop Packets"],
    ["Ack receiver Node", "Ack packets receives", "Ack drop by Node", "Ack Drop"],
)


def headers(text):
    lines = text.splitlines()
    data = lines[lines.index("TCP data packets") + 1]
    ack = lines[lines.index("TCP acknowledgements") + 1]
    split = lambda s: [c.strip() for c in s.split("  ") if c.strip()]  # noqa: E731
    return split(data), split(ack)


def test_criterion_6_ack_starvation(attack, ids):
    ratios, shapes = {}, True
    for name, run in (("attack", attack), ("ids", ids)):
        t = metrics.per_node_tables(run.records)
        ratios[name] = t.totals["ack_received"] / t.totals["data_sent"]
        shapes &= headers(metrics.render_tables(t)) == TABLE_HEADERS
    ok = ratios["attack"] <= 0.30 and ratios["ids"] >= 0.85 and shapes
    verdict(6, ok, f"ack/data attack={ratios['attack']:.1%} ids={ratios['ids']:.1%}, "
                   f"table columns {'match' if shapes else 'differ'}")


def test_criterion_7_detection_correctness():
    late, false_blocks, detected, unseen = [], [], 0, 0
    for seed in SEEDS:
        cfg = load_preset("ids")
        cfg.seed = seed
        net, _ = simulate(cfg)
        window = round(cfg.ids.window_len * 1_000_000)
        selfish = set(cfg.selfish)
        for ids_node in net.ids_nodes:
            for target in ids_node.ids.blocks:
                if target not in selfish:
                    false_blocks.append((seed, target))
            first_heard: dict[int, int] = {}
            for t, sender, hearers in net.burst_log:
                if ids_node.id in hearers:
                    first_heard.setdefault(sender, t)
            for node in sorted(selfish):
                if node not in first_heard:
                    unseen += 1
                    continue
                entry = ids_node.ids.blocks.get(node)
                if entry is None or entry.at - first_heard[node] > window:
                    late.append((seed, node))
                else:
                    detected += 1
        for node in net.nodes:
            for target in node.blocked:
                if target not in selfish:
                    false_blocks.append((seed, node.id, target))
    ok = not late and not false_blocks
    verdict(7, ok, f"{len(SEEDS)} seeds: {detected} in-range attackers blocked in time, "
                   f"{len(late)} late, {unseen} never in range, "
                   f"{len(false_blocks)} normal nodes blocked")


def test_criterion_8_determinism_and_conservation(baseline, attack, ids):
    t0 = time.perf_counter()
    problems = []
    cfg = load_preset("ids")
    cfg.seed = 7
    traces = []
    for _ in range(2):
        buf = io.StringIO()
        simulate(cfg, buf)
        traces.append(buf.getvalue())
    if traces[0] != traces[1]:
        problems.append("traces differ for the same seed")
    for name, run in (("baseline", baseline), ("attack", attack), ("ids", ids)):
        rep = metrics.check_conservation(run.records)
        if not rep.ok:
            problems.append(f"{name}: {rep.violations[0]}")
        stamps = [r.time_us for r in run.records]
        if stamps != sorted(stamps):
            problems.append(f"{name}: clock not monotone")
        per_flood = Counter(r.pkt_id for r in run.records if r.kind == "Rreq" and r.action in "sf")
        worst = max(per_flood.values(), default=0)
        if worst > run.cfg.node_count:
            problems.append(f"{name}: a discovery flood was sent {worst} times")
    elapsed = time.perf_counter() - t0 + baseline.seconds + attack.seconds + ids.seconds
    if elapsed >= 60.0:
        problems.append(f"took {elapsed:.1f}s")
    verdict(8, not problems, "; ".join(problems) or
            f"identical traces, conservation/monotone/flood bound hold on 3 presets, {elapsed:.1f}s")

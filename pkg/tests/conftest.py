from __future__ import annotations

import io

import pytest

from manetsim.mobility import MobilityParams
from manetsim.network import Network, simulate
from manetsim.scenario import ScenarioConfig
from manetsim.traffic import Connection

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def static_config(positions, traffic=(), roles=None, duration=10.0, seed=1,
                  area=(1000.0, 1000.0), radio_range=250.0, **extra) -> ScenarioConfig:
    cfg = ScenarioConfig(
        duration=duration,
        seed=seed,
        area=area,
        node_count=len(positions),
        radio_range=radio_range,
        positions={i: tuple(p) for i, p in enumerate(positions)},
        roles=dict(roles or {}),
        mobility=MobilityParams(model="fixed", max_speed=0.0),
        traffic=list(traffic),
    )
    for key, value in extra.items():
        setattr(cfg, key, value)
    if cfg.selfish:
        cfg.adversary.n_selfish = len(cfg.selfish)
    return cfg


def cbr(src, dst, start=1.0, stop=None, rate=4.0, duration=10.0) -> Connection:
    return Connection("cbr", src, dst, rate=rate, start_at=start,
                      stop_at=stop if stop is not None else duration - 1.0)


def tcp(src, dst, start=1.0, stop=9.0, rate=4.0) -> Connection:
    return Connection("tcp", src, dst, rate=rate, start_at=start, stop_at=stop)


def run(cfg: ScenarioConfig) -> tuple[Network, list]:
    net, _ = simulate(cfg, keep_records=True)
    return net, net.tracer.records


def trace_text(cfg: ScenarioConfig) -> str:
    buf = io.StringIO()
    simulate(cfg, buf)
    return buf.getvalue()


def line_positions(n: int, spacing: float = 200.0, y: float = 100.0):
    return [(10.0 + i * spacing, y) for i in range(n)]


@pytest.fixture
def make_static():
    return static_config


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")

"""Scenario files: ``key = value`` lines grouped in ``[section]`` blocks.

Omitted keys fall back to the case-study defaults (30 nodes, 800x600 m,
250 m range, 100 s, 512-byte packets, 30 m/s maximum speed).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .aodv import AodvParams
from .ids import IdsConfig
from .mobility import MobilityParams
from .network import LinkParams
from .selfish import AdversaryConfig
from .traffic import Connection

ROLES = ("normal", "selfish", "ids")
PRESETS = ("baseline", "attack", "ids")


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ScenarioConfig:
    duration: float = 100.0
    seed: int = 1
    start_time: float = 0.0
    area: tuple[float, float] = (800.0, 600.0)
    node_count: int = 30
    radio_range: float = 250.0
    placement: str = "random"
    positions: dict[int, tuple[float, float]] = field(default_factory=dict)
    roles: dict[int, str] = field(default_factory=dict)  # only non-normal nodes listed
    mobility: MobilityParams = field(default_factory=MobilityParams)
    traffic: list[Connection] = field(default_factory=list)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    ids: IdsConfig = field(default_factory=IdsConfig)
    link: LinkParams = field(default_factory=LinkParams)
    aodv: AodvParams = field(default_factory=AodvParams)

    def role_of(self, node: int) -> str:
        return self.roles.get(node, "normal")

    def nodes_with(self, role: str) -> list[int]:
        return sorted(n for n, r in self.roles.items() if r == role)

    @property
    def selfish(self) -> list[int]:
        return self.nodes_with("selfish")

    @property
    def ids_nodes(self) -> list[int]:
        return self.nodes_with("ids")

    def validate(self) -> None:
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        if self.node_count <= 0:
            raise ScenarioError("node_count must be positive")
        if self.radio_range <= 0:
            raise ScenarioError("radio range must be positive")
        if self.placement not in ("random", "grid"):
            raise ScenarioError(f"unknown placement {self.placement!r}")
        for node, role in self.roles.items():
            if not 0 <= node < self.node_count:
                raise ScenarioError(f"role given to unknown node {node}")
            if role not in ROLES:
                raise ScenarioError(f"unknown role {role!r}")
        for node, (x, y) in self.positions.items():
            if not 0 <= node < self.node_count:
                raise ScenarioError(f"position given to unknown node {node}")
            if not (0 <= x <= self.area[0] and 0 <= y <= self.area[1]):
                raise ScenarioError(f"position of node {node} lies outside the area")
        for conn in self.traffic:
            for end in (conn.source, conn.sink):
                if not 0 <= end < self.node_count:
                    raise ScenarioError(f"connection endpoint {end} is not a node")
                if self.role_of(end) == "selfish":
                    raise ScenarioError(f"selfish node {end} cannot be a traffic endpoint")
        if self.selfish:
            self.adversary.validate()
        self.ids.validate()


# -- parsing -----------------------------------------------------------------

def _parse_nodes(value: str) -> list[int]:
    value = value.strip()
    if not value or value == "-":
        return []
    return [int(tok) for tok in value.replace(",", " ").split()]


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_connection(value: str) -> Connection:
    parts = value.split()
    if len(parts) < 3:
        raise ValueError("connection needs: kind source sink [key=value ...]")
    kind, source, sink = parts[0].lower(), int(parts[1]), int(parts[2])
    if kind == "udp":
        kind = "cbr"
    opts: dict[str, float] = {}
    names = {"rate": "rate", "size": "packet_size", "start": "start_at", "stop": "stop_at"}
    for tok in parts[3:]:
        key, sep, val = tok.partition("=")
        if not sep or key not in names:
            raise ValueError(f"bad connection option {tok!r}")
        opts[names[key]] = float(val)
    if "packet_size" in opts:
        opts["packet_size"] = int(opts["packet_size"])
    return Connection(kind, source, sink, **opts)


def _parse_area(value: str) -> tuple[float, float]:
    w, _, h = value.lower().replace("×", "x").partition("x")
    return (float(w), float(h))


_SIM_KEYS = {
    "duration": ("duration", float),
    "seed": ("seed", int),
    "start_time": ("start_time", float),
    "node_count": ("node_count", int),
    "area": ("area", _parse_area),
    "placement": ("placement", str),
}
_AODV_KEYS = {f.name for f in dataclasses.fields(AodvParams)}
_RADIO_KEYS = {"range": "radio_range", "bandwidth": "bandwidth",
               "processing_delay": "processing_delay", "ifq_len": "ifq_len"}
_MOBILITY_KEYS = {f.name for f in dataclasses.fields(MobilityParams)}
_ADVERSARY_KEYS = {f.name for f in dataclasses.fields(AdversaryConfig)}
_IDS_KEYS = {f.name for f in dataclasses.fields(IdsConfig)}


def _coerce(obj, name: str, raw: str):
    current = getattr(obj, name)
    if isinstance(current, bool):
        return _parse_bool(raw)
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw.strip()


def parse_scenario_text(text: str) -> ScenarioConfig:
    cfg = ScenarioConfig()
    section: str | None = None
    role_lines: dict[int, int] = {}
    explicit_n_selfish: tuple[int, int] | None = None
    mob: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("sim", "radio", "mobility", "roles", "traffic", "adversary", "ids"):
                raise ScenarioError(f"unknown section [{section}]", lineno)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioError(f"expected 'key = value', got {line!r}", lineno)
        key, value = key.strip().lower(), value.strip()
        if section is None:
            raise ScenarioError("key outside of any section", lineno)
        try:
            if section == "sim":
                if key in _SIM_KEYS:
                    attr, conv = _SIM_KEYS[key]
                    setattr(cfg, attr, conv(value))
                elif key in _AODV_KEYS:
                    setattr(cfg.aodv, key, _coerce(cfg.aodv, key, value))
                else:
                    raise ScenarioError(f"unknown key {key!r} in [sim]", lineno)
            elif section == "radio":
                if key not in _RADIO_KEYS:
                    raise ScenarioError(f"unknown key {key!r} in [radio]", lineno)
                if key == "range":
                    cfg.radio_range = float(value)
                else:
                    setattr(cfg.link, key, _coerce(cfg.link, key, value))
            elif section == "mobility":
                if key.startswith("position."):
                    node = int(key.split(".", 1)[1])
                    x, y = (float(v) for v in value.replace(",", " ").split())
                    if not (0 <= x <= cfg.area[0] and 0 <= y <= cfg.area[1]):
                        raise ScenarioError(f"position of node {node} lies outside the area",
                                            lineno)
                    cfg.positions[node] = (x, y)
                elif key in _MOBILITY_KEYS:
                    mob[key] = _coerce(MobilityParams(), key, value)
                else:
                    raise ScenarioError(f"unknown key {key!r} in [mobility]", lineno)
            elif section == "roles":
                if key not in ("selfish", "ids", "normal"):
                    raise ScenarioError(f"unknown role {key!r}", lineno)
                for node in _parse_nodes(value):
                    prev = cfg.roles.get(node)
                    if prev is not None and prev != key:
                        raise ScenarioError(
                            f"node {node} declared both {prev} and {key} "
                            f"(first on line {role_lines[node]})", lineno)
                    role_lines[node] = lineno
                    if key == "normal":
                        cfg.roles.pop(node, None)
                    else:
                        cfg.roles[node] = key
            elif section == "traffic":
                if key not in ("conn", "connection"):
                    raise ScenarioError(f"unknown key {key!r} in [traffic]", lineno)
                conn = _parse_connection(value)
                cfg.traffic.append(conn)
            elif section == "adversary":
                if key not in _ADVERSARY_KEYS:
                    raise ScenarioError(f"unknown key {key!r} in [adversary]", lineno)
                setattr(cfg.adversary, key, _coerce(cfg.adversary, key, value))
                if key == "n_selfish":
                    explicit_n_selfish = (cfg.adversary.n_selfish, lineno)
            elif section == "ids":
                if key not in _IDS_KEYS:
                    raise ScenarioError(f"unknown key {key!r} in [ids]", lineno)
                setattr(cfg.ids, key, _coerce(cfg.ids, key, value))
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc), lineno) from exc

    try:
        cfg.mobility = MobilityParams(**mob)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    n_selfish = len(cfg.selfish)
    if explicit_n_selfish is not None:
        value, lineno = explicit_n_selfish
        if n_selfish and value != n_selfish:
            raise ScenarioError(
                f"n_selfish={value} but {n_selfish} selfish node(s) declared", lineno)
    elif n_selfish:
        cfg.adversary.n_selfish = n_selfish
    try:
        cfg.validate()
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    return cfg


def parse_scenario(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario_text(text)


def load_preset(name: str) -> ScenarioConfig:
    return parse_scenario_text(preset_text(name))


def preset_text(name: str) -> str:
    name = name.removesuffix(".scn")
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("manetsim.presets").joinpath(f"{name}.scn").read_text("utf-8")


# -- serialization -----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: ScenarioConfig) -> str:
    out = ["[sim]"]
    out.append(f"duration = {_fmt(cfg.duration)}")
    out.append(f"seed = {cfg.seed}")
    out.append(f"start_time = {_fmt(cfg.start_time)}")
    out.append(f"node_count = {cfg.node_count}")
    out.append(f"area = {_fmt(cfg.area[0])}x{_fmt(cfg.area[1])}")
    out.append(f"placement = {cfg.placement}")
    for f in dataclasses.fields(AodvParams):
        out.append(f"{f.name} = {_fmt(getattr(cfg.aodv, f.name))}")
    out += ["", "[radio]", f"range = {_fmt(cfg.radio_range)}"]
    for f in dataclasses.fields(LinkParams):
        out.append(f"{f.name} = {_fmt(getattr(cfg.link, f.name))}")
    out += ["", "[mobility]"]
    for f in dataclasses.fields(MobilityParams):
        out.append(f"{f.name} = {_fmt(getattr(cfg.mobility, f.name))}")
    for node in sorted(cfg.positions):
        x, y = cfg.positions[node]
        out.append(f"position.{node} = {_fmt(x)}, {_fmt(y)}")
    out += ["", "[roles]"]
    out.append(f"selfish = {', '.join(map(str, cfg.selfish)) or '-'}")
    out.append(f"ids = {', '.join(map(str, cfg.ids_nodes)) or '-'}")
    out += ["", "[traffic]"]
    for c in cfg.traffic:
        kind = "tcp" if c.kind == "tcp" else "cbr"
        out.append(f"conn = {kind} {c.source} {c.sink} rate={_fmt(c.rate)} "
                   f"size={c.packet_size} start={_fmt(c.start_at)} stop={_fmt(c.stop_at)}")
    out += ["", "[adversary]"]
    for f in dataclasses.fields(AdversaryConfig):
        out.append(f"{f.name} = {_fmt(getattr(cfg.adversary, f.name))}")
    out += ["", "[ids]"]
    for f in dataclasses.fields(IdsConfig):
        out.append(f"{f.name} = {_fmt(getattr(cfg.ids, f.name))}")
    return "\n".join(out) + "\n"

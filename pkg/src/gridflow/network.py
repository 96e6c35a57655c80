"""Case data model, JSON case files and per-unit helpers.

All powers and impedances are per-unit on the network's ``s_base``. Angles
are radians on the Python objects and degrees in case files.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

__all__ = [
    "BusKind",
    "BranchKind",
    "ZeroSeqPath",
    "Bus",
    "Branch",
    "ShuntDevice",
    "GeneratorSequence",
    "SequenceData",
    "Network",
    "ValidationReport",
    "ParseError",
    "ValidationError",
    "UnknownBus",
    "parse_case",
    "dump_case",
    "load_case",
    "glover5",
    "validate",
    "base_current_amps",
]


class BusKind(str, enum.Enum):
    SLACK = "Slack"
    PV = "PV"
    PQ = "PQ"


class BranchKind(str, enum.Enum):
    LINE = "Line"
    TRANSFORMER = "Transformer"


class ZeroSeqPath(str, enum.Enum):
    OPEN = "Open"
    GROUNDED = "GroundedThrough"


class ParseError(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None):
        where = path or (f"line {line}" if line is not None else "")
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line


class ValidationError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid network:\n  " + "\n  ".join(errors))
        self.errors = list(errors)


class UnknownBus(KeyError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    kind: BusKind
    v_setpoint: float = 1.0
    angle_setpoint: float = 0.0
    p_gen: float = 0.0
    q_gen: float = 0.0
    p_load: float = 0.0
    q_load: float = 0.0
    q_gen_min: float | None = None
    q_gen_max: float | None = None
    base_kv: float | None = None

    @property
    def p_sched(self) -> float:
        return self.p_gen - self.p_load

    @property
    def q_sched(self) -> float:
        return self.q_gen - self.q_load


@dataclass(frozen=True)
class Branch:
    """Series R+jX with total shunt G+jB split half per end.

    For transformers the off-nominal ``tap`` sits on the ``from_bus`` side.
    Zero-sequence fields left as ``None`` are filled in on construction:
    lines get three times the positive-sequence impedance, transformers the
    same impedance, and ``b0_charging`` copies ``b_charging``.
    """

    from_bus: int
    to_bus: int
    kind: BranchKind = BranchKind.LINE
    r: float = 0.0
    x: float = 0.0
    g_shunt: float = 0.0
    b_charging: float = 0.0
    tap: float = 1.0
    phase_shift: float = 0.0
    mva_limit: float = 0.0
    in_service: bool = True
    circuit: int = 1
    r0: float | None = None
    x0: float | None = None
    b0_charging: float | None = None
    zero_seq_path: ZeroSeqPath = ZeroSeqPath.GROUNDED

    def __post_init__(self):
        k = 3.0 if self.kind is BranchKind.LINE else 1.0
        if self.r0 is None:
            object.__setattr__(self, "r0", k * self.r)
        if self.x0 is None:
            object.__setattr__(self, "x0", k * self.x)
        if self.b0_charging is None:
            object.__setattr__(self, "b0_charging", self.b_charging)

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.from_bus, self.to_bus, self.circuit)

    def connects(self, a: int, b: int) -> bool:
        return {self.from_bus, self.to_bus} == {a, b}

    @property
    def label(self) -> str:
        return f"{self.from_bus}-{self.to_bus}" + (f"#{self.circuit}" if self.circuit != 1 else "")


@dataclass(frozen=True)
class ShuntDevice:
    """Fixed shunt: ``q_nominal`` pu delivered at 1.0 pu voltage (capacitive > 0)."""

    bus: int
    q_nominal: float
    in_service: bool = True


@dataclass(frozen=True)
class GeneratorSequence:
    """Sequence reactances of the machine at ``bus``."""

    bus: int
    x_sub: float
    x_neg: float
    x_zero: float
    z_neutral: complex = 0j
    grounded: bool = True


@dataclass(frozen=True)
class SequenceData:
    generators: tuple[GeneratorSequence, ...] = ()


@dataclass(frozen=True)
class Network:
    s_base: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...] = ()
    shunts: tuple[ShuntDevice, ...] = ()
    name: str = ""
    sequence: SequenceData | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        for attr in ("buses", "branches", "shunts", "notes"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    @property
    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def bus(self, bus_id: int) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise UnknownBus(bus_id)

    @property
    def slack(self) -> Bus:
        return next(b for b in self.buses if b.kind is BusKind.SLACK)

    @property
    def active_branches(self) -> list[Branch]:
        return [br for br in self.branches if br.in_service]

    def replace(self, **changes) -> "Network":
        return dataclasses.replace(self, **changes)


# --- validation -------------------------------------------------------------


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _reachable(ids: Iterable[int], edges: Iterable[tuple[int, int]], start: int) -> set[int]:
    adj: dict[int, set[int]] = {i: set() for i in ids}
    for a, b in edges:
        if a in adj and b in adj:
            adj[a].add(b)
            adj[b].add(a)
    seen = {start}
    todo = deque([start])
    while todo:
        for nxt in adj[todo.popleft()]:
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return seen


def validate(network: Network) -> ValidationReport:
    """Collect every invariant violation (errors) and soft findings (warnings)."""
    rep = ValidationReport()
    err, warn = rep.errors.append, rep.warnings.append

    if not network.s_base > 0:
        err(f"s_base must be positive, got {network.s_base}")

    ids = [b.id for b in network.buses]
    seen: set[int] = set()
    for i in ids:
        if i in seen:
            err(f"duplicate bus id {i}")
        seen.add(i)
    for b in network.buses:
        if b.id <= 0:
            err(f"bus {b.id}: id must be a positive integer")
        if b.kind in (BusKind.SLACK, BusKind.PV) and not b.v_setpoint > 0:
            err(f"bus {b.id}: voltage setpoint must be positive")
        if b.q_gen_min is not None and b.q_gen_max is not None and b.q_gen_min > b.q_gen_max:
            err(f"bus {b.id}: q_gen_min {b.q_gen_min} exceeds q_gen_max {b.q_gen_max}")
        if b.base_kv is not None and not b.base_kv > 0:
            err(f"bus {b.id}: base_kv must be positive")
        values = [b.v_setpoint, b.angle_setpoint, b.p_gen, b.q_gen, b.p_load, b.q_load]
        if not all(math.isfinite(v) for v in values):
            err(f"bus {b.id}: non-finite value")

    slacks = [b.id for b in network.buses if b.kind is BusKind.SLACK]
    if len(slacks) == 0:
        err("no Slack bus")
    elif len(slacks) > 1:
        err("more than one Slack bus: " + ", ".join(str(i) for i in slacks))

    keys: set[tuple[int, int, int]] = set()
    for br in network.branches:
        tag = f"branch {br.from_bus}-{br.to_bus} (circuit {br.circuit})"
        for end in (br.from_bus, br.to_bus):
            if end not in seen:
                err(f"{tag}: unresolved endpoint {end}")
        if br.from_bus == br.to_bus:
            err(f"{tag}: from_bus equals to_bus")
        if br.x == 0:
            err(f"{tag}: series reactance is zero")
        if not 0.5 <= br.tap <= 1.5:
            err(f"{tag}: tap {br.tap} outside [0.5, 1.5]")
        if br.kind is BranchKind.LINE and br.tap != 1.0:
            err(f"{tag}: lines cannot carry an off-nominal tap")
        if br.mva_limit < 0:
            err(f"{tag}: negative mva_limit")
        elif br.mva_limit == 0:
            warn(f"{tag}: zero mva_limit (loading not reported)")
        if br.key in keys:
            err(f"{tag}: duplicate branch (same from, to, circuit)")
        keys.add(br.key)

    for sh in network.shunts:
        if sh.bus not in seen:
            err(f"shunt at bus {sh.bus}: unresolved bus")

    if network.sequence is not None:
        for g in network.sequence.generators:
            if g.bus not in seen:
                err(f"sequence data for generator at bus {g.bus}: unresolved bus")
            if g.grounded and g.z_neutral.real < 0:
                err(f"generator at bus {g.bus}: negative neutral resistance")

    if slacks and not rep.errors:
        edges = [(br.from_bus, br.to_bus) for br in network.active_branches]
        reach = _reachable(ids, edges, slacks[0])
        for i in ids:
            if i not in reach:
                warn(f"bus {i} disconnected")
    return rep


def check(network: Network) -> Network:
    """Return ``network`` or raise :class:`ValidationError` with every error."""
    rep = validate(network)
    if rep.errors:
        raise ValidationError(rep.errors)
    return network


# --- JSON case files ----------------------------------------------------------

_BUS_KEYS = {
    "id", "kind", "v_setpoint", "angle_setpoint", "p_gen", "q_gen", "p_load", "q_load",
    "q_gen_min", "q_gen_max", "base_kv",
}
_BRANCH_KEYS = {
    "from_bus", "to_bus", "kind", "r", "x", "g_shunt", "b_charging", "tap", "phase_shift",
    "mva_limit", "in_service", "circuit", "r0", "x0", "b0_charging", "zero_seq_path",
}
_SHUNT_KEYS = {"bus", "q_nominal", "in_service"}
_GEN_KEYS = {"bus", "x_sub", "x_neg", "x_zero", "z_neutral", "grounded"}
_TOP_KEYS = {"name", "notes", "s_base_mva", "buses", "branches", "shunts", "sequence"}


def _num(value: Any, path: str, *, optional: bool = False) -> float | None:
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", path)
    return float(value)


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"expected an integer, got {value!r}", path)
    return value


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ParseError(f"expected true/false, got {value!r}", path)
    return value


def _enum(cls, value: Any, path: str):
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ParseError(f"expected one of {allowed}, got {value!r}", path) from None


def _complex(value: Any, path: str) -> complex:
    if isinstance(value, list) and len(value) == 2:
        return complex(_num(value[0], path + "[0]"), _num(value[1], path + "[1]"))
    return complex(_num(value, path))


def _obj(value: Any, path: str, allowed: set[str], required: Iterable[str] = ()) -> dict:
    if not isinstance(value, dict):
        raise ParseError("expected an object", path)
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise ParseError(f"unknown key(s) {', '.join(unknown)}", path)
    for key in required:
        if key not in value:
            raise ParseError("missing required key", f"{path}.{key}" if path else key)
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ParseError("expected a list", path)
    return value


def _parse_bus(d: dict, path: str) -> Bus:
    _obj(d, path, _BUS_KEYS, ("id", "kind"))
    kw: dict[str, Any] = {"id": _int(d["id"], f"{path}.id"), "kind": _enum(BusKind, d["kind"], f"{path}.kind")}
    for key in ("v_setpoint", "p_gen", "q_gen", "p_load", "q_load"):
        if key in d:
            kw[key] = _num(d[key], f"{path}.{key}")
    if "angle_setpoint" in d:
        kw["angle_setpoint"] = math.radians(_num(d["angle_setpoint"], f"{path}.angle_setpoint"))
    for key in ("q_gen_min", "q_gen_max", "base_kv"):
        if key in d:
            kw[key] = _num(d[key], f"{path}.{key}", optional=True)
    return Bus(**kw)


def _parse_branch(d: dict, path: str) -> Branch:
    _obj(d, path, _BRANCH_KEYS, ("from_bus", "to_bus", "r", "x"))
    kw: dict[str, Any] = {
        "from_bus": _int(d["from_bus"], f"{path}.from_bus"),
        "to_bus": _int(d["to_bus"], f"{path}.to_bus"),
    }
    if "kind" in d:
        kw["kind"] = _enum(BranchKind, d["kind"], f"{path}.kind")
    for key in ("r", "x", "g_shunt", "b_charging", "tap", "mva_limit"):
        if key in d:
            kw[key] = _num(d[key], f"{path}.{key}")
    if "phase_shift" in d:
        kw["phase_shift"] = math.radians(_num(d["phase_shift"], f"{path}.phase_shift"))
    for key in ("r0", "x0", "b0_charging"):
        if key in d:
            kw[key] = _num(d[key], f"{path}.{key}", optional=True)
    if "in_service" in d:
        kw["in_service"] = _bool(d["in_service"], f"{path}.in_service")
    if "circuit" in d:
        kw["circuit"] = _int(d["circuit"], f"{path}.circuit")
    if "zero_seq_path" in d:
        kw["zero_seq_path"] = _enum(ZeroSeqPath, d["zero_seq_path"], f"{path}.zero_seq_path")
    return Branch(**kw)


def _parse_shunt(d: dict, path: str) -> ShuntDevice:
    _obj(d, path, _SHUNT_KEYS, ("bus", "q_nominal"))
    return ShuntDevice(
        bus=_int(d["bus"], f"{path}.bus"),
        q_nominal=_num(d["q_nominal"], f"{path}.q_nominal"),
        in_service=_bool(d.get("in_service", True), f"{path}.in_service"),
    )


def _parse_generator(d: dict, path: str) -> GeneratorSequence:
    _obj(d, path, _GEN_KEYS, ("bus", "x_sub", "x_neg", "x_zero"))
    return GeneratorSequence(
        bus=_int(d["bus"], f"{path}.bus"),
        x_sub=_num(d["x_sub"], f"{path}.x_sub"),
        x_neg=_num(d["x_neg"], f"{path}.x_neg"),
        x_zero=_num(d["x_zero"], f"{path}.x_zero"),
        z_neutral=_complex(d.get("z_neutral", 0.0), f"{path}.z_neutral"),
        grounded=_bool(d.get("grounded", True), f"{path}.grounded"),
    )


def network_from_dict(doc: Any, *, strict: bool = True) -> Network:
    """Build a Network from an already-decoded case document.

    With ``strict`` (the default) hard invariant violations raise
    :class:`ValidationError`.
    """
    _obj(doc, "", _TOP_KEYS, ("s_base_mva", "buses"))
    buses = [_parse_bus(b, f"buses[{i}]") for i, b in enumerate(_list(doc["buses"], "buses"))]
    branches = [
        _parse_branch(b, f"branches[{i}]") for i, b in enumerate(_list(doc.get("branches", []), "branches"))
    ]
    shunts = [_parse_shunt(s, f"shunts[{i}]") for i, s in enumerate(_list(doc.get("shunts", []), "shunts"))]
    sequence = None
    if "sequence" in doc:
        seq = _obj(doc["sequence"], "sequence", {"generators"})
        gens = _list(seq.get("generators", []), "sequence.generators")
        sequence = SequenceData(tuple(_parse_generator(g, f"sequence.generators[{i}]") for i, g in enumerate(gens)))
    notes = doc.get("notes", [])
    if not isinstance(notes, list) or not all(isinstance(n, str) for n in notes):
        raise ParseError("expected a list of strings", "notes")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ParseError("expected a string", "name")
    net = Network(
        s_base=_num(doc["s_base_mva"], "s_base_mva"),
        buses=tuple(buses),
        branches=tuple(branches),
        shunts=tuple(shunts),
        name=name,
        sequence=sequence,
        notes=tuple(notes),
    )
    return check(net) if strict else net


def parse_case(text: str, *, strict: bool = True) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    return network_from_dict(doc, strict=strict)


def network_to_dict(network: Network) -> dict:
    def bus(b: Bus) -> dict:
        return {
            "id": b.id,
            "kind": b.kind.value,
            "v_setpoint": b.v_setpoint,
            "angle_setpoint": math.degrees(b.angle_setpoint),
            "p_gen": b.p_gen,
            "q_gen": b.q_gen,
            "p_load": b.p_load,
            "q_load": b.q_load,
            "q_gen_min": b.q_gen_min,
            "q_gen_max": b.q_gen_max,
            "base_kv": b.base_kv,
        }

    def branch(br: Branch) -> dict:
        return {
            "from_bus": br.from_bus,
            "to_bus": br.to_bus,
            "kind": br.kind.value,
            "circuit": br.circuit,
            "r": br.r,
            "x": br.x,
            "g_shunt": br.g_shunt,
            "b_charging": br.b_charging,
            "tap": br.tap,
            "phase_shift": math.degrees(br.phase_shift),
            "mva_limit": br.mva_limit,
            "in_service": br.in_service,
            "r0": br.r0,
            "x0": br.x0,
            "b0_charging": br.b0_charging,
            "zero_seq_path": br.zero_seq_path.value,
        }

    doc: dict[str, Any] = {
        "name": network.name,
        "s_base_mva": network.s_base,
        "buses": [bus(b) for b in network.buses],
        "branches": [branch(br) for br in network.branches],
        "shunts": [
            {"bus": s.bus, "q_nominal": s.q_nominal, "in_service": s.in_service} for s in network.shunts
        ],
    }
    if network.notes:
        doc["notes"] = list(network.notes)
    if network.sequence is not None:
        doc["sequence"] = {
            "generators": [
                {
                    "bus": g.bus,
                    "x_sub": g.x_sub,
                    "x_neg": g.x_neg,
                    "x_zero": g.x_zero,
                    "z_neutral": [g.z_neutral.real, g.z_neutral.imag],
                    "grounded": g.grounded,
                }
                for g in network.sequence.generators
            ]
        }
    return doc


def dump_case(network: Network) -> str:
    return json.dumps(network_to_dict(network), indent=2) + "\n"


EMBEDDED = {"glover5": "glover5.json"}


def _embedded_text(name: str) -> str:
    try:
        fname = EMBEDDED[name]
    except KeyError:
        raise ParseError(f"no embedded case named {name!r}") from None
    return resources.files("gridflow.data").joinpath(fname).read_text(encoding="utf-8")


def load_case(source: str | Path) -> Network:
    """Load a case file, or an embedded case addressed as ``@name``."""
    s = str(source)
    if s.startswith("@"):
        return parse_case(_embedded_text(s[1:]))
    return parse_case(Path(s).read_text(encoding="utf-8"))


def glover5() -> Network:
    """The embedded 5-bus, 2-generator study case."""
    return load_case("@glover5")


def base_current_amps(network: Network, bus: int) -> float:
    """Base current (A) at ``bus``: S_base / (sqrt(3) * V_base,LL)."""
    b = network.bus(bus)
    if b.base_kv is None or not b.base_kv > 0:
        raise ValueError(f"bus {bus} has no positive base_kv")
    return network.s_base * 1e6 / (math.sqrt(3.0) * b.base_kv * 1e3)

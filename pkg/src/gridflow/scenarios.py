"""What-if studies: declarative network edits, re-solves and parameter sweeps."""
from __future__ import annotations

import dataclasses
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .analysis import branch_flows, summarize
from .network import (
    Branch,
    BranchKind,
    Network,
    ParseError,
    ShuntDevice,
    UnknownBus,
    load_case,
    network_from_dict,
    network_to_dict,
    _parse_branch,
)
from .powerflow import NonConvergence, PowerFlowSolution, SolveOptions, solve_power_flow

__all__ = [
    "ActionRejected",
    "RemoveBranch",
    "AddBranch",
    "AddShunt",
    "SetShuntQ",
    "SetTap",
    "ScaleLoad",
    "SetLoad",
    "ScenarioReport",
    "apply_actions",
    "run_scenario",
    "shunt_sweep",
    "tap_sweep",
    "load_shed_sweep",
    "action_from_dict",
    "load_scenario",
    "run_scenario_file",
]


class ActionRejected(ValueError):
    pass


def _find_branch(net: Network, a: int, b: int, circuit: int) -> int:
    for i, br in enumerate(net.branches):
        if br.connects(a, b) and br.circuit == circuit:
            return i
    raise ActionRejected(f"no branch {a}-{b} circuit {circuit}")


def _require_bus(net: Network, bus: int) -> None:
    try:
        net.bus(bus)
    except UnknownBus:
        raise ActionRejected(f"bus {bus} does not exist") from None


@dataclass(frozen=True)
class RemoveBranch:
    from_bus: int
    to_bus: int
    circuit: int = 1

    def apply(self, net: Network) -> Network:
        i = _find_branch(net, self.from_bus, self.to_bus, self.circuit)
        return net.replace(branches=net.branches[:i] + net.branches[i + 1:])


@dataclass(frozen=True)
class AddBranch:
    branch: Branch

    def apply(self, net: Network) -> Network:
        br = self.branch
        for end in (br.from_bus, br.to_bus):
            _require_bus(net, end)
        if any(b.connects(br.from_bus, br.to_bus) and b.circuit == br.circuit for b in net.branches):
            raise ActionRejected(f"branch {br.label} already exists; use another circuit number")
        return net.replace(branches=net.branches + (br,))


@dataclass(frozen=True)
class AddShunt:
    shunt: ShuntDevice

    def apply(self, net: Network) -> Network:
        _require_bus(net, self.shunt.bus)
        return net.replace(shunts=net.shunts + (self.shunt,))


@dataclass(frozen=True)
class SetShuntQ:
    bus: int
    q_nominal: float

    def apply(self, net: Network) -> Network:
        hits = [i for i, s in enumerate(net.shunts) if s.bus == self.bus]
        if not hits:
            raise ActionRejected(f"no shunt at bus {self.bus}")
        shunts = list(net.shunts)
        for i in hits:
            shunts[i] = dataclasses.replace(shunts[i], q_nominal=self.q_nominal)
        return net.replace(shunts=tuple(shunts))


@dataclass(frozen=True)
class SetTap:
    from_bus: int
    to_bus: int
    ratio: float
    circuit: int = 1

    def apply(self, net: Network) -> Network:
        i = _find_branch(net, self.from_bus, self.to_bus, self.circuit)
        br = net.branches[i]
        if br.kind is not BranchKind.TRANSFORMER:
            raise ActionRejected(f"branch {br.label} is a line; taps apply to transformers only")
        if not 0.5 <= self.ratio <= 1.5:
            raise ActionRejected(f"tap {self.ratio} outside [0.5, 1.5]")
        branches = list(net.branches)
        branches[i] = dataclasses.replace(br, tap=float(self.ratio))
        return net.replace(branches=tuple(branches))


@dataclass(frozen=True)
class ScaleLoad:
    bus: int
    factor: float

    def apply(self, net: Network) -> Network:
        _require_bus(net, self.bus)
        if self.factor < 0:
            raise ActionRejected("load scale factor must be non-negative")
        buses = tuple(
            dataclasses.replace(b, p_load=b.p_load * self.factor, q_load=b.q_load * self.factor)
            if b.id == self.bus
            else b
            for b in net.buses
        )
        return net.replace(buses=buses)


@dataclass(frozen=True)
class SetLoad:
    bus: int
    p: float
    q: float

    def apply(self, net: Network) -> Network:
        _require_bus(net, self.bus)
        buses = tuple(
            dataclasses.replace(b, p_load=self.p, q_load=self.q) if b.id == self.bus else b for b in net.buses
        )
        return net.replace(buses=buses)


Action = RemoveBranch | AddBranch | AddShunt | SetShuntQ | SetTap | ScaleLoad | SetLoad


def apply_actions(base: Network, actions: Iterable[Action]) -> Network:
    """Replay ``actions`` in order on a copy of ``base``."""
    net = base
    for act in actions:
        net = act.apply(net)
    return net


# --- reports -------------------------------------------------------------------


@dataclass
class ScenarioReport:
    name: str
    actions: tuple[Action, ...]
    network: Network
    solution: PowerFlowSolution | None = None
    failure: str | None = None
    failure_trace: list[float] = field(default_factory=list)
    total_loss_mw: float | None = None
    loading_pct: dict[str, float | None] = field(default_factory=dict)
    dv: dict[int, float] | None = None
    dloss_mw: float | None = None
    dloading_pct: dict[str, float] | None = None

    @property
    def converged(self) -> bool:
        return self.solution is not None

    def v(self, bus: int) -> float | None:
        return None if self.solution is None else self.solution.v(bus)

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "name": self.name,
            "actions": [action_to_dict(a) for a in self.actions],
            "converged": self.converged,
        }
        if self.solution is None:
            d["failure"] = self.failure
            d["residual_trace"] = self.failure_trace
            return d
        sol = self.solution
        d["iterations"] = sol.iterations
        d["buses"] = [
            {"id": b, "v_pu": float(vm), "angle_deg": float(np.degrees(va))}
            for b, vm, va in zip(sol.bus_ids, sol.v_mag, sol.angle)
        ]
        d["total_loss_mw"] = self.total_loss_mw
        d["loading_pct"] = self.loading_pct
        if self.dv is not None:
            d["delta"] = {
                "v_pu": {str(k): v for k, v in self.dv.items()},
                "loss_mw": self.dloss_mw,
                "loading_pct": self.dloading_pct,
            }
        return d


def _loading(net: Network, sol: PowerFlowSolution) -> dict[str, float | None]:
    return {f.branch.label: f.loading_pct for f in branch_flows(net, sol)}


def _try_solve(net: Network, options: SolveOptions | None) -> tuple[PowerFlowSolution | None, NonConvergence | None]:
    try:
        return solve_power_flow(net, options), None
    except NonConvergence as exc:
        return None, exc


def run_scenario(
    base: Network,
    actions: Sequence[Action] = (),
    options: SolveOptions | None = None,
    *,
    name: str = "",
    baseline: PowerFlowSolution | None = None,
) -> ScenarioReport:
    """Apply ``actions`` to ``base``, solve, and diff against the base solve.

    Non-convergence is recorded in the report rather than raised.
    ``baseline`` skips re-solving the base case when the caller already has it.
    """
    net = apply_actions(base, actions)
    rep = ScenarioReport(name=name, actions=tuple(actions), network=net)
    sol, exc = _try_solve(net, options)
    if sol is None:
        rep.failure = str(exc)
        rep.failure_trace = exc.trace
        return rep
    rep.solution = sol
    rep.total_loss_mw = summarize(net, sol).total_loss_mw
    rep.loading_pct = _loading(net, sol)

    if baseline is None:
        baseline, _ = _try_solve(base, options)
    if baseline is not None:
        base_loss = summarize(base, baseline).total_loss_mw
        base_loading = _loading(base, baseline)
        rep.dv = {b: sol.v(b) - baseline.v(b) for b in sol.bus_ids if b in baseline.bus_ids}
        rep.dloss_mw = rep.total_loss_mw - base_loss
        rep.dloading_pct = {
            k: rep.loading_pct[k] - base_loading[k]
            for k in rep.loading_pct
            if k in base_loading and rep.loading_pct[k] is not None and base_loading[k] is not None
        }
    return rep


def _map(fn: Callable, items: list, parallel: int) -> list:
    if parallel and parallel > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# --- sweeps --------------------------------------------------------------------


def shunt_sweep(
    base: Network,
    bus: int,
    q_values: Iterable[float],
    options: SolveOptions | None = None,
    *,
    parallel: int = 0,
) -> list[tuple[float, ScenarioReport]]:
    """One scenario per shunt size (pu) added at ``bus``; q == 0 adds nothing."""
    _require_bus(base, bus)
    baseline, _ = _try_solve(base, options)
    qs = sorted(float(q) for q in q_values)

    def point(q: float) -> tuple[float, ScenarioReport]:
        acts = () if q == 0 else (AddShunt(ShuntDevice(bus, q)),)
        return q, run_scenario(base, acts, options, name=f"shunt {q:g} pu at bus {bus}", baseline=baseline)

    return _map(point, qs, parallel)


def grid_values(lo: float, hi: float, step: float) -> list[float]:
    """``lo, lo+step, ...`` up to ``hi`` inclusive (just ``lo`` if step > hi-lo)."""
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 10) for k in range(max(n, 0) + 1)]


@dataclass(frozen=True)
class TapPoint:
    taps: tuple[float, ...]
    converged: bool
    v_target: float | None
    loss_mw: float | None


@dataclass
class TapSweepResult:
    transformers: tuple[tuple[int, int, int], ...]
    target_bus: int
    target_v: float
    objective: str
    grid: list[TapPoint]
    best: TapPoint | None
    best_report: ScenarioReport | None


def _tap_actions(transformers, taps) -> tuple[SetTap, ...]:
    return tuple(SetTap(f, t, a, c) for (f, t, c), a in zip(transformers, taps))


def tap_sweep(
    base: Network,
    transformers: Sequence[Sequence[int]],
    tap_range: tuple[float, float] = (0.85, 1.15),
    step: float = 0.01,
    *,
    target_bus: int,
    target_v: float = 0.95,
    objective: str = "min_adjustment",
    options: SolveOptions | None = None,
    parallel: int = 0,
) -> TapSweepResult:
    """Exhaustive grid over tap combinations of the given transformers.

    Feasible points converge with ``v[target_bus] >= target_v``. Among them,
    ``objective="min_loss"`` picks the lowest total loss; the default
    ``"min_adjustment"`` picks the smallest move away from nominal (largest
    single deviation, then summed deviation, then loss).
    """
    if objective not in ("min_adjustment", "min_loss"):
        raise ValueError(f"unknown objective {objective!r}")
    lo, hi = tap_range
    if not (0.5 <= lo <= hi <= 1.5):
        raise ValueError("tap range must lie within [0.5, 1.5]")
    xfmrs = tuple((int(t[0]), int(t[1]), int(t[2]) if len(t) > 2 else 1) for t in transformers)
    for f, t, c in xfmrs:
        br = base.branches[_find_branch(base, f, t, c)]
        if br.kind is not BranchKind.TRANSFORMER:
            raise ActionRejected(f"branch {br.label} is not a transformer")
    _require_bus(base, target_bus)
    values = grid_values(lo, hi, step)
    combos = list(itertools.product(values, repeat=len(xfmrs)))

    def point(taps) -> TapPoint:
        net = apply_actions(base, _tap_actions(xfmrs, taps))
        sol, _ = _try_solve(net, options)
        if sol is None:
            return TapPoint(tuple(taps), False, None, None)
        return TapPoint(tuple(taps), True, sol.v(target_bus), summarize(net, sol).total_loss_mw)

    grid = _map(point, combos, parallel)
    feasible = [p for p in grid if p.converged and p.v_target >= target_v]
    if objective == "min_loss":
        key = lambda p: (p.loss_mw, p.taps)  # noqa: E731
    else:
        key = lambda p: (  # noqa: E731
            round(max(abs(a - 1.0) for a in p.taps), 9),
            round(sum(abs(a - 1.0) for a in p.taps), 9),
            p.loss_mw,
            p.taps,
        )
    best = min(feasible, key=key) if feasible else None
    best_report = None
    if best is not None:
        best_report = run_scenario(base, _tap_actions(xfmrs, best.taps), options, name="tap sweep best")
    return TapSweepResult(xfmrs, target_bus, target_v, objective, grid, best, best_report)


@dataclass
class LoadShedResult:
    bus: int
    target_v: float
    step_pct: float
    min_shed_pct: float | None
    points: list[tuple[float, ScenarioReport]]

    @property
    def feasible(self) -> bool:
        return self.min_shed_pct is not None


def load_shed_sweep(
    base: Network,
    bus: int,
    target_v: float = 0.95,
    step_pct: float = 1.0,
    options: SolveOptions | None = None,
) -> LoadShedResult:
    """Smallest shed percentage (multiple of ``step_pct``) giving v >= target at ``bus``.

    P and Q at the bus are scaled together. A coarse pass at ten steps
    brackets the answer, bisection refines it; non-converged points count as
    not meeting the target. ``min_shed_pct`` is None when even 100 % fails.
    """
    b = base.bus(bus)
    if b.p_load == 0 and b.q_load == 0:
        raise ActionRejected(f"bus {bus} carries no load")
    n = int(round(100.0 / step_pct))
    cache: dict[int, ScenarioReport] = {}
    baseline, _ = _try_solve(base, options)

    def rep(k: int) -> ScenarioReport:
        if k not in cache:
            pct = min(k * step_pct, 100.0)
            acts = () if k == 0 else (ScaleLoad(bus, 1.0 - pct / 100.0),)
            cache[k] = run_scenario(base, acts, options, name=f"shed {pct:g}% at bus {bus}", baseline=baseline)
        return cache[k]

    def ok(k: int) -> bool:
        r = rep(k)
        return r.converged and r.v(bus) >= target_v

    result: int | None = None
    if ok(0):
        result = 0
    else:
        coarse = max(1, n // 10)
        prev = 0
        k = coarse
        while True:
            k = min(k, n)
            if ok(k):
                lo, hi = prev, k
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if ok(mid):
                        hi = mid
                    else:
                        lo = mid
                result = hi
                break
            if k == n:
                break
            prev = k
            k += coarse
    points = sorted(((min(k * step_pct, 100.0), r) for k, r in cache.items()), key=lambda t: t[0])
    return LoadShedResult(bus, target_v, step_pct, None if result is None else min(result * step_pct, 100.0), points)


# --- scenario files ------------------------------------------------------------

_ACTIONS = {
    "RemoveBranch": RemoveBranch,
    "AddBranch": AddBranch,
    "AddShunt": AddShunt,
    "SetShuntQ": SetShuntQ,
    "SetTap": SetTap,
    "ScaleLoad": ScaleLoad,
    "SetLoad": SetLoad,
}


def action_from_dict(d: dict, path: str = "action") -> Action:
    if not isinstance(d, dict) or "type" not in d:
        raise ParseError("expected an object with a 'type' key", path)
    kind = d["type"]
    body = {k: v for k, v in d.items() if k != "type"}
    try:
        if kind == "AddBranch":
            return AddBranch(_parse_branch(body.get("branch", body), f"{path}.branch"))
        if kind == "AddShunt":
            return AddShunt(ShuntDevice(int(body["bus"]), float(body["q_nominal"]), bool(body.get("in_service", True))))
        if kind in ("RemoveBranch", "SetTap"):
            body.setdefault("circuit", 1)
        cls = _ACTIONS[kind]
    except KeyError as exc:
        raise ParseError(f"unknown action or missing field {exc}", path) from None
    try:
        return cls(**body)
    except TypeError as exc:
        raise ParseError(str(exc), path) from None


def action_to_dict(a: Action) -> dict:
    name = type(a).__name__
    if isinstance(a, AddBranch):
        doc = network_to_dict(Network(1.0, (), (a.branch,)))["branches"][0]
        return {"type": name, "branch": doc}
    if isinstance(a, AddShunt):
        return {"type": name, **dataclasses.asdict(a.shunt)}
    return {"type": name, **dataclasses.asdict(a)}


_SCENARIO_KEYS = {"base_case", "name", "actions", "sweep", "options"}


@dataclass
class ScenarioFile:
    name: str
    base: Network
    actions: tuple[Action, ...]
    sweep: dict | None
    options: SolveOptions


def load_scenario(path: str | Path) -> ScenarioFile:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ParseError("scenario must be a JSON object")
    unknown = set(doc) - _SCENARIO_KEYS
    if unknown:
        raise ParseError(f"unknown key(s) {', '.join(sorted(unknown))}")
    src = doc.get("base_case", "@glover5")
    if isinstance(src, dict):
        base = network_from_dict(src)
    elif str(src).startswith("@"):
        base = load_case(src)
    else:
        base = load_case(path.parent / src)
    acts = tuple(action_from_dict(a, f"actions[{i}]") for i, a in enumerate(doc.get("actions", [])))
    opts = SolveOptions(**doc.get("options", {}))
    return ScenarioFile(doc.get("name", path.stem), base, acts, doc.get("sweep"), opts)


def run_scenario_file(sc: ScenarioFile, parallel: int = 0) -> dict:
    """Run a loaded scenario file; returns a JSON-ready document with ``ok``."""
    if not sc.sweep:
        rep = run_scenario(sc.base, sc.actions, sc.options, name=sc.name)
        return {"kind": "scenario", "ok": rep.converged, "report": rep.to_dict()}

    start = apply_actions(sc.base, sc.actions)
    sw = dict(sc.sweep)
    kind = sw.pop("kind", None)
    if kind == "shunt":
        pts = shunt_sweep(start, int(sw["bus"]), sw["q_values"], sc.options, parallel=parallel)
        return {
            "kind": "shunt_sweep",
            "name": sc.name,
            "ok": True,
            "points": [{"q_nominal": q, "v_pu": r.v(int(sw["bus"])), "report": r.to_dict()} for q, r in pts],
        }
    if kind == "tap":
        res = tap_sweep(
            start,
            sw["transformers"],
            tuple(sw.get("range", (0.85, 1.15))),
            float(sw.get("step", 0.01)),
            target_bus=int(sw["target_bus"]),
            target_v=float(sw.get("target_v", 0.95)),
            objective=sw.get("objective", "min_adjustment"),
            options=sc.options,
            parallel=parallel,
        )
        return {
            "kind": "tap_sweep",
            "name": sc.name,
            "ok": res.best is not None,
            "best": None if res.best is None else dataclasses.asdict(res.best),
            "best_report": None if res.best_report is None else res.best_report.to_dict(),
            "feasible_points": sum(1 for p in res.grid if p.converged and p.v_target >= res.target_v),
            "grid_points": len(res.grid),
        }
    if kind == "load_shed":
        res = load_shed_sweep(
            start, int(sw["bus"]), float(sw.get("target_v", 0.95)), float(sw.get("step_pct", 1.0)), sc.options
        )
        return {
            "kind": "load_shed",
            "name": sc.name,
            "ok": res.feasible,
            "min_shed_pct": res.min_shed_pct,
            "status": "ok" if res.feasible else "Infeasible",
            "points": [
                {"shed_pct": pct, "converged": r.converged, "v_pu": r.v(res.bus)} for pct, r in res.points
            ],
        }
    raise ParseError(f"unknown sweep kind {kind!r}", "sweep.kind")

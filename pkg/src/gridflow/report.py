"""Text, CSV and JSON renderings of solutions, Y-bus matrices and faults.

Tables round for reading (degrees, MW/Mvar, 2-5 decimals); CSV and JSON keep
full float precision. JSON is always emitted with sorted keys so the same
input gives the same bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .analysis import BranchFlow, SystemSummary, branch_flows, summarize
from .network import BusKind, Network
from .powerflow import PowerFlowSolution
from .ybus import AdmittanceMatrix

FORMATS = ("table", "csv", "json")


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0 else x


@dataclass
class PowerFlowReport:
    network: Network
    solution: PowerFlowSolution
    flows: list[BranchFlow]
    summary: SystemSummary


def make_report(network: Network, solution: PowerFlowSolution, v_min: float = 0.95, v_max: float = 1.05) -> PowerFlowReport:
    flows = branch_flows(network, solution)
    return PowerFlowReport(network, solution, flows, summarize(network, solution, v_min, v_max, flows))


def bus_rows(network: Network, sol: PowerFlowSolution) -> list[dict[str, Any]]:
    sb = network.s_base
    kinds = dict(zip(sol.bus_ids, sol.final_kinds)) if sol.final_kinds else {}
    shunt_q: dict[int, float] = {}
    for sh in network.shunts:
        if sh.in_service:
            vm = sol.v(sh.bus)
            shunt_q[sh.bus] = shunt_q.get(sh.bus, 0.0) + sh.q_nominal * vm * vm * sb
    rows = []
    for b in network.buses:
        i = sol.index(b.id)
        if b.kind is BusKind.PQ:
            pg, qg = b.p_gen, b.q_gen
        else:
            pg = sol.p_injection[i] + b.p_load
            qg = sol.q_injection[i] + b.q_load
        rows.append(
            {
                "id": b.id,
                "kind": b.kind.value,
                "solved_as": kinds.get(b.id, b.kind).value,
                "nom_kv": b.base_kv,
                "v_pu": _clean(sol.v_mag[i]),
                "v_kv": None if b.base_kv is None else _clean(sol.v_mag[i] * b.base_kv),
                "angle_deg": _clean(math.degrees(sol.angle[i])),
                "load_mw": _clean(b.p_load * sb),
                "load_mvar": _clean(b.q_load * sb),
                "gen_mw": _clean(pg * sb),
                "gen_mvar": _clean(qg * sb),
                "shunt_mvar": _clean(shunt_q.get(b.id, 0.0)),
            }
        )
    return rows


def branch_rows(network: Network, flows: list[BranchFlow]) -> list[dict[str, Any]]:
    sb = network.s_base
    rows = []
    for f in flows:
        br = f.branch
        rows.append(
            {
                "from_bus": br.from_bus,
                "to_bus": br.to_bus,
                "circuit": br.circuit,
                "kind": br.kind.value,
                "tap": br.tap,
                "mw_from": _clean(f.s_from.real * sb),
                "mvar_from": _clean(f.s_from.imag * sb),
                "mva_from": _clean(abs(f.s_from) * sb),
                "mw_to": _clean(f.s_to.real * sb),
                "mvar_to": _clean(f.s_to.imag * sb),
                "mva_limit": _clean(br.mva_limit * sb),
                "loading_pct": None if f.loading_pct is None else _clean(f.loading_pct),
                "mw_loss": _clean(f.loss.real * sb),
                "mvar_loss": _clean(f.loss.imag * sb),
            }
        )
    return rows


def solution_doc(report: PowerFlowReport) -> dict[str, Any]:
    sol, net, s = report.solution, report.network, report.summary
    return {
        "case": net.name,
        "s_base_mva": net.s_base,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "max_mismatch_trace": [float(x) for x in sol.max_mismatch_trace],
        "limit_switches": [
            {"bus": e.bus, "iteration": e.iteration, "direction": e.direction} for e in sol.limit_switches
        ],
        "buses": bus_rows(net, sol),
        "branches": branch_rows(net, report.flows),
        "totals": {
            "gen_mw": _clean(s.total_gen.real * net.s_base),
            "gen_mvar": _clean(s.total_gen.imag * net.s_base),
            "load_mw": _clean(s.total_load.real * net.s_base),
            "load_mvar": _clean(s.total_load.imag * net.s_base),
            "loss_mw": _clean(s.total_loss.real * net.s_base),
            "loss_mvar": _clean(s.total_loss.imag * net.s_base),
            "shunt_mvar": _clean(s.shunt_delivered * net.s_base),
        },
        "violations": [
            {"bus": v.bus, "v_pu": v.v_mag, "bound": v.bound, "limit": v.limit} for v in s.violations
        ],
    }


def _fmt(v: Any, spec: str) -> str:
    if v is None:
        return "-"
    return format(v, spec)


def bus_table(rows: list[dict[str, Any]]) -> str:
    head = f"{'Bus':>4} {'Type':>5} {'Nom kV':>8} {'PU Volt':>9} {'Volt kV':>9} {'Angle':>8} {'Load MW':>9} {'Load Mvar':>9} {'Gen MW':>9} {'Gen Mvar':>9} {'Shunt Mvar':>10}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['id']:>4} {r['solved_as']:>5} {_fmt(r['nom_kv'], '8.2f')} {r['v_pu']:9.5f} {_fmt(r['v_kv'], '9.3f')} "
            f"{r['angle_deg']:8.2f} {r['load_mw']:9.2f} {r['load_mvar']:9.2f} {r['gen_mw']:9.2f} "
            f"{r['gen_mvar']:9.2f} {r['shunt_mvar']:10.2f}"
        )
    return "\n".join(lines)


def branch_table(rows: list[dict[str, Any]]) -> str:
    head = f"{'From':>4} {'To':>4} {'Ckt':>3} {'Type':>11} {'Tap':>6} {'MW From':>9} {'Mvar From':>9} {'MVA From':>9} {'Lim MVA':>8} {'% Limit':>8} {'MW Loss':>8} {'Mvar Loss':>9}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['from_bus']:>4} {r['to_bus']:>4} {r['circuit']:>3} {r['kind']:>11} {r['tap']:6.3f} "
            f"{r['mw_from']:9.2f} {r['mvar_from']:9.2f} {r['mva_from']:9.2f} {r['mva_limit']:8.1f} "
            f"{_fmt(r['loading_pct'], '8.1f')} {r['mw_loss']:8.2f} {r['mvar_loss']:9.2f}"
        )
    return "\n".join(lines)


def violations_text(doc: dict[str, Any]) -> str:
    if not doc["violations"]:
        return "no voltage violations"
    return "\n".join(
        f"bus {v['bus']}: {v['v_pu']:.5f} pu {'below' if v['bound'] == 'low' else 'above'} {v['limit']:.2f}"
        for v in doc["violations"]
    )


def _csv(rows: list[dict[str, Any]]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def emit_report(report: PowerFlowReport, fmt: str = "table", *, branches: bool = True) -> str:
    doc = solution_doc(report)
    if fmt == "json":
        return dumps(doc)
    if fmt == "csv":
        out = _csv(doc["buses"])
        if branches:
            out += "\n" + _csv(doc["branches"])
        return out
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    t = doc["totals"]
    parts = [
        f"case {doc['case'] or '(unnamed)'}: converged in {doc['iterations']} iterations",
        "",
        bus_table(doc["buses"]),
    ]
    if branches:
        parts += ["", branch_table(doc["branches"])]
    parts += [
        "",
        f"generation {t['gen_mw']:.2f} MW {t['gen_mvar']:.2f} Mvar | load {t['load_mw']:.2f} MW "
        f"{t['load_mvar']:.2f} Mvar | losses {t['loss_mw']:.2f} MW {t['loss_mvar']:.2f} Mvar",
        violations_text(doc),
    ]
    if doc["limit_switches"]:
        parts.append(
            "limit switching: "
            + ", ".join(f"bus {e['bus']} {e['direction']} (iter {e['iteration']})" for e in doc["limit_switches"])
        )
    return "\n".join(parts) + "\n"


def ybus_table(y: AdmittanceMatrix) -> str:
    def cell(z: complex) -> str:
        if z == 0:
            return ""
        sign = "-" if z.imag < 0 else "+"
        return f"{z.real:.2f} {sign} j{abs(z.imag):.2f}"

    width = max(16, max((len(cell(complex(z))) for z in y.entries.flat), default=0) + 2)
    head = f"{'Bus':>4}" + "".join(f"{('Bus ' + str(b)):>{width}}" for b in y.bus_ids)
    lines = [head]
    for i, b in enumerate(y.bus_ids):
        lines.append(f"{b:>4}" + "".join(f"{cell(complex(z)):>{width}}" for z in y.entries[i]))
    return "\n".join(lines) + "\n"


def ybus_csv(y: AdmittanceMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row_bus", "col_bus", "g", "b"])
    for i, bi in enumerate(y.bus_ids):
        for j, bj in enumerate(y.bus_ids):
            z = complex(y.entries[i, j])
            if z != 0:
                w.writerow([bi, bj, repr(z.real), repr(z.imag)])
    return buf.getvalue()


def _cx(z: complex) -> list[float]:
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def fault_doc(result, breaker: float | None) -> dict[str, Any]:
    base = result.base_amps
    return {
        "bus": result.spec.bus,
        "type": result.spec.kind.value,
        "z_fault": _cx(result.spec.z_fault),
        "z012": [_cx(z) if np.isfinite(abs(z)) else None for z in result.z012],
        "i012_pu": [_cx(z) for z in result.i012],
        "i_abc_pu": [_cx(z) for z in result.i_abc],
        "i_abc_amps": None if base is None else [_clean(abs(z) * base) for z in result.i_abc],
        "v_abc_pu": [_cx(z) for z in result.v_abc],
        "ground_current_amps": None if base is None else _clean(abs(result.ground_current) * base),
        "reported_current_amps": None if base is None else _clean(result.reported_current_amps),
        "breaker_amps": breaker,
    }


def fault_table(docs: list[dict[str, Any]]) -> str:
    head = f"{'Bus':>4} {'Type':>5} {'|Ia| A':>10} {'|Ib| A':>10} {'|Ic| A':>10} {'3I0 A':>10} {'Reported A':>11} {'Breaker A':>10}"
    lines = [head, "-" * len(head)]
    for d in docs:
        ia, ib, ic = d["i_abc_amps"] or (None, None, None)
        lines.append(
            f"{d['bus']:>4} {d['type']:>5} {_fmt(ia, '10.2f')} {_fmt(ib, '10.2f')} {_fmt(ic, '10.2f')} "
            f"{_fmt(d['ground_current_amps'], '10.2f')} {_fmt(d['reported_current_amps'], '11.2f')} "
            f"{_fmt(d['breaker_amps'], '10.0f') if d['breaker_amps'] is not None else '      none'}"
        )
    return "\n".join(lines) + "\n"

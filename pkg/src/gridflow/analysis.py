"""Quantities derived from a converged power flow."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Branch, Network, ShuntDevice
from .powerflow import PowerFlowSolution
from .ybus import branch_admittances

__all__ = [
    "BranchFlow",
    "Violation",
    "SystemSummary",
    "branch_flows",
    "shunt_delivered_q",
    "voltage_report",
    "summarize",
]


@dataclass(frozen=True)
class BranchFlow:
    branch: Branch
    s_from: complex
    s_to: complex

    @property
    def loss(self) -> complex:
        return self.s_from + self.s_to

    @property
    def loading_pct(self) -> float | None:
        if self.branch.mva_limit <= 0:
            return None
        return 100.0 * max(abs(self.s_from), abs(self.s_to)) / self.branch.mva_limit


@dataclass(frozen=True)
class Violation:
    bus: int
    v_mag: float
    bound: str  # "low" | "high"
    limit: float


@dataclass(frozen=True)
class SystemSummary:
    """Totals in per unit; multiply by ``s_base`` for MW/Mvar."""

    s_base: float
    total_gen: complex
    total_load: complex
    total_loss: complex
    shunt_delivered: float
    violations: tuple[Violation, ...]

    @property
    def total_loss_mw(self) -> float:
        return self.total_loss.real * self.s_base

    @property
    def imbalance(self) -> complex:
        """gen - load - branch losses + shunt Mvar; zero for a consistent solve."""
        return self.total_gen - self.total_load - self.total_loss + 1j * self.shunt_delivered


def branch_flows(network: Network, solution: PowerFlowSolution) -> list[BranchFlow]:
    """Pi-model end flows of every in-service branch, using the Y-bus stamps."""
    v = solution.voltage
    idx = {b: i for i, b in enumerate(solution.bus_ids)}
    out = []
    for br in network.active_branches:
        yff, yft, ytf, ytt = branch_admittances(br)
        vf, vt = v[idx[br.from_bus]], v[idx[br.to_bus]]
        i_f = yff * vf + yft * vt
        i_t = ytf * vf + ytt * vt
        out.append(BranchFlow(br, complex(vf * np.conj(i_f)), complex(vt * np.conj(i_t))))
    return out


def shunt_delivered_q(shunt: ShuntDevice, v: float, s_base: float = 100.0) -> float:
    """Mvar delivered by a fixed shunt at voltage ``v`` pu (scales with v squared)."""
    if not v > 0:
        raise ValueError("voltage must be positive")
    return v * v * shunt.q_nominal * s_base


def voltage_report(solution: PowerFlowSolution, v_min: float = 0.95, v_max: float = 1.05) -> list[Violation]:
    out = []
    for bus, vm in zip(solution.bus_ids, solution.v_mag):
        if vm < v_min:
            out.append(Violation(bus, float(vm), "low", v_min))
        elif vm > v_max:
            out.append(Violation(bus, float(vm), "high", v_max))
    return out


def summarize(
    network: Network,
    solution: PowerFlowSolution,
    v_min: float = 0.95,
    v_max: float = 1.05,
    flows: list[BranchFlow] | None = None,
) -> SystemSummary:
    flows = flows if flows is not None else branch_flows(network, solution)
    load = sum((complex(b.p_load, b.q_load) for b in network.buses), 0j)
    inj = complex(solution.p_injection.sum(), solution.q_injection.sum())
    idx = {b: i for i, b in enumerate(solution.bus_ids)}
    shunt_q = sum(
        sh.q_nominal * solution.v_mag[idx[sh.bus]] ** 2 for sh in network.shunts if sh.in_service
    )
    return SystemSummary(
        s_base=network.s_base,
        total_gen=inj + load,
        total_load=load,
        total_loss=sum((f.loss for f in flows), 0j),
        shunt_delivered=float(shunt_q),
        violations=tuple(voltage_report(solution, v_min, v_max)),
    )

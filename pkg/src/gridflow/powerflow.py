"""Polar Newton-Raphson power flow with PV reactive-limit switching."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .network import Bus, BusKind, Network, check
from .numerics import SingularMatrix, lu_factor, lu_solve
from .ybus import AdmittanceMatrix, build_ybus

__all__ = [
    "SolveOptions",
    "StateVector",
    "MismatchVector",
    "JacobianMatrix",
    "LimitSwitch",
    "PowerFlowSolution",
    "PowerFlowError",
    "NonConvergence",
    "SingularJacobian",
    "flat_start",
    "power_injections",
    "mismatch",
    "jacobian",
    "solve_power_flow",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-6
    max_iter: int = 50
    q_limits: bool = True
    damping: float = 1.0
    #: limits are only checked once the max mismatch is below this
    q_check_threshold: float = 1e-2
    v_bounds: tuple[float, float] = (0.1, 2.0)
    #: consecutive mismatch increases tolerated before giving up
    max_growth: int = 3


@dataclass
class StateVector:
    """Full per-bus magnitudes/angles plus the bus roles currently in force.

    Only angles of non-slack buses and magnitudes of PQ buses are unknowns;
    ``q_fixed`` holds the generator Q of PV buses pinned at a limit.
    """

    v_mag: np.ndarray
    angle: np.ndarray
    kinds: tuple[BusKind, ...]
    q_fixed: dict[int, float] = field(default_factory=dict)

    @property
    def ang_idx(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k is not BusKind.SLACK], dtype=np.int64)

    @property
    def mag_idx(self) -> np.ndarray:
        return np.array([i for i, k in enumerate(self.kinds) if k is BusKind.PQ], dtype=np.int64)

    @property
    def unknowns(self) -> np.ndarray:
        return np.concatenate([self.angle[self.ang_idx], self.v_mag[self.mag_idx]])

    def with_unknowns(self, x: np.ndarray) -> "StateVector":
        ai, mi = self.ang_idx, self.mag_idx
        va = self.angle.copy()
        vm = self.v_mag.copy()
        va[ai] = x[: len(ai)]
        vm[mi] = x[len(ai):]
        return StateVector(vm, va, self.kinds, dict(self.q_fixed))

    @property
    def voltage(self) -> np.ndarray:
        return self.v_mag * np.exp(1j * self.angle)


@dataclass(frozen=True)
class MismatchVector:
    dp: np.ndarray
    dq: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.dp, self.dq])

    @property
    def max_abs(self) -> float:
        v = self.vector
        return float(np.abs(v).max()) if v.size else 0.0


@dataclass(frozen=True)
class JacobianMatrix:
    """``[[J1, J3], [J2, J4]]`` with J1 = dP/d(angle), J3 = dP/d|V|, J2 = dQ/d(angle), J4 = dQ/d|V|."""

    matrix: np.ndarray
    n_ang: int

    @property
    def J1(self):
        return self.matrix[: self.n_ang, : self.n_ang]

    @property
    def J3(self):
        return self.matrix[: self.n_ang, self.n_ang:]

    @property
    def J2(self):
        return self.matrix[self.n_ang:, : self.n_ang]

    @property
    def J4(self):
        return self.matrix[self.n_ang:, self.n_ang:]


@dataclass(frozen=True)
class LimitSwitch:
    bus: int
    iteration: int
    direction: str  # "to_max", "to_min" or "release"


@dataclass
class PowerFlowSolution:
    bus_ids: tuple[int, ...]
    v_mag: np.ndarray
    angle: np.ndarray
    p_injection: np.ndarray
    q_injection: np.ndarray
    converged: bool
    iterations: int
    max_mismatch_trace: list[float]
    limit_switches: list[LimitSwitch] = field(default_factory=list)
    final_kinds: tuple[BusKind, ...] = ()

    def index(self, bus: int) -> int:
        return self.bus_ids.index(bus)

    def v(self, bus: int) -> float:
        return float(self.v_mag[self.index(bus)])

    def angle_deg(self, bus: int) -> float:
        return float(np.degrees(self.angle[self.index(bus)]))

    @property
    def voltage(self) -> np.ndarray:
        return self.v_mag * np.exp(1j * self.angle)


class PowerFlowError(RuntimeError):
    pass


class NonConvergence(PowerFlowError):
    def __init__(self, message: str, trace: list[float], state: StateVector | None = None, iterations: int = 0):
        super().__init__(message)
        self.trace = list(trace)
        self.state = state
        self.iterations = iterations


class SingularJacobian(NonConvergence):
    pass


def flat_start(network: Network) -> StateVector:
    slack_angle = network.slack.angle_setpoint
    kinds = tuple(b.kind for b in network.buses)
    vm = np.array([1.0 if b.kind is BusKind.PQ else b.v_setpoint for b in network.buses], dtype=float)
    va = np.full(len(kinds), slack_angle, dtype=float)
    return StateVector(vm, va, kinds)


def _polar(y: AdmittanceMatrix) -> tuple[np.ndarray, np.ndarray]:
    return np.ascontiguousarray(y.magnitude), np.ascontiguousarray(y.angle)


def power_injections(y: AdmittanceMatrix, state: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """Net (P, Q) injected into the network at every bus, per unit."""
    ymag, theta = _polar(y)
    return kernels.injections(ymag, theta, state.v_mag.astype(float), state.angle.astype(float))


def _scheduled(buses: tuple[Bus, ...] | list[Bus], state: StateVector | None) -> tuple[np.ndarray, np.ndarray]:
    p = np.array([b.p_sched for b in buses])
    q = np.array([b.q_sched for b in buses])
    if state is not None:
        for i, qg in state.q_fixed.items():
            q[i] = qg - buses[i].q_load
    return p, q


def mismatch(network: Network, injections, state: StateVector | None = None) -> MismatchVector:
    """Scheduled minus computed power at non-slack (P) and PQ (Q) buses.

    Bus roles come from ``state`` when given (so limit-switched PV buses count
    as PQ), otherwise from the network.
    """
    p_calc, q_calc = injections
    p_sch, q_sch = _scheduled(network.buses, state)
    kinds = state.kinds if state is not None else tuple(b.kind for b in network.buses)
    ai = [i for i, k in enumerate(kinds) if k is not BusKind.SLACK]
    mi = [i for i, k in enumerate(kinds) if k is BusKind.PQ]
    return MismatchVector(p_sch[ai] - p_calc[ai], q_sch[mi] - q_calc[mi])


def jacobian(y: AdmittanceMatrix, state: StateVector) -> JacobianMatrix:
    ymag, theta = _polar(y)
    ai, mi = state.ang_idx, state.mag_idx
    jac = kernels.jacobian(ymag, theta, state.v_mag.astype(float), state.angle.astype(float), ai, mi)
    return JacobianMatrix(np.asarray(jac), len(ai))


def _check_limits(network: Network, state: StateVector, q_calc: np.ndarray, it: int) -> list[LimitSwitch]:
    """Switch violating PV buses to PQ at the limit, and release recovered ones."""
    events = []
    kinds = list(state.kinds)
    for i, bus in enumerate(network.buses):
        if bus.kind is not BusKind.PV:
            continue
        if kinds[i] is BusKind.PV:
            q_gen = q_calc[i] + bus.q_load
            if bus.q_gen_max is not None and q_gen > bus.q_gen_max:
                kinds[i] = BusKind.PQ
                state.q_fixed[i] = bus.q_gen_max
                events.append(LimitSwitch(bus.id, it, "to_max"))
            elif bus.q_gen_min is not None and q_gen < bus.q_gen_min:
                kinds[i] = BusKind.PQ
                state.q_fixed[i] = bus.q_gen_min
                events.append(LimitSwitch(bus.id, it, "to_min"))
        else:
            at_max = state.q_fixed[i] == bus.q_gen_max
            vm = state.v_mag[i]
            # hysteresis: release only once the voltage is back past the setpoint
            if (at_max and vm > bus.v_setpoint) or (not at_max and vm < bus.v_setpoint):
                kinds[i] = BusKind.PV
                del state.q_fixed[i]
                state.v_mag[i] = bus.v_setpoint
                events.append(LimitSwitch(bus.id, it, "release"))
    state.kinds = tuple(kinds)
    return events


def solve_power_flow(
    network: Network,
    options: SolveOptions | None = None,
    *,
    ybus: AdmittanceMatrix | None = None,
) -> PowerFlowSolution:
    """Newton-Raphson from a flat start.

    Raises :class:`NonConvergence` (with the residual trace) when the
    iteration limit is hit, a voltage leaves ``options.v_bounds`` or the
    mismatch grows ``options.max_growth`` iterations in a row, and
    :class:`SingularJacobian` when the linear step cannot be solved.
    """
    opts = options or SolveOptions()
    check(network)
    y = ybus if ybus is not None else build_ybus(network)
    ymag, theta = _polar(y)
    state = flat_start(network)
    trace: list[float] = []
    switches: list[LimitSwitch] = []
    growth = 0
    it = 0
    lo, hi = opts.v_bounds
    roles = None
    while True:
        if roles != state.kinds:
            # bus roles only change on limit switching; rebuild the index sets then
            roles = state.kinds
            ai, mi = state.ang_idx, state.mag_idx
            p_sch, q_sch = _scheduled(network.buses, state)
        p_calc, q_calc = kernels.injections(ymag, theta, state.v_mag, state.angle)
        mis = np.concatenate([p_sch[ai] - p_calc[ai], q_sch[mi] - q_calc[mi]])
        err = float(np.abs(mis).max()) if mis.size else 0.0
        if not np.isfinite(err):
            raise NonConvergence("mismatch is not finite", trace, state, it)
        trace.append(err)
        if opts.q_limits and err <= opts.q_check_threshold:
            events = _check_limits(network, state, q_calc, it)
            if events:
                switches.extend(events)
                if len(switches) > 10 * len(network.buses):
                    raise NonConvergence("reactive-limit switching is cycling", trace, state, it)
                log.debug("iteration %d: limit events %s", it, events)
                growth = 0
                roles = None
                continue
        if err <= opts.tol:
            break
        if len(trace) >= 2 and trace[-1] > trace[-2]:
            growth += 1
            if growth >= opts.max_growth:
                raise NonConvergence(f"mismatch grew {growth} iterations in a row", trace, state, it)
        else:
            growth = 0
        if it >= opts.max_iter:
            raise NonConvergence(f"no convergence in {opts.max_iter} iterations", trace, state, it)
        jac = kernels.jacobian(ymag, theta, state.v_mag, state.angle, ai, mi)
        try:
            dx = lu_solve(lu_factor(jac), mis)
        except SingularMatrix as exc:
            raise SingularJacobian(f"singular Jacobian at iteration {it}: {exc}", trace, state, it) from None
        state.angle[ai] += opts.damping * dx[: len(ai)]
        state.v_mag[mi] += opts.damping * dx[len(ai):]
        it += 1
        if np.any(state.v_mag < lo) or np.any(state.v_mag > hi):
            raise NonConvergence(
                f"voltage magnitude left [{lo}, {hi}] pu at iteration {it}", trace, state, it
            )

    return PowerFlowSolution(
        bus_ids=tuple(network.bus_ids),
        v_mag=state.v_mag.copy(),
        angle=state.angle.copy(),
        p_injection=np.asarray(p_calc).copy(),
        q_injection=np.asarray(q_calc).copy(),
        converged=True,
        iterations=it,
        max_mismatch_trace=trace,
        limit_switches=switches,
        final_kinds=state.kinds,
    )

"""Short-circuit currents by symmetrical components.

Sequence networks are the positive/negative/zero Y-bus matrices with the
generator sub-transient, negative and zero-sequence reactances stamped to
ground. The driving-point impedances at the faulted bus are combined with the
usual series (SLG), parallel (LL) and mixed (DLG) interconnections.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .network import Network, SequenceData
from .numerics import SingularMatrix
from .powerflow import PowerFlowSolution
from .ybus import AdmittanceMatrix, Sequence, build_ybus, thevenin_impedance

__all__ = [
    "A",
    "A_INV",
    "FaultKind",
    "FaultSpec",
    "FaultResult",
    "SequenceNetworks",
    "UngroundedSystem",
    "NoAdequateRating",
    "BreakerCatalog",
    "build_sequence_networks",
    "compute_fault",
    "sequence_to_phase",
    "phase_to_sequence",
    "load_catalog",
    "select_breaker",
]

_a = np.exp(2j * np.pi / 3)
#: phase = A @ (zero, positive, negative)
A = np.array([[1, 1, 1], [1, _a * _a, _a], [1, _a, _a * _a]], dtype=np.complex128)
A_INV = np.array([[1, 1, 1], [1, _a, _a * _a], [1, _a * _a, _a]], dtype=np.complex128) / 3.0


def sequence_to_phase(v012) -> np.ndarray:
    return A @ np.asarray(v012, dtype=np.complex128)


def phase_to_sequence(vabc) -> np.ndarray:
    return A_INV @ np.asarray(vabc, dtype=np.complex128)


class FaultKind(str, enum.Enum):
    THREE_PHASE = "3ph"
    SLG = "slg"
    LL = "ll"
    DLG = "dlg"


class UngroundedSystem(SingularMatrix):
    """A sequence network has no path to ground from the faulted bus."""


class NoAdequateRating(ValueError):
    pass


@dataclass(frozen=True)
class FaultSpec:
    bus: int
    kind: FaultKind
    z_fault: complex = 0j
    prefault_voltage: complex = 1.0 + 0j

    def __post_init__(self):
        object.__setattr__(self, "kind", FaultKind(self.kind))
        if complex(self.z_fault).real < 0:
            raise ValueError("fault resistance must be non-negative")


@dataclass(frozen=True)
class SequenceNetworks:
    zero: AdmittanceMatrix
    positive: AdmittanceMatrix
    negative: AdmittanceMatrix
    prefault: dict[int, complex]
    base_kv: dict[int, float | None]
    s_base: float
    solved_prefault: bool = False

    def __getitem__(self, seq: Sequence | str) -> AdmittanceMatrix:
        return {Sequence.ZERO: self.zero, Sequence.POSITIVE: self.positive, Sequence.NEGATIVE: self.negative}[
            Sequence(seq)
        ]

    def thevenin(self, bus: int, seq: Sequence | str) -> complex:
        try:
            return thevenin_impedance(self[seq], bus)
        except SingularMatrix as exc:
            raise UngroundedSystem(f"{Sequence(seq).value}-sequence network is floating at bus {bus} ({exc})") from None

    def base_current(self, bus: int) -> float | None:
        kv = self.base_kv.get(bus)
        return None if not kv else self.s_base * 1e6 / (math.sqrt(3.0) * kv * 1e3)


@dataclass(frozen=True)
class FaultResult:
    spec: FaultSpec
    z012: tuple[complex, complex, complex]
    i012: np.ndarray
    v012: np.ndarray
    base_amps: float | None

    @property
    def i_abc(self) -> np.ndarray:
        return sequence_to_phase(self.i012)

    @property
    def v_abc(self) -> np.ndarray:
        return sequence_to_phase(self.v012)

    @property
    def ground_current(self) -> complex:
        """Current into earth, 3*I0."""
        return complex(3.0 * self.i012[0])

    @property
    def reported_current(self) -> float:
        """Magnitude used for breaker sizing, per unit.

        Phase a for 3-phase and SLG, phase b for LL, ground current 3*I0 for
        DLG.
        """
        kind = self.spec.kind
        if kind in (FaultKind.THREE_PHASE, FaultKind.SLG):
            return float(abs(self.i_abc[0]))
        if kind is FaultKind.LL:
            return float(abs(self.i_abc[1]))
        return float(abs(self.ground_current))

    def amps(self, value_pu: float | complex) -> float:
        if self.base_amps is None:
            raise ValueError(f"bus {self.spec.bus} has no base_kv; ampere values unavailable")
        return abs(value_pu) * self.base_amps

    @property
    def reported_current_amps(self) -> float:
        return self.amps(self.reported_current)

    @property
    def i_abc_amps(self) -> np.ndarray:
        return np.abs(self.i_abc) * (self.base_amps if self.base_amps is not None else np.nan)


def build_sequence_networks(
    network: Network,
    seq_data: SequenceData | None = None,
    *,
    prefault: PowerFlowSolution | None = None,
) -> SequenceNetworks:
    """Assemble (Y0, Y1, Y2) for fault studies.

    Without ``prefault`` the classical flat assumption is used: 1.0 pu
    everywhere, loads, line charging and shunt devices neglected. With a
    solved power flow the network is kept as is (charging and shunts), loads
    become constant admittances in the positive and negative sequences, and
    each bus starts from its solved voltage.
    """
    seq_data = seq_data if seq_data is not None else network.sequence
    if seq_data is None:
        seq_data = SequenceData()

    if prefault is None:
        net = network.replace(
            branches=tuple(
                dataclasses.replace(br, b_charging=0.0, b0_charging=0.0, g_shunt=0.0) for br in network.branches
            ),
            shunts=(),
        )
        pre = {b.id: 1.0 + 0j for b in network.buses}
    else:
        net = network
        pre = {b: complex(v) for b, v in zip(prefault.bus_ids, prefault.voltage)}

    y1 = build_ybus(net, Sequence.POSITIVE)
    y2 = build_ybus(net, Sequence.NEGATIVE)
    y0 = build_ybus(net, Sequence.ZERO)

    d1: dict[int, complex] = {}
    d2: dict[int, complex] = {}
    d0: dict[int, complex] = {}
    for g in seq_data.generators:
        d1[g.bus] = d1.get(g.bus, 0j) + 1.0 / complex(0.0, g.x_sub)
        d2[g.bus] = d2.get(g.bus, 0j) + 1.0 / complex(0.0, g.x_neg)
        if g.grounded:
            d0[g.bus] = d0.get(g.bus, 0j) + 1.0 / (complex(0.0, g.x_zero) + 3.0 * g.z_neutral)
    if prefault is not None:
        for b in network.buses:
            s = complex(b.p_load, b.q_load)
            if s != 0:
                y_load = np.conj(s) / abs(pre[b.id]) ** 2
                d1[b.id] = d1.get(b.id, 0j) + y_load
                d2[b.id] = d2.get(b.id, 0j) + y_load

    return SequenceNetworks(
        zero=y0.with_shunts(d0),
        positive=y1.with_shunts(d1),
        negative=y2.with_shunts(d2),
        prefault=pre,
        base_kv={b.id: b.base_kv for b in network.buses},
        s_base=network.s_base,
        solved_prefault=prefault is not None,
    )


def compute_fault(nets: SequenceNetworks, spec: FaultSpec) -> FaultResult:
    """Sequence currents and faulted-bus voltages for one fault.

    The source voltage is the network prefault voltage at the bus when the
    networks were built from a solved case, else ``spec.prefault_voltage``.
    """
    e = nets.prefault[spec.bus] if nets.solved_prefault else complex(spec.prefault_voltage)
    zf = complex(spec.z_fault)
    z1 = nets.thevenin(spec.bus, Sequence.POSITIVE)
    z2 = nets.thevenin(spec.bus, Sequence.NEGATIVE)
    needs_zero = spec.kind in (FaultKind.SLG, FaultKind.DLG)
    z0 = nets.thevenin(spec.bus, Sequence.ZERO) if needs_zero else complex("nan")

    kind = spec.kind
    if kind is FaultKind.THREE_PHASE:
        i1 = e / (z1 + zf)
        i0 = i2 = 0j
    elif kind is FaultKind.SLG:
        i1 = e / (z0 + z1 + z2 + 3.0 * zf)
        i0 = i2 = i1
    elif kind is FaultKind.LL:
        i1 = e / (z1 + z2 + zf)
        i2 = -i1
        i0 = 0j
    else:
        z0g = z0 + 3.0 * zf
        i1 = e / (z1 + z2 * z0g / (z2 + z0g))
        i2 = -i1 * z0g / (z2 + z0g)
        i0 = -i1 * z2 / (z2 + z0g)

    v0 = -z0 * i0 if needs_zero else 0j
    v1 = e - z1 * i1
    v2 = -z2 * i2
    return FaultResult(
        spec=spec,
        z012=(z0, z1, z2),
        i012=np.array([i0, i1, i2], dtype=np.complex128),
        v012=np.array([v0, v1, v2], dtype=np.complex128),
        base_amps=nets.base_current(spec.bus),
    )


# --- breakers ----------------------------------------------------------------


@dataclass(frozen=True)
class BreakerCatalog:
    ratings_amps: tuple[float, ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        r = tuple(float(x) for x in self.ratings_amps)
        if not r:
            raise ValueError("breaker catalog is empty")
        object.__setattr__(self, "ratings_amps", tuple(sorted(r)))


def load_catalog(path: str | Path | None = None) -> BreakerCatalog:
    """Read a catalog file, or the bundled default when ``path`` is None."""
    if path is None:
        text = resources.files("gridflow.data").joinpath("breakers.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = json.loads(text)
    if isinstance(doc, list):
        return BreakerCatalog(tuple(doc))
    return BreakerCatalog(tuple(doc["ratings_amps"]), tuple(doc.get("notes", ())))


def select_breaker(current_amps: float, catalog: BreakerCatalog | None = None) -> float:
    """Smallest catalog rating that is at least ``current_amps``."""
    catalog = catalog or load_catalog()
    for rating in catalog.ratings_amps:
        if rating >= current_amps:
            return rating
    raise NoAdequateRating(f"{current_amps:.2f} A exceeds the largest rating {catalog.ratings_amps[-1]:.0f} A")

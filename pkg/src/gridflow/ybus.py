"""Bus admittance matrix for the positive, negative and zero sequences."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .network import BranchKind, Network, UnknownBus, ZeroSeqPath
from .numerics import lu_factor, lu_solve

__all__ = ["Sequence", "AdmittanceMatrix", "NotSupported", "build_ybus", "branch_admittances", "thevenin_impedance"]


class Sequence(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ZERO = "zero"


class NotSupported(ValueError):
    pass


@dataclass(frozen=True)
class AdmittanceMatrix:
    entries: np.ndarray
    bus_ids: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.bus_ids)

    @property
    def bus_index(self) -> dict[int, int]:
        return {b: i for i, b in enumerate(self.bus_ids)}

    def index(self, bus: int) -> int:
        try:
            return self.bus_ids.index(bus)
        except ValueError:
            raise UnknownBus(bus) from None

    def __getitem__(self, key: tuple[int, int]) -> complex:
        """Entry addressed by bus ids, ``y[2, 5]``."""
        i, j = key
        return complex(self.entries[self.index(i), self.index(j)])

    @property
    def G(self) -> np.ndarray:
        return self.entries.real

    @property
    def B(self) -> np.ndarray:
        return self.entries.imag

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.entries)

    @property
    def angle(self) -> np.ndarray:
        return np.angle(self.entries)

    def diagonally_dominant(self) -> bool:
        mag = self.magnitude
        off = mag.sum(axis=1) - np.diag(mag)
        return bool(np.all(np.diag(mag) >= off))

    def with_shunts(self, diag: dict[int, complex]) -> "AdmittanceMatrix":
        """Copy with extra admittance added to the given diagonal entries."""
        y = self.entries.copy()
        for bus, val in diag.items():
            k = self.index(bus)
            y[k, k] += val
        return AdmittanceMatrix(y, self.bus_ids)


def branch_admittances(branch, sequence: Sequence = Sequence.POSITIVE) -> tuple[complex, complex, complex, complex]:
    """Two-port stamp ``(y_ff, y_ft, y_tf, y_tt)`` of one branch."""
    if branch.phase_shift != 0.0:
        raise NotSupported(f"branch {branch.label}: phase-shifting transformers are not supported")
    if sequence is Sequence.ZERO:
        r, x, b = branch.r0, branch.x0, branch.b0_charging
    else:
        r, x, b = branch.r, branch.x, branch.b_charging
    a = branch.tap if branch.kind is BranchKind.TRANSFORMER else 1.0
    y = 1.0 / complex(r, x)
    half = complex(branch.g_shunt, b) / 2.0
    return y / (a * a) + half, -y / a, -y / a, y + half


def build_ybus(network: Network, sequence: Sequence | str = Sequence.POSITIVE) -> AdmittanceMatrix:
    sequence = Sequence(sequence)
    ids = tuple(network.bus_ids)
    idx = {b: i for i, b in enumerate(ids)}
    y = np.zeros((len(ids), len(ids)), dtype=np.complex128)
    for br in network.active_branches:
        if sequence is Sequence.ZERO and br.zero_seq_path is ZeroSeqPath.OPEN:
            continue
        f, t = idx[br.from_bus], idx[br.to_bus]
        yff, yft, ytf, ytt = branch_admittances(br, sequence)
        y[f, f] += yff
        y[f, t] += yft
        y[t, f] += ytf
        y[t, t] += ytt
    if sequence is not Sequence.ZERO:
        for sh in network.shunts:
            if sh.in_service:
                y[idx[sh.bus], idx[sh.bus]] += 1j * sh.q_nominal
    return AdmittanceMatrix(y, ids)


def thevenin_impedance(y: AdmittanceMatrix, bus: int) -> complex:
    """Driving-point impedance Z_kk, from one solve of ``Y z = e_k``.

    Raises :class:`~gridflow.numerics.SingularMatrix` for a floating network.
    """
    k = y.index(bus)
    e = np.zeros(y.n, dtype=np.complex128)
    e[k] = 1.0
    z = lu_solve(lu_factor(y.entries), e)
    return complex(z[k])

"""Seeded random networks for property tests."""
import numpy as np

from gridflow.network import (
    Branch,
    BranchKind,
    Bus,
    BusKind,
    GeneratorSequence,
    Network,
    SequenceData,
)


def random_network(seed: int, n_buses: int, *, transformers: bool = True, loads: float = 0.4) -> Network:
    """Connected network: bus 1 slack, roughly a third PV, the rest PQ.

    Impedances and loads are kept in a range where a flat-start Newton solve
    converges, so the generator is usable for power-flow properties as well
    as fault studies. Every generator bus carries grounded sequence data.
    """
    rng = np.random.default_rng(seed)
    buses = [Bus(1, BusKind.SLACK, v_setpoint=float(rng.uniform(1.0, 1.05)), base_kv=138.0)]
    for i in range(2, n_buses + 1):
        if rng.random() < 0.3:
            buses.append(
                Bus(
                    i,
                    BusKind.PV,
                    v_setpoint=float(rng.uniform(0.98, 1.05)),
                    p_gen=float(rng.uniform(0.1, 0.5)),
                    p_load=float(rng.uniform(0.0, 0.2)),
                    q_load=float(rng.uniform(0.0, 0.1)),
                    base_kv=138.0,
                )
            )
        else:
            buses.append(
                Bus(
                    i,
                    BusKind.PQ,
                    p_load=float(rng.uniform(0.0, loads)),
                    q_load=float(rng.uniform(-0.05, loads / 2)),
                    base_kv=138.0,
                )
            )

    def branch(a, b, circuit=1):
        is_tx = transformers and rng.random() < 0.25
        if is_tx:
            return Branch(
                a, b, BranchKind.TRANSFORMER,
                r=float(rng.uniform(0.001, 0.01)), x=float(rng.uniform(0.03, 0.12)),
                tap=float(rng.uniform(0.95, 1.05)), mva_limit=2.0, circuit=circuit,
            )
        return Branch(
            a, b, BranchKind.LINE,
            r=float(rng.uniform(0.005, 0.04)), x=float(rng.uniform(0.04, 0.2)),
            b_charging=float(rng.uniform(0.0, 0.08)), mva_limit=2.0, circuit=circuit,
        )

    branches = []
    for i in range(2, n_buses + 1):
        branches.append(branch(int(rng.integers(1, i)), i))
    for _ in range(int(rng.integers(0, n_buses))):
        a, b = sorted(int(x) for x in rng.choice(np.arange(1, n_buses + 1), size=2, replace=False))
        circuit = 1 + sum(1 for br in branches if br.connects(a, b))
        branches.append(branch(a, b, circuit))

    gens = tuple(
        GeneratorSequence(
            b.id,
            x_sub=float(rng.uniform(0.1, 0.3)),
            x_neg=float(rng.uniform(0.1, 0.3)),
            x_zero=float(rng.uniform(0.03, 0.1)),
            z_neutral=complex(0.0, float(rng.uniform(0.0, 0.05))),
        )
        for b in buses
        if b.kind is not BusKind.PQ
    )
    return Network(100.0, tuple(buses), tuple(branches), name=f"random-{seed}-{n_buses}", sequence=SequenceData(gens))

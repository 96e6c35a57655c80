"""Compare the loop (numba-compiled) and numpy implementations of the Newton-Raphson kernels.

    python3 benchmarks/bench_kernels.py [--sizes 5 50 200] [--repeat 5]

Times the injection and Jacobian kernels on their own, a full power-flow
solve with each kernel pair wired in, and the two-transformer tap sweep on
the embedded 5-bus case. The "loop" column is compiled by numba unless
GRIDFLOW_DISABLE_JIT=1 is set, in which case it runs as plain Python.
"""
import argparse
import time
from contextlib import contextmanager

import numpy as np

from gridflow import kernels
from gridflow._jit import JIT_DISABLED
from gridflow.network import Branch, Bus, BusKind, Network, glover5
from gridflow.powerflow import flat_start, solve_power_flow
from gridflow.scenarios import tap_sweep
from gridflow.ybus import build_ybus

IMPLS = {
    "loop": (kernels.injections_loop, kernels.jacobian_loop),
    "numpy": (kernels.injections_numpy, kernels.jacobian_numpy),
}


def mesh(n: int, seed: int = 0) -> Network:
    """Radial spine with a few cross ties; lightly loaded so it always solves."""
    rng = np.random.default_rng(seed)
    buses = [Bus(1, BusKind.SLACK)]
    for i in range(2, n + 1):
        if i % 10 == 0:
            buses.append(Bus(i, BusKind.PV, v_setpoint=1.02, p_gen=0.3))
        else:
            buses.append(Bus(i, BusKind.PQ, p_load=float(rng.uniform(0, 0.1)), q_load=float(rng.uniform(0, 0.03))))
    branches = [Branch(i - 1, i, r=0.005, x=0.05, b_charging=0.02) for i in range(2, n + 1)]
    for k in range(n // 5):
        a, b = sorted(int(x) for x in rng.choice(np.arange(1, n + 1), 2, replace=False))
        if b - a > 1:
            branches.append(Branch(a, b, r=0.01, x=0.1, circuit=2 + k))
    return Network(100.0, tuple(buses), tuple(branches), name=f"mesh{n}")


def best_of(fn, repeat: int) -> float:
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


@contextmanager
def use(impl: str):
    saved = kernels.injections, kernels.jacobian
    kernels.injections, kernels.jacobian = IMPLS[impl]
    try:
        yield
    finally:
        kernels.injections, kernels.jacobian = saved


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[5, 50, 200])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-sweep", action="store_true")
    args = ap.parse_args()

    print(f"jit {'disabled' if JIT_DISABLED else 'enabled'}; times are best of {args.repeat}")
    print(f"{'case':>10} {'step':>12} {'loop ms':>10} {'numpy ms':>10} {'ratio':>7}")
    for n in args.sizes:
        net = glover5() if n == 5 else mesh(n)
        y = build_ybus(net)
        ymag, theta = np.ascontiguousarray(y.magnitude), np.ascontiguousarray(y.angle)
        st = flat_start(net)
        vm, va, ai, mi = st.v_mag, st.angle, st.ang_idx, st.mag_idx
        rows = {}
        for impl, (inj, jac) in IMPLS.items():
            rows.setdefault("injections", {})[impl] = best_of(lambda: inj(ymag, theta, vm, va), args.repeat)
            rows.setdefault("jacobian", {})[impl] = best_of(lambda: jac(ymag, theta, vm, va, ai, mi), args.repeat)
            with use(impl):
                rows.setdefault("solve", {})[impl] = best_of(lambda: solve_power_flow(net), args.repeat)
        for step, t in rows.items():
            print(f"{net.name:>10} {step:>12} {1e3 * t['loop']:10.3f} {1e3 * t['numpy']:10.3f} "
                  f"{t['numpy'] / t['loop']:7.2f}")

    if not args.skip_sweep:
        net = glover5()
        t = {}
        for impl in IMPLS:
            with use(impl):
                t[impl] = best_of(
                    lambda: tap_sweep(net, [(5, 1), (4, 3)], (0.85, 1.15), 0.01, target_bus=2), max(1, args.repeat // 5)
                )
        print(f"{'glover5':>10} {'tap sweep':>12} {1e3 * t['loop']:10.1f} {1e3 * t['numpy']:10.1f} "
              f"{t['numpy'] / t['loop']:7.2f}")


if __name__ == "__main__":
    main()

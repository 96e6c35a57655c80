import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridflow import kernels
from gridflow._jit import JIT_DISABLED, py_func
from gridflow.powerflow import flat_start
from gridflow.ybus import build_ybus

from netgen import random_network
from oracles import injections_direct


def _state(seed, n):
    net = random_network(seed, n)
    y = build_ybus(net)
    s = flat_start(net)
    rng = np.random.default_rng(seed)
    vm = s.v_mag + rng.uniform(-0.05, 0.05, n)
    va = rng.uniform(-0.3, 0.3, n)
    return y, s, vm, va


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_injection_kernels_agree(seed, n):
    y, _, vm, va = _state(seed, n)
    p_ref, q_ref = injections_direct(y.entries, vm * np.exp(1j * va))
    for fn in (kernels.injections_loop, py_func(kernels.injections_loop), kernels.injections_numpy):
        p, q = fn(y.magnitude, y.angle, vm, va)
        np.testing.assert_allclose(p, p_ref, atol=1e-10)
        np.testing.assert_allclose(q, q_ref, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8))
def test_jacobian_kernels_agree(seed, n):
    y, s, vm, va = _state(seed, n)
    args = (y.magnitude, y.angle, vm, va, s.ang_idx, s.mag_idx)
    ref = kernels.jacobian_numpy(*args)
    np.testing.assert_allclose(kernels.jacobian_loop(*args), ref, rtol=1e-12, atol=1e-10)
    np.testing.assert_allclose(py_func(kernels.jacobian_loop)(*args), ref, rtol=1e-12, atol=1e-10)


def test_selected_kernel_follows_flag():
    if JIT_DISABLED:
        assert kernels.injections is kernels.injections_numpy
    else:
        assert kernels.injections is kernels.injections_loop
        pytest.importorskip("numba")
        assert hasattr(kernels.injections_loop, "py_func")

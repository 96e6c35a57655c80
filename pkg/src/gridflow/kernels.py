"""Hot loops of the Newton-Raphson solve.

Two interchangeable implementations of each kernel:

* ``*_loop``: explicit loops in polar form, compiled with numba;
* ``*_numpy``: vectorised complex arithmetic, no compilation.

:data:`injections` and :data:`jacobian` point at the loop versions unless
``GRIDFLOW_DISABLE_JIT`` is set. Both variants are always importable so tests
and ``benchmarks/`` can compare them.
"""
import numpy as np

from ._jit import JIT_DISABLED, njit


@njit
def injections_loop(ymag, theta, vm, va):
    n = vm.shape[0]
    p = np.zeros(n)
    q = np.zeros(n)
    for i in range(n):
        for j in range(n):
            if ymag[i, j] == 0.0:
                continue
            w = vm[i] * vm[j] * ymag[i, j]
            arg = theta[i, j] - va[i] + va[j]
            p[i] += w * np.cos(arg)
            q[i] -= w * np.sin(arg)
    return p, q


def injections_numpy(ymag, theta, vm, va):
    v = vm * np.exp(1j * va)
    y = ymag * np.exp(1j * theta)
    s = v * np.conj(y @ v)
    return s.real.copy(), s.imag.copy()


@njit
def jacobian_loop(ymag, theta, vm, va, ang_idx, mag_idx):
    """Rows [P(ang_idx); Q(mag_idx)], columns [angle(ang_idx); |V|(mag_idx)]."""
    n = vm.shape[0]
    na = ang_idx.shape[0]
    nm = mag_idx.shape[0]
    # full n x n partials first, then gather
    dp_da = np.zeros((n, n))
    dq_da = np.zeros((n, n))
    dp_dv = np.zeros((n, n))
    dq_dv = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if ymag[i, j] == 0.0 or i == j:
                continue
            arg = theta[i, j] - va[i] + va[j]
            c = np.cos(arg)
            s = np.sin(arg)
            w = vm[i] * vm[j] * ymag[i, j]
            dp_da[i, j] = -w * s
            dq_da[i, j] = -w * c
            dp_da[i, i] += w * s
            dq_da[i, i] += w * c
            dp_dv[i, j] = vm[i] * ymag[i, j] * c
            dq_dv[i, j] = -vm[i] * ymag[i, j] * s
            dp_dv[i, i] += vm[j] * ymag[i, j] * c
            dq_dv[i, i] -= vm[j] * ymag[i, j] * s
        dp_dv[i, i] += 2.0 * vm[i] * ymag[i, i] * np.cos(theta[i, i])
        dq_dv[i, i] -= 2.0 * vm[i] * ymag[i, i] * np.sin(theta[i, i])
    jac = np.zeros((na + nm, na + nm))
    for r in range(na):
        for c in range(na):
            jac[r, c] = dp_da[ang_idx[r], ang_idx[c]]
        for c in range(nm):
            jac[r, na + c] = dp_dv[ang_idx[r], mag_idx[c]]
    for r in range(nm):
        for c in range(na):
            jac[na + r, c] = dq_da[mag_idx[r], ang_idx[c]]
        for c in range(nm):
            jac[na + r, na + c] = dq_dv[mag_idx[r], mag_idx[c]]
    return jac


def jacobian_numpy(ymag, theta, vm, va, ang_idx, mag_idx):
    y = ymag * np.exp(1j * theta)
    v = vm * np.exp(1j * va)
    i_bus = y @ v
    dv = np.diag(v)
    ds_da = 1j * dv @ np.conj(np.diag(i_bus) - y @ dv)
    vn = np.diag(np.exp(1j * va))
    ds_dv = dv @ np.conj(y @ vn) + np.conj(np.diag(i_bus)) @ vn
    top = np.hstack([ds_da.real[np.ix_(ang_idx, ang_idx)], ds_dv.real[np.ix_(ang_idx, mag_idx)]])
    bot = np.hstack([ds_da.imag[np.ix_(mag_idx, ang_idx)], ds_dv.imag[np.ix_(mag_idx, mag_idx)]])
    return np.vstack([top, bot])


if JIT_DISABLED:
    injections = injections_numpy
    jacobian = jacobian_numpy
else:
    injections = injections_loop
    jacobian = jacobian_loop

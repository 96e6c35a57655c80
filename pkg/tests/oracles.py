"""Independent reference computations used only by tests.

None of these reuse the package's solvers: matrices are inverted with
numpy, derivatives are taken numerically, faults are solved in the phase
domain.
"""
import numpy as np

_a = np.exp(2j * np.pi / 3)
_T = np.array([[1, 1, 1], [1, _a * _a, _a], [1, _a, _a * _a]])
_T_INV = np.linalg.inv(_T)


def gaussian_solve(a, b):
    """Textbook Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    n = len(b)
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        a[[k, p]] = a[[p, k]]
        b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            f = a[i, k] / a[k, k]
            a[i, k:] -= f * a[k, k:]
            b[i] -= f * b[k]
    x = np.zeros(n, dtype=complex)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1:] @ x[i + 1:]) / a[i, i]
    return x


def injections_direct(y, v):
    """S = V * conj(Y V) from the full complex matrix."""
    s = v * np.conj(y @ v)
    return s.real, s.imag


def fd_jacobian(y, vm, va, ang_idx, mag_idx, h=1e-6):
    """Central-difference d(P[ang], Q[mag]) / d(angle[ang], |V|[mag])."""
    def f(x):
        a = va.copy()
        m = vm.copy()
        a[ang_idx] = x[: len(ang_idx)]
        m[mag_idx] = x[len(ang_idx):]
        p, q = injections_direct(y, m * np.exp(1j * a))
        return np.concatenate([p[ang_idx], q[mag_idx]])

    x0 = np.concatenate([va[ang_idx], vm[mag_idx]])
    jac = np.zeros((len(x0), len(x0)))
    for k in range(len(x0)):
        e = np.zeros_like(x0)
        e[k] = h
        jac[:, k] = (f(x0 + e) - f(x0 - e)) / (2 * h)
    return jac


def phase_domain_fault(y0, y1, y2, v_pre, k, kind, zf):
    """Fault currents (Ia, Ib, Ic) leaving bus index ``k``, solved on the 3n-phase network.

    ``y0, y1, y2`` are sequence admittance matrices including generator
    branches to ground; ``v_pre`` is the positive-sequence prefault voltage
    per bus. Sources are the Norton injections that hold ``v_pre`` before the
    fault. The fault is imposed with its phase-domain boundary equations.
    """
    n = y1.shape[0]
    yabc = np.zeros((3 * n, 3 * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            blk = _T @ np.diag([y0[i, j], y1[i, j], y2[i, j]]) @ _T_INV
            yabc[3 * i:3 * i + 3, 3 * j:3 * j + 3] = blk
    vabc = np.concatenate([v * np.array([1, _a * _a, _a]) for v in v_pre])
    i_src = yabc @ vabc

    # unknowns: 3n phase voltages, then the three fault currents out of bus k
    m = np.zeros((3 * n + 3, 3 * n + 3), dtype=complex)
    rhs = np.zeros(3 * n + 3, dtype=complex)
    m[: 3 * n, : 3 * n] = yabc
    for p in range(3):
        m[3 * k + p, 3 * n + p] = 1.0
    rhs[: 3 * n] = i_src
    va, vb, vc = 3 * k, 3 * k + 1, 3 * k + 2
    ia, ib, ic = 3 * n, 3 * n + 1, 3 * n + 2
    r = 3 * n
    if kind == "3ph":
        for vp, ip in ((va, ia), (vb, ib), (vc, ic)):
            m[r, vp], m[r, ip] = 1.0, -zf
            r += 1
    elif kind == "slg":
        m[r, va], m[r, ia] = 1.0, -zf
        m[r + 1, ib] = 1.0
        m[r + 2, ic] = 1.0
    elif kind == "ll":
        m[r, ia] = 1.0
        m[r + 1, ib], m[r + 1, ic] = 1.0, 1.0
        m[r + 2, vb], m[r + 2, vc], m[r + 2, ib] = 1.0, -1.0, -zf
    elif kind == "dlg":
        m[r, ia] = 1.0
        m[r + 1, vb], m[r + 1, vc] = 1.0, -1.0
        m[r + 2, vb], m[r + 2, ib], m[r + 2, ic] = 1.0, -zf, -zf
    else:
        raise ValueError(kind)
    x = np.linalg.solve(m, rhs)
    return x[3 * n:]

"""Compiled inner loops for long sample paths.

The float expressions here mirror the step functions in
:mod:`vacqueue.recursion` term for term, so a compiled path and a step-by-step
path agree bit for bit.  The lean chunk kernel additionally accumulates the
statistics the estimators need (zeros, balkers, exp(-gamma W) sums) so that
hundred-million-customer runs never materialize the whole workload history.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def srs_trace(w0, tau, sigma, deadline, vacation):
    n = tau.shape[0]
    w = np.empty(n + 1, dtype=np.float64)
    x = np.empty(n, dtype=np.float64)
    branch = np.empty(n, dtype=np.uint8)
    fam = np.empty(n, dtype=np.int64)
    served_arr = np.empty(n, dtype=np.int64)
    w[0] = w0
    prev_x_nonpos = True
    family_start = 0
    served = 0
    for k in range(n):
        wk = w[k]
        if prev_x_nonpos:
            family_start = k
            served = 0
        if wk <= deadline[k]:
            served += 1
            drained = wk + sigma[k] - tau[k]
            if drained > 0.0:
                w_next = drained
                br = 1
            else:
                w_next = drained + vacation[k]
                if w_next < 0.0:
                    w_next = 0.0
                br = 3
        else:
            drained = wk - tau[k]
            if drained > 0.0:
                w_next = drained
                br = 2
            elif served > 0:
                w_next = wk + vacation[k] - tau[k]
                if w_next < 0.0:
                    w_next = 0.0
                br = 4
            else:
                w_next = 0.0
                br = 5
        if wk < deadline[k]:
            xk = wk + sigma[k] - tau[k]
        else:
            xk = wk - tau[k]
        x[k] = xk
        branch[k] = br
        fam[k] = family_start
        served_arr[k] = served
        prev_x_nonpos = xk <= 0.0
        w[k + 1] = w_next
    return w, x, branch, fam, served_arr


@njit(cache=True)
def z_path(z0, tau, sigma, deadline, vacation):
    n = tau.shape[0]
    z = np.empty(n + 1, dtype=np.float64)
    z[0] = z0
    for k in range(n):
        zk = z[k]
        if zk <= deadline[k]:
            drained = zk + sigma[k] - tau[k]
            if drained > 0.0:
                z_next = drained
            else:
                z_next = drained + vacation[k]
                if z_next < 0.0:
                    z_next = 0.0
        else:
            drained = zk - tau[k]
            if drained > 0.0:
                z_next = drained
            else:
                z_next = 0.0
        z[k + 1] = z_next
    return z


@njit(cache=True)
def y_path(y0, tau, sigma, deadline, vacation):
    n = tau.shape[0]
    y = np.empty(n + 1, dtype=np.float64)
    y[0] = y0
    for k in range(n):
        a = y[k] + vacation[k]
        b = sigma[k] + deadline[k] + vacation[k]
        m = a if a > b else b
        y_next = m - tau[k]
        if y_next < 0.0:
            y_next = 0.0
        y[k + 1] = y_next
    return y


@njit(cache=True)
def volterra_march(rhs, gbar, bbar, lam, h):
    """Forward march of the second-kind Volterra equation

        f(x_i) = rhs(x_i) + lam * int_0^{x_i} gbar(u) bbar(x_i - u) f(u) du

    on a uniform grid with trapezoidal product quadrature; the diagonal
    (unknown) node enters with half weight and is solved for directly.
    """
    n = rhs.shape[0]
    f = np.empty(n, dtype=np.float64)
    gf = np.empty(n, dtype=np.float64)
    f[0] = rhs[0]
    gf[0] = gbar[0] * f[0]
    b0 = bbar[0]
    for i in range(1, n):
        acc = 0.5 * gf[0] * bbar[i]
        for j in range(1, i):
            acc += gf[j] * bbar[i - j]
        denom = 1.0 - lam * h * 0.5 * gbar[i] * b0
        f[i] = (rhs[i] + lam * h * acc) / denom
        gf[i] = gbar[i] * f[i]
    return f


@njit(cache=True)
def volterra_residual(f, rhs, gbar, bbar, lam, h):
    """Sup-norm defect of the equation under composite Simpson quadrature.

    The march enforces the trapezoid-discretized equation, so this measures
    the quadrature (discretization) error, which shrinks like h^2.
    """
    n = f.shape[0]
    gf = gbar * f
    worst = 0.0
    for i in range(n):
        if i == 0:
            integral = 0.0
        elif i == 1:
            integral = 0.5 * h * (gf[0] * bbar[1] + gf[1] * bbar[0])
        else:
            m = i if i % 2 == 0 else i - 1
            acc = gf[0] * bbar[i] + gf[m] * bbar[i - m]
            for j in range(1, m):
                w = 4.0 if j % 2 == 1 else 2.0
                acc += w * gf[j] * bbar[i - j]
            integral = acc * h / 3.0
            if m != i:
                integral += 0.5 * h * (gf[i - 1] * bbar[1] + gf[i] * bbar[0])
        defect = abs(f[i] - rhs[i] - lam * integral)
        if defect > worst:
            worst = defect
    return worst


@njit(cache=True)
def srs_chunk(w, prev_x_nonpos, served, tau, sigma, deadline, vacation, gamma, collect):
    """One chunk of the workload path.

    Returns the per-arrival workloads of the chunk plus the carried state and,
    when `collect` is set, the chunk's tallies: exact zeros, balkers
    (W >= D), and running sums of exp(-gamma W) and its square.
    """
    n = tau.shape[0]
    w_out = np.empty(n, dtype=np.float64)
    n_zero = 0
    n_loss = 0
    s1 = 0.0
    s2 = 0.0
    for k in range(n):
        w_out[k] = w
        if collect:
            if w == 0.0:
                n_zero += 1
            if w >= deadline[k]:
                n_loss += 1
            if gamma > 0.0:
                e = np.exp(-gamma * w)
                s1 += e
                s2 += e * e
        if prev_x_nonpos:
            served = 0
        if w <= deadline[k]:
            served += 1
            drained = w + sigma[k] - tau[k]
            if drained > 0.0:
                w_next = drained
            else:
                w_next = drained + vacation[k]
                if w_next < 0.0:
                    w_next = 0.0
        else:
            drained = w - tau[k]
            if drained > 0.0:
                w_next = drained
            elif served > 0:
                w_next = w + vacation[k] - tau[k]
                if w_next < 0.0:
                    w_next = 0.0
            else:
                w_next = 0.0
        if w < deadline[k]:
            xk = w + sigma[k] - tau[k]
        else:
            xk = w - tau[k]
        prev_x_nonpos = xk <= 0.0
        w = w_next
    return w_out, w, prev_x_nonpos, served, n_zero, n_loss, s1, s2

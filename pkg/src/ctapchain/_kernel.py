"""Compiled RK4 propagation of the dephasing master equation.

The density matrix is split as ``rho = X + iY`` (X symmetric, Y
antisymmetric).  Since W is real,

    dX/dt =  [W, Y] - gamma * offdiag(X)
    dY/dt = -[W, X] - gamma * offdiag(Y)

W = A (+) A is a Kronecker sum of a tridiagonal matrix, so the commutators
are evaluated as an 8-point stencil rather than dense products.  Arrays are
padded by ``n`` on every side so the stencil needs no bounds tests; the
coefficient of any out-of-chain neighbour is zero.
"""
import numpy as np
from numba import njit

OK = 0
NONFINITE = 1


@njit(cache=True)
def _rates(t, amp, cen, std, out):
    for k in range(amp.size):
        d = (t - cen[k]) / std[k]
        out[k] = amp[k] * np.exp(-0.5 * d * d)


@njit(cache=True)
def _neighbour_rates(w, n, am, ap, bm, bp):
    for i in range(n * n):
        a = i // n
        b = i - a * n
        am[i] = w[a - 1] if a > 0 else 0.0
        ap[i] = w[a] if a < n - 1 else 0.0
        bm[i] = w[b - 1] if b > 0 else 0.0
        bp[i] = w[b] if b < n - 1 else 0.0


@njit(cache=True)
def _commutator(z, n, am, ap, bm, bp, sign, out):
    # out = sign * [W, Z]; W_ik = -rate for each neighbour k of i
    m = n * n
    for i in range(m):
        r = i + n
        cam = am[i]
        cap = ap[i]
        cbm = bm[i]
        cbp = bp[i]
        for j in range(m):
            c = j + n
            right = am[j] * z[r, c - n] + ap[j] * z[r, c + n] + bm[j] * z[r, c - 1] + bp[j] * z[r, c + 1]
            left = cam * z[r - n, c] + cap * z[r + n, c] + cbm * z[r - 1, c] + cbp * z[r + 1, c]
            out[i, j] = sign * (right - left)


@njit(cache=True)
def _derivative(x, y, n, gamma, am, ap, bm, bp, dx, dy):
    m = n * n
    _commutator(y, n, am, ap, bm, bp, 1.0, dx)
    _commutator(x, n, am, ap, bm, bp, -1.0, dy)
    if gamma != 0.0:
        for i in range(m):
            for j in range(m):
                if i != j:
                    dx[i, j] -= gamma * x[i + n, j + n]
                    dy[i, j] -= gamma * y[i + n, j + n]


@njit(cache=True)
def derivative(x, y, n, gamma, w):
    """Unpadded (dX, dY) for link rates ``w``; used by the adaptive path."""
    m = n * n
    xp = np.zeros((m + 2 * n, m + 2 * n))
    yp = np.zeros((m + 2 * n, m + 2 * n))
    xp[n:n + m, n:n + m] = x
    yp[n:n + m, n:n + m] = y
    am = np.empty(m)
    ap = np.empty(m)
    bm = np.empty(m)
    bp = np.empty(m)
    _neighbour_rates(w, n, am, ap, bm, bp)
    dx = np.empty((m, m))
    dy = np.empty((m, m))
    _derivative(xp, yp, n, gamma, am, ap, bm, bp, dx, dy)
    return dx, dy


@njit(cache=True)
def rk4_propagate(x0, y0, n, gamma, amp, cen, std, t0, h, n_steps, stride,
                  snap_flags):
    """Fixed-step RK4 from ``t0`` over ``n_steps`` steps of size ``h``.

    Samples are taken every ``stride`` steps (including step 0 and the
    last step); ``snap_flags[s]`` marks samples whose full state is kept.

    Returns populations, traces, purities, snapshot X/Y stacks, the final
    X/Y, the largest Hermiticity residual removed by symmetrisation, the
    largest trace deviation over all steps, a status code and the time at
    which a failure was detected.
    """
    m = n * n
    size = m + 2 * n
    n_samples = n_steps // stride + 1
    n_snaps = 0
    for s in range(n_samples):
        if snap_flags[s]:
            n_snaps += 1

    x = np.zeros((size, size))
    y = np.zeros((size, size))
    x[n:n + m, n:n + m] = x0
    y[n:n + m, n:n + m] = y0
    xs = np.zeros((size, size))
    ys = np.zeros((size, size))
    kx = np.empty((4, m, m))
    ky = np.empty((4, m, m))
    w = np.empty(amp.size)
    am = np.empty(m)
    ap = np.empty(m)
    bm = np.empty(m)
    bp = np.empty(m)

    pops = np.empty((n_samples, m))
    traces = np.empty(n_samples)
    purities = np.empty(n_samples)
    snap_x = np.empty((n_snaps, m, m))
    snap_y = np.empty((n_snaps, m, m))

    drift = 0.0
    trace_dev = 0.0
    status = OK
    fail_time = np.nan
    sample = 0
    snap = 0

    for step in range(n_steps + 1):
        t = t0 + step * h
        if step % stride == 0:
            tr = 0.0
            pur = 0.0
            for i in range(m):
                d = x[i + n, i + n]
                pops[sample, i] = d
                tr += d
                for j in range(m):
                    pur += x[i + n, j + n] ** 2 + y[i + n, j + n] ** 2
            traces[sample] = tr
            purities[sample] = pur
            if snap_flags[sample]:
                for i in range(m):
                    for j in range(m):
                        snap_x[snap, i, j] = x[i + n, j + n]
                        snap_y[snap, i, j] = y[i + n, j + n]
                snap += 1
            sample += 1
        if step == n_steps:
            break

        for st in range(4):
            if st == 0:
                tt = t
            elif st == 3:
                tt = t + h
            else:
                tt = t + 0.5 * h
            if st != 2:
                _rates(tt, amp, cen, std, w)
                _neighbour_rates(w, n, am, ap, bm, bp)
            if st == 0:
                _derivative(x, y, n, gamma, am, ap, bm, bp, kx[0], ky[0])
            else:
                c = 0.5 * h if st < 3 else h
                for i in range(m):
                    for j in range(m):
                        xs[i + n, j + n] = x[i + n, j + n] + c * kx[st - 1, i, j]
                        ys[i + n, j + n] = y[i + n, j + n] + c * ky[st - 1, i, j]
                _derivative(xs, ys, n, gamma, am, ap, bm, bp, kx[st], ky[st])

        h6 = h / 6.0
        for i in range(m):
            for j in range(m):
                x[i + n, j + n] += h6 * (kx[0, i, j] + 2.0 * kx[1, i, j] + 2.0 * kx[2, i, j] + kx[3, i, j])
                y[i + n, j + n] += h6 * (ky[0, i, j] + 2.0 * ky[1, i, j] + 2.0 * ky[2, i, j] + ky[3, i, j])

        # Hermiticity enforcement: rho <- (rho + rho^dagger) / 2
        tr = 0.0
        for i in range(m):
            y[i + n, i + n] = 0.0
            tr += x[i + n, i + n]
            for j in range(i + 1, m):
                u = x[i + n, j + n]
                v = x[j + n, i + n]
                p = y[i + n, j + n]
                q = y[j + n, i + n]
                r = abs(u - v)
                if r > drift:
                    drift = r
                r = abs(p + q)
                if r > drift:
                    drift = r
                s = 0.5 * (u + v)
                x[i + n, j + n] = s
                x[j + n, i + n] = s
                s = 0.5 * (p - q)
                y[i + n, j + n] = s
                y[j + n, i + n] = -s
        if not np.isfinite(tr):
            status = NONFINITE
            fail_time = t + h
            break
        dev = abs(tr - 1.0)
        if dev > trace_dev:
            trace_dev = dev

    xf = x[n:n + m, n:n + m].copy()
    yf = y[n:n + m, n:n + m].copy()
    return (pops[:sample], traces[:sample], purities[:sample], snap_x[:snap],
            snap_y[:snap], xf, yf, drift, trace_dev, status, fail_time)

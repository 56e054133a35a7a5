"""Compiled inner loops for geodesic flow, shooting and projection solves.

All kernels take the metric packed as ``mk = (kind, scale, C, Cx, Cy, CL)``
(see :meth:`hproj.metric.ConformalMetric.packed`) and the domain box as a
length-4 array ``(xmin, ymin, xmax, ymax)``.

The geodesic state is integrated in g-arc-length together with two scalar
Jacobi fields along the curve: ``ja`` with ``ja(0)=1, ja'(0)=0`` and ``jb``
with ``jb(0)=0, jb'(0)=1``.  In two dimensions every normal Jacobi field is
``j(t) E(t)`` with ``E`` the parallel unit normal, so these two scalars give
exact derivatives of both the exponential map and the Fermi chart of a line.
"""
import math

import numpy as np
from numba import njit

OK = 0
EXITED = 1
NO_CONVERGENCE = 2
EXTENT = 3

_jit = njit(cache=True, nogil=True)


@_jit
def _poly(C, x, y):
    m, n = C.shape
    acc = 0.0
    for i in range(m - 1, -1, -1):
        row = 0.0
        for j in range(n - 1, -1, -1):
            row = row * y + C[i, j]
        acc = acc * x + row
    return acc


@_jit
def lam(mk, x, y):
    kind = mk[0]
    if kind == 0:
        return 0.0
    if kind == 1:
        return 0.5 * mk[1] * (x * x + y * y)
    return _poly(mk[2], x, y)


@_jit
def grad_lam(mk, x, y):
    kind = mk[0]
    if kind == 0:
        return 0.0, 0.0
    if kind == 1:
        return mk[1] * x, mk[1] * y
    return _poly(mk[3], x, y), _poly(mk[4], x, y)


@_jit
def lap_lam(mk, x, y):
    kind = mk[0]
    if kind == 0:
        return 0.0
    if kind == 1:
        return 2.0 * mk[1]
    return _poly(mk[5], x, y)


@_jit
def _rhs(mk, x, y, vx, vy, ja, jad, jb, jbd):
    kind = mk[0]
    if kind == 0:
        return vx, vy, 0.0, 0.0, jad, 0.0, jbd, 0.0
    if kind == 1:
        a = mk[1]
        lx = a * x
        ly = a * y
        L = 0.5 * a * (x * x + y * y)
        D = 2.0 * a
    else:
        L = _poly(mk[2], x, y)
        lx = _poly(mk[3], x, y)
        ly = _poly(mk[4], x, y)
        D = _poly(mk[5], x, y)
    dot = lx * vx + ly * vy
    v2 = vx * vx + vy * vy
    ax = v2 * lx - 2.0 * dot * vx
    ay = v2 * ly - 2.0 * dot * vy
    # -K for the conformal metric; Jacobi equation j'' = -K j in arc length
    mK = D * math.exp(-2.0 * L)
    return vx, vy, ax, ay, jad, mK * ja, jbd, mK * jb


@_jit
def _rk4(mk, x, y, vx, vy, ja, jad, jb, jbd, h):
    k1 = _rhs(mk, x, y, vx, vy, ja, jad, jb, jbd)
    h2 = 0.5 * h
    k2 = _rhs(mk, x + h2 * k1[0], y + h2 * k1[1], vx + h2 * k1[2], vy + h2 * k1[3],
              ja + h2 * k1[4], jad + h2 * k1[5], jb + h2 * k1[6], jbd + h2 * k1[7])
    k3 = _rhs(mk, x + h2 * k2[0], y + h2 * k2[1], vx + h2 * k2[2], vy + h2 * k2[3],
              ja + h2 * k2[4], jad + h2 * k2[5], jb + h2 * k2[6], jbd + h2 * k2[7])
    k4 = _rhs(mk, x + h * k3[0], y + h * k3[1], vx + h * k3[2], vy + h * k3[3],
              ja + h * k3[4], jad + h * k3[5], jb + h * k3[6], jbd + h * k3[7])
    h6 = h / 6.0
    return (x + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            vx + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            vy + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
            ja + h6 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]),
            jad + h6 * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5]),
            jb + h6 * (k1[6] + 2.0 * k2[6] + 2.0 * k3[6] + k4[6]),
            jbd + h6 * (k1[7] + 2.0 * k2[7] + 2.0 * k3[7] + k4[7]))


@_jit
def _inside(box, x, y):
    return box[0] <= x <= box[2] and box[1] <= y <= box[3]


@_jit
def flow(mk, box, x, y, vx, vy, L, h):
    """Integrate the unit-speed geodesic from (x, y) with velocity (vx, vy) for length L.

    Full steps of size h followed by one partial step, so the endpoint is a
    continuous function of L.  Returns
    ``(status, t_exit, x, y, vx, vy, ja, jad, jb, jbd)``.
    """
    ja, jad, jb, jbd = 1.0, 0.0, 0.0, 1.0
    if not _inside(box, x, y):
        return EXITED, 0.0, x, y, vx, vy, ja, jad, jb, jbd
    if L <= 0.0:
        return OK, 0.0, x, y, vx, vy, ja, jad, jb, jbd
    if mk[0] == 0:
        ex = x + L * vx
        ey = y + L * vy
        if not _inside(box, ex, ey):
            # first exit parameter of the straight segment
            te = L
            if vx > 0.0:
                te = min(te, (box[2] - x) / vx)
            elif vx < 0.0:
                te = min(te, (box[0] - x) / vx)
            if vy > 0.0:
                te = min(te, (box[3] - y) / vy)
            elif vy < 0.0:
                te = min(te, (box[1] - y) / vy)
            return EXITED, te, x + te * vx, y + te * vy, vx, vy, 1.0, 0.0, te, 1.0
        return OK, L, ex, ey, vx, vy, 1.0, 0.0, L, 1.0
    n = int(L / h)
    rem = L - n * h
    t = 0.0
    for _ in range(n):
        x, y, vx, vy, ja, jad, jb, jbd = _rk4(mk, x, y, vx, vy, ja, jad, jb, jbd, h)
        t += h
        if not _inside(box, x, y):
            return EXITED, t, x, y, vx, vy, ja, jad, jb, jbd
    if rem > 1e-15:
        x, y, vx, vy, ja, jad, jb, jbd = _rk4(mk, x, y, vx, vy, ja, jad, jb, jbd, rem)
        if not _inside(box, x, y):
            return EXITED, L, x, y, vx, vy, ja, jad, jb, jbd
    return OK, L, x, y, vx, vy, ja, jad, jb, jbd


@_jit
def flow_path(mk, box, x, y, vx, vy, L, h):
    """Same stepping as :func:`flow`, recording every sample.

    Returns ``(status, count, out)`` where ``out[:count]`` holds rows
    ``(t, x, y, vx, vy)``.
    """
    n = int(L / h) if L > 0.0 else 0
    rem = L - n * h if L > 0.0 else 0.0
    extra = 1 if rem > 1e-15 else 0
    out = np.empty((n + 1 + extra, 5))
    out[0, 0] = 0.0
    out[0, 1] = x
    out[0, 2] = y
    out[0, 3] = vx
    out[0, 4] = vy
    if not _inside(box, x, y):
        return EXITED, 1, out
    ja, jad, jb, jbd = 1.0, 0.0, 0.0, 1.0
    t = 0.0
    for k in range(n + extra):
        step = h if k < n else rem
        x, y, vx, vy, ja, jad, jb, jbd = _rk4(mk, x, y, vx, vy, ja, jad, jb, jbd, step)
        t = (k + 1) * h if k < n else L
        out[k + 1, 0] = t
        out[k + 1, 1] = x
        out[k + 1, 2] = y
        out[k + 1, 3] = vx
        out[k + 1, 4] = vy
        if not _inside(box, x, y):
            return EXITED, k + 2, out
    return OK, n + 1 + extra, out


# ---------------------------------------------------------------------------
# exponential / logarithm


@_jit
def log_map(mk, box, px, py, qx, qy, h, tol, maxit):
    """Solve exp_p(w) = q by Newton in (length, angle) with Jacobi derivatives.

    Returns ``(status, rho, wx, wy, iterations, residual)`` with w the chart
    components of log_p(q) and rho its g-norm.
    """
    dx = qx - px
    dy = qy - py
    de = math.hypot(dx, dy)
    if de == 0.0:
        return OK, 0.0, 0.0, 0.0, 0, 0.0
    ep = math.exp(lam(mk, px, py))
    rho = ep * de
    phi = math.atan2(dy, dx)
    st = EXITED
    for _ in range(60):
        r = flow(mk, box, px, py, math.cos(phi) / ep, math.sin(phi) / ep, rho, h)
        st = r[0]
        if st == OK:
            break
        rho *= 0.5
    if st != OK:
        return EXITED, rho, 0.0, 0.0, 0, math.inf
    fx, fy, tx, ty, jb = r[2], r[3], r[4], r[5], r[8]
    res = math.hypot(qx - fx, qy - fy)
    it = 0
    while it < maxit:
        if res <= tol:
            break
        it += 1
        ex = qx - fx
        ey = qy - fy
        t2 = tx * tx + ty * ty
        drho = (ex * tx + ey * ty) / t2
        dphi = (ex * (-ty) + ey * tx) / (jb * t2)
        if abs(dphi) > 0.5:
            drho *= 0.5 / abs(dphi)
            dphi = math.copysign(0.5, dphi)
        alpha = 1.0
        accepted = False
        while alpha > 1e-9:
            rn = rho + alpha * drho
            if rn <= 0.0:
                alpha *= 0.5
                continue
            pn = phi + alpha * dphi
            r = flow(mk, box, px, py, math.cos(pn) / ep, math.sin(pn) / ep, rn, h)
            if r[0] == OK:
                resn = math.hypot(qx - r[2], qy - r[3])
                if resn < res:
                    rho, phi, res = rn, pn, resn
                    fx, fy, tx, ty, jb = r[2], r[3], r[4], r[5], r[8]
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
    status = OK if res <= max(tol, 1e-10) else NO_CONVERGENCE
    c = rho / ep
    return status, rho, c * math.cos(phi), c * math.sin(phi), it, res


# ---------------------------------------------------------------------------
# projection onto a line of the pencil


@_jit
def _line_point(mk, box, px, py, vx, vy, s, h, table_pos, table_neg, use_table):
    """Point l(s) and tangent dl/ds of the unit-speed line exp_p(s v)."""
    a = abs(s)
    sg = 1.0 if s >= 0.0 else -1.0
    if use_table:
        tab = table_pos if s >= 0.0 else table_neg
        m = tab.shape[0] - 1
        k = int(a / h)
        if k > m:
            return EXTENT, 0.0, 0.0, 0.0, 0.0
        x, y, ux, uy = tab[k, 0], tab[k, 1], tab[k, 2], tab[k, 3]
        rem = a - k * h
        if rem > 1e-15:
            x, y, ux, uy, _, _, _, _ = _rk4(mk, x, y, ux, uy, 1.0, 0.0, 0.0, 1.0, rem)
            if not _inside(box, x, y):
                return EXITED, x, y, sg * ux, sg * uy
        return OK, x, y, sg * ux, sg * uy
    r = flow(mk, box, px, py, sg * vx, sg * vy, a, h)
    return r[0], r[2], r[3], sg * r[4], sg * r[5]


@_jit
def line_table(mk, box, px, py, vx, vy, extent, h, sign):
    """Samples of the line at s = sign * k * h, k = 0..ceil(extent/h)."""
    m = int(math.ceil(extent / h))
    tab = np.empty((m + 1, 4))
    x, y, ux, uy = px, py, sign * vx, sign * vy
    ja, jad, jb, jbd = 1.0, 0.0, 0.0, 1.0
    tab[0, 0], tab[0, 1], tab[0, 2], tab[0, 3] = x, y, ux, uy
    last = 0
    for k in range(m):
        x, y, ux, uy, ja, jad, jb, jbd = _rk4(mk, x, y, ux, uy, ja, jad, jb, jbd, h)
        if not _inside(box, x, y):
            break
        tab[k + 1, 0], tab[k + 1, 1], tab[k + 1, 2], tab[k + 1, 3] = x, y, ux, uy
        last = k + 1
    return tab[:last + 1].copy()


@_jit
def _fermi(mk, box, px, py, vx, vy, s, r, h, tp, tn, use_table):
    """F(s, r) = exp_{l(s)}(r n(s)) with unit tangent dF/dr and the ja factor of dF/ds."""
    st, lx, ly, tx, ty = _line_point(mk, box, px, py, vx, vy, s, h, tp, tn, use_table)
    if st != OK:
        return st, 0.0, 0.0, 0.0, 0.0, 1.0
    nx = -ty
    ny = tx
    if r >= 0.0:
        f = flow(mk, box, lx, ly, nx, ny, r, h)
        return f[0], f[2], f[3], f[4], f[5], f[6]
    f = flow(mk, box, lx, ly, -nx, -ny, -r, h)
    return f[0], f[2], f[3], -f[4], -f[5], f[6]


@_jit
def foot_solve(mk, box, px, py, vx, vy, qx, qy, s0, r0, h, extent, tol, accept_tol,
               maxit, tp, tn, use_table):
    """Newton solve of F(s, r) = q in the Fermi chart of the line through p along v.

    The derivative of F is [-ja J T, T] with T the unit tangent of the normal
    geodesic at q and J the quarter turn, so each Newton step needs one shot.
    Returns ``(status, s, r, iterations, residual, Tx, Ty, ja)``.  If the
    residual drops below ``accept_tol`` the final correction is applied
    without a confirming shot (its error is quadratic in that residual).
    """
    s = min(max(s0, -extent), extent)
    r = r0
    st, fx, fy, tx, ty, ja = _fermi(mk, box, px, py, vx, vy, s, r, h, tp, tn, use_table)
    if st != OK:
        s = 0.0
        r = 0.0
        st, fx, fy, tx, ty, ja = _fermi(mk, box, px, py, vx, vy, s, r, h, tp, tn, use_table)
        if st != OK:
            return st, s, r, 0, math.inf, 0.0, 0.0, 1.0
    res = math.hypot(qx - fx, qy - fy)
    it = 0
    hit_extent = False
    while it < maxit:
        if res <= tol:
            return OK, s, r, it, res, tx, ty, ja
        it += 1
        ex = qx - fx
        ey = qy - fy
        t2 = tx * tx + ty * ty
        dr = (ex * tx + ey * ty) / t2
        ds = -(ex * (-ty) + ey * tx) / (ja * t2)
        if res <= accept_tol:
            return OK, s + ds, r + dr, it, res, tx, ty, ja
        big = max(abs(ds), abs(dr))
        if big > 1.0:
            ds /= big
            dr /= big
        alpha = 1.0
        accepted = False
        while alpha > 1e-9:
            sn = s + alpha * ds
            if abs(sn) > extent:
                hit_extent = True
                alpha *= 0.5
                continue
            rn = r + alpha * dr
            g = _fermi(mk, box, px, py, vx, vy, sn, rn, h, tp, tn, use_table)
            if g[0] == OK:
                resn = math.hypot(qx - g[1], qy - g[2])
                if resn < res:
                    s, r, res = sn, rn, resn
                    fx, fy, tx, ty, ja = g[1], g[2], g[3], g[4], g[5]
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
    if res <= max(tol, 1e-10):
        return OK, s, r, it, res, tx, ty, ja
    status = EXTENT if hit_extent else NO_CONVERGENCE
    return status, s, r, it, res, tx, ty, ja


@_jit
def _chart_guess(mk, px, py, vx, vy, qx, qy):
    ep = math.exp(lam(mk, px, py))
    # v has g-norm one, so its chart length is 1/ep
    dx = qx - px
    dy = qy - py
    s = ep * ep * (dx * vx + dy * vy)
    r = ep * ep * (dx * (-vy) + dy * vx)
    return s, r


_EMPTY = np.zeros((1, 4))


@_jit
def project_profile(mk, box, px, py, e1x, e1y, e2x, e2y, thetas, qx, qy, h, extent, tol,
                    maxit):
    """Project one point onto the lines l_theta for a sequence of angles.

    Each solve is warm-started from the previous angle's foot.
    Returns arrays (status, s, r, iterations).
    """
    n = thetas.shape[0]
    status = np.empty(n, dtype=np.int64)
    s_out = np.empty(n)
    r_out = np.empty(n)
    it_out = np.empty(n, dtype=np.int64)
    tab = np.zeros((1, 4))
    have = False
    s_prev = 0.0
    r_prev = 0.0
    for i in range(n):
        c = math.cos(thetas[i])
        sn = math.sin(thetas[i])
        vx = c * e1x + sn * e2x
        vy = c * e1y + sn * e2y
        if have:
            s0, r0 = s_prev, r_prev
        else:
            s0, r0 = _chart_guess(mk, px, py, vx, vy, qx, qy)
        out = foot_solve(mk, box, px, py, vx, vy, qx, qy, s0, r0, h, extent, tol, 0.0,
                         maxit, tab, tab, False)
        if out[0] != OK and have:
            s0, r0 = _chart_guess(mk, px, py, vx, vy, qx, qy)
            out = foot_solve(mk, box, px, py, vx, vy, qx, qy, s0, r0, h, extent, tol, 0.0,
                             maxit, tab, tab, False)
        status[i] = out[0]
        s_out[i] = out[1]
        r_out[i] = out[2]
        it_out[i] = out[3]
        have = out[0] == OK
        if have:
            s_prev, r_prev = out[1], out[2]
    return status, s_out, r_out, it_out


@_jit
def project_batch(mk, box, px, py, vx, vy, Q, h, extent, tol, accept_tol, maxit):
    """Project many points onto one line, sharing a tabulated line.

    Points are solved in order; each solve is predicted from the previous
    solution with one linearized step, which is cheap when consecutive
    points are close (e.g. cells in lexicographic word order).
    Returns arrays (status, s, r, iterations).
    """
    tp = line_table(mk, box, px, py, vx, vy, extent, h, 1.0)
    tn = line_table(mk, box, px, py, vx, vy, extent, h, -1.0)
    n = Q.shape[0]
    status = np.empty(n, dtype=np.int64)
    s_out = np.empty(n)
    r_out = np.empty(n)
    it_out = np.empty(n, dtype=np.int64)
    have = False
    sp = rp = 0.0
    txp = typ = 0.0
    jap = 1.0
    qxp = qyp = 0.0
    for i in range(n):
        qx = Q[i, 0]
        qy = Q[i, 1]
        if have:
            ex = qx - qxp
            ey = qy - qyp
            t2 = txp * txp + typ * typ
            s0 = sp - (ex * (-typ) + ey * txp) / (jap * t2)
            r0 = rp + (ex * txp + ey * typ) / t2
        else:
            s0, r0 = _chart_guess(mk, px, py, vx, vy, qx, qy)
        out = foot_solve(mk, box, px, py, vx, vy, qx, qy, s0, r0, h, extent, tol,
                         accept_tol, maxit, tp, tn, True)
        if out[0] != OK and have:
            s0, r0 = _chart_guess(mk, px, py, vx, vy, qx, qy)
            out = foot_solve(mk, box, px, py, vx, vy, qx, qy, s0, r0, h, extent, tol,
                             accept_tol, maxit, tp, tn, True)
        status[i] = out[0]
        s_out[i] = out[1]
        r_out[i] = out[2]
        it_out[i] = out[3]
        have = out[0] == OK
        if have:
            sp, rp = out[1], out[2]
            txp, typ, jap = out[5], out[6], out[7]
            qxp, qyp = qx, qy
    return status, s_out, r_out, it_out


@_jit
def fourier_energy_sum(s, w, dp, K):
    """Sum_k |sum_j w_j exp(-i s_j p_k)|^2 for p_k = k dp, k = 0..K (raw, no 2pi factor).

    Phasors advance by recurrence and are re-anchored every 64 steps.
    Returns the array of |.|^2 values.
    """
    n = s.shape[0]
    zr = np.ones(n)
    zi = np.zeros(n)
    cr = np.empty(n)
    ci = np.empty(n)
    for j in range(n):
        cr[j] = math.cos(s[j] * dp)
        ci[j] = -math.sin(s[j] * dp)
    out = np.empty(K + 1)
    for k in range(K + 1):
        if k > 0:
            if k % 64 == 0:
                p = k * dp
                for j in range(n):
                    zr[j] = math.cos(s[j] * p)
                    zi[j] = -math.sin(s[j] * p)
            else:
                for j in range(n):
                    a = zr[j] * cr[j] - zi[j] * ci[j]
                    zi[j] = zr[j] * ci[j] + zi[j] * cr[j]
                    zr[j] = a
        re = 0.0
        im = 0.0
        for j in range(n):
            re += w[j] * zr[j]
            im += w[j] * zi[j]
        out[k] = re * re + im * im
    return out

"""Vectorized evaluation kernels, pure numpy backend.

Same evaluation strategy as specfun.hankel01, applied to whole arrays:
points are banded by |z|, each band runs its algorithm with a
convergence mask, and the lower half plane is reflected through the
real axis. The compiled backend in _kernels mirrors this module
function for function; kernels.py picks one at import time.
"""

import numpy as np

from .errors import DomainError, NumericalError

EULER_GAMMA = 0.5772156649015328606

_SERIES_RADIUS = 3.5
_ASYMPTOTIC_RADIUS = 16.0


def _j01_series(z):
    q = 0.25 * z * z
    t0 = np.ones_like(z)
    t1 = np.ones_like(z)
    s0 = t0.copy()
    s1 = t1.copy()
    for k in range(1, 200):
        t0 = t0 * -q / (k * k)
        t1 = t1 * -q / (k * (k + 1))
        s0 += t0
        s1 += t1
        if (np.abs(t0) < 1e-18 * np.abs(s0)).all() \
                and (np.abs(t1) < 1e-18 * np.abs(s1)).all():
            break
    return s0, 0.5 * z * s1


def _y01_series(z, j0, j1):
    q = 0.25 * z * z
    lg = np.log(0.5 * z) + EULER_GAMMA
    t = np.ones_like(z)
    s = np.zeros_like(z)
    hk = 0.0
    for k in range(1, 200):
        t = t * q / (k * k)
        hk += 1.0 / k
        s += -hk * t if k % 2 == 0 else hk * t
        if (np.abs(t) * (hk + 1.0) <
                1e-18 * np.maximum(np.abs(s), 1e-300)).all():
            break
    y0 = (2.0 / np.pi) * (lg * j0 + s)
    t = np.ones_like(z)
    s = np.zeros_like(z)
    hk = 0.0
    for k in range(0, 200):
        if k > 0:
            t = t * -q / (k * (k + 1))
            hk += 1.0 / k
        s += (-2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (k + 1)) * t
        if k > 2 and (np.abs(t) * 4.0 <
                      1e-18 * np.maximum(np.abs(s), 1e-300)).all():
            break
    y1 = (2.0 / np.pi) * np.log(0.5 * z) * j1 - 2.0 / (np.pi * z) \
        - (z / (2.0 * np.pi)) * s
    return y0, y1


def _miller_j01(z):
    az = float(np.abs(z).max())
    m_start = max(1, int(az) + 1) + 18 + int(8.0 * max(az, 1.0) ** (1.0 / 3.0))
    jp = np.zeros_like(z)
    jc = np.ones_like(z)
    u = np.where(z.imag >= 0, -1j, 1j).astype(np.complex128)
    u_m = u ** (m_start % 4)
    norm = np.zeros_like(z)
    two_over_z = 2.0 / z
    for m in range(m_start, 0, -1):
        jp, jc = jc, m * two_over_z * jc - jp
        norm += u_m * jp
        u_m = u_m / u
        big = np.maximum(np.abs(jc.real), np.abs(jc.imag)) > 1e250
        if big.any():
            jp[big] *= 1e-250
            jc[big] *= 1e-250
            norm[big] *= 1e-250
        if m == 1:
            j0 = jc
            j1 = jp
    norm = 2.0 * norm + j0
    target = np.exp(-1j * np.where(z.imag >= 0, z, -z))
    scale = target / norm
    return j0 * scale, j1 * scale


def _cf2_h0_ratio(z):
    tiny = 1e-290
    f = np.full(z.shape, tiny, dtype=np.complex128)
    c = f.copy()
    d = np.zeros_like(z)
    done = np.zeros(z.shape, dtype=bool)
    for j in range(1, 400):
        a = (j - 0.5) ** 2
        b = 2.0 * (z + 1j * j)
        d = b + a * d
        d[d == 0] = tiny
        c = b + a / c
        c[c == 0] = tiny
        d = 1.0 / d
        delta = c * d
        f = np.where(done, f, f * delta)
        done |= np.abs(delta - 1.0) < 1e-16
        if done.all():
            break
    else:
        raise NumericalError("continued fraction did not converge")
    return 1j - 0.5 / z + (1j / z) * f


def _h01_asymptotic(z):
    zi = 1.0 / z
    out = []
    for nu, phase in ((0, np.exp(1j * (z - 0.25 * np.pi))),
                      (1, np.exp(1j * (z - 0.75 * np.pi)))):
        mu = 4.0 * nu * nu
        term = np.ones_like(z)
        total = np.ones_like(z)
        best = np.abs(term)
        active = np.ones(z.shape, dtype=bool)
        for k in range(0, 60):
            term = term * (1j * (mu - (2 * k + 1) ** 2) / (8.0 * (k + 1))) * zi
            mag = np.abs(term)
            active &= mag < best
            total = np.where(active, total + term, total)
            best = np.where(active, mag, best)
            active &= mag >= 1e-17 * np.abs(total)
            if not active.any():
                break
        out.append(np.sqrt(2.0 * zi / np.pi) * phase * total)
    return out[0], out[1]


def hankel01(z):
    """H_0^(1)(z), H_1^(1)(z) elementwise; z off the cut (-inf, 0]."""
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    zf = z.ravel()
    if zf.size == 0:
        return (np.empty(shape, np.complex128),
                np.empty(shape, np.complex128))
    if not np.isfinite(zf).all() \
            or ((zf.imag == 0.0) & (zf.real <= 0.0)).any():
        raise DomainError(
            "argument on the branch cut (-inf, 0] or non-finite")
    lower = zf.imag < 0.0
    w = np.where(lower, zf.conj(), zf)
    az = np.abs(w)
    h0 = np.empty_like(w)
    h1 = np.empty_like(w)
    j0 = np.empty_like(w)
    j1 = np.empty_like(w)
    small = az <= _SERIES_RADIUS
    big = az > _ASYMPTOTIC_RADIUS
    mid = ~small & ~big
    if small.any():
        a, b = _j01_series(w[small])
        y0, y1 = _y01_series(w[small], a, b)
        h0[small] = a + 1j * y0
        h1[small] = b + 1j * y1
        j0[small] = a
        j1[small] = b
    if mid.any():
        a, b = _miller_j01(w[mid])
        g0 = _cf2_h0_ratio(w[mid])
        hm0 = (2j / (np.pi * w[mid])) / (a * g0 + b)
        h0[mid] = hm0
        h1[mid] = -g0 * hm0
        j0[mid] = a
        j1[mid] = b
    if big.any():
        h0[big], h1[big] = _h01_asymptotic(w[big])
        refl = big & lower
        if refl.any():
            j0[refl], j1[refl] = _miller_j01(w[refl])
    if lower.any():
        h0 = np.where(lower, 2.0 * j0.conj() - h0.conj(), h0)
        h1 = np.where(lower, 2.0 * j1.conj() - h1.conj(), h1)
    return h0.reshape(shape), h1.reshape(shape)


def mixed_layer_eval(px, py, qx, qy, nx, ny, ca, cb, k, cutoff):
    """Monopole plus dipole sums over source nodes at each point.

    out[i] = sum_q [ ca[q] H_0(k r_iq)
                     + cb[q] H_1(k r_iq) ((p_i - q) . n_q) / r_iq ]

    Physical prefactors (i/4, k, quadrature weights) belong in ca, cb.
    Pairs with Im(k) r > cutoff are skipped: H decays like e^{-Im(k) r}
    and contributes nothing at that range. Points must not coincide
    with nodes.
    """
    px = np.ascontiguousarray(px, dtype=np.float64).ravel()
    py = np.ascontiguousarray(py, dtype=np.float64).ravel()
    qx = np.ascontiguousarray(qx, dtype=np.float64).ravel()
    qy = np.ascontiguousarray(qy, dtype=np.float64).ravel()
    nx = np.ascontiguousarray(nx, dtype=np.float64).ravel()
    ny = np.ascontiguousarray(ny, dtype=np.float64).ravel()
    ca = np.ascontiguousarray(ca, dtype=np.complex128).ravel()
    cb = np.ascontiguousarray(cb, dtype=np.complex128).ravel()
    k = complex(k)
    out = np.zeros(px.shape, dtype=np.complex128)
    if px.size == 0 or qx.size == 0:
        return out
    chunk = max(1, 500_000 // qx.size)
    for s in range(0, px.size, chunk):
        e = min(s + chunk, px.size)
        dx = px[s:e, None] - qx[None, :]
        dy = py[s:e, None] - qy[None, :]
        r = np.hypot(dx, dy)
        keep = k.imag * r <= cutoff
        h0 = np.zeros(r.shape, dtype=np.complex128)
        h1 = np.zeros(r.shape, dtype=np.complex128)
        h0[keep], h1[keep] = hankel01(k * r[keep])
        dot = (dx * nx[None, :] + dy * ny[None, :]) / r
        out[s:e] = h0 @ ca + (h1 * dot) @ cb
    return out


def multipole_eval(px, py, cx, cy, coef, k, cutoff):
    """Sum of outgoing cylindrical-wave expansions at each point.

    out[i] = sum_j sum_{m=-M}^{M} coef[j, M+m] H_m(k r_ij) e^{i m th_ij}

    with (r_ij, th_ij) the polar offset of point i from center j.
    Negative orders fold through H_{-m} = (-1)^m H_m. Devices with
    Im(k) r > cutoff at a point are skipped there. Points must not
    coincide with a center.
    """
    px = np.ascontiguousarray(px, dtype=np.float64).ravel()
    py = np.ascontiguousarray(py, dtype=np.float64).ravel()
    cx = np.ascontiguousarray(cx, dtype=np.float64).ravel()
    cy = np.ascontiguousarray(cy, dtype=np.float64).ravel()
    coef = np.ascontiguousarray(coef, dtype=np.complex128)
    k = complex(k)
    if coef.ndim != 2 or coef.shape[0] != cx.size or coef.shape[1] % 2 != 1:
        raise ValueError("coef must have shape (n_centers, 2 M + 1)")
    m_top = (coef.shape[1] - 1) // 2
    out = np.zeros(px.shape, dtype=np.complex128)
    for j in range(cx.size):
        dx = px - cx[j]
        dy = py - cy[j]
        r = np.hypot(dx, dy)
        keep = k.imag * r <= cutoff
        if not keep.any():
            continue
        z = k * r[keep]
        h0, h1 = hankel01(z)
        acc = coef[j, m_top] * h0
        if m_top >= 1:
            ph = (dx[keep] + 1j * dy[keep]) / r[keep]
            ej = ph.copy()
            hm, hc = h0, h1
            sgn = -1.0
            for m in range(1, m_top + 1):
                if m > 1:
                    hm, hc = hc, (2.0 * (m - 1) / z) * hc - hm
                acc += hc * (coef[j, m_top + m] * ej
                             + sgn * coef[j, m_top - m] * ej.conj())
                ej *= ph
                sgn = -sgn
        out[keep] += acc
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels.

Mirrors _kernels_py function for function; see that module for the
algorithm notes. Scalar C loops instead of numpy banding, which is
what makes the transient pipeline's ~1e9 Hankel evaluations viable.
Convergence tests use the 1-norm |re| + |im| (within sqrt(2) of the
modulus, with orders of magnitude of slack in every threshold) to keep
hypot out of the inner loops, and divisions by O(1) complex quantities
go through an explicit reciprocal for the same reason.
"""

import numpy as np

cimport numpy as cnp

from .errors import DomainError, NumericalError

cnp.import_array()

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex cexp(double complex)
    double complex clog(double complex)
    double complex csqrt(double complex)
    double complex conj(double complex)

cdef extern from "math.h" nogil:
    double hypot(double, double)
    double fabs(double)
    double cbrt(double)
    bint isfinite(double)
    double M_PI

cdef double EULER_GAMMA = 0.5772156649015328606
cdef double SERIES_RADIUS = 3.5
cdef double ASYMPTOTIC_RADIUS = 16.0

# status codes from the scalar evaluator
cdef enum:
    OK = 0
    ERR_CUT = 1
    ERR_CONVERGENCE = 2


cdef inline double _mag1(double complex w) noexcept nogil:
    return fabs(w.real) + fabs(w.imag)


cdef inline double complex _recip(double complex w) noexcept nogil:
    # plain formula when |w|^2 cannot over- or underflow (the usual
    # case here); the library division handles the rest, notably the
    # 1e-290 guard value of the Lentz iteration
    cdef double m = fabs(w.real) + fabs(w.imag)
    if m < 1e-150 or m > 1e150:
        return 1.0 / w
    cdef double s = 1.0 / (w.real * w.real + w.imag * w.imag)
    return (w.real * s) - 1j * (w.imag * s)


cdef void _j01_series(double complex z, double complex* j0,
                      double complex* j1) noexcept nogil:
    cdef double complex q = 0.25 * z * z
    cdef double complex t0 = 1.0, t1 = 1.0, s0 = 1.0, s1 = 1.0
    cdef int k
    for k in range(1, 200):
        t0 = t0 * q * (-1.0 / (k * k))
        t1 = t1 * q * (-1.0 / (k * (k + 1)))
        s0 = s0 + t0
        s1 = s1 + t1
        if _mag1(t0) < 1e-18 * _mag1(s0) and _mag1(t1) < 1e-18 * _mag1(s1):
            break
    j0[0] = s0
    j1[0] = 0.5 * z * s1


cdef void _y01_series(double complex z, double complex j0,
                      double complex j1, double complex* y0,
                      double complex* y1) noexcept nogil:
    cdef double complex q = 0.25 * z * z
    cdef double complex lg = clog(0.5 * z) + EULER_GAMMA
    cdef double complex t = 1.0, s = 0.0
    cdef double hk = 0.0
    cdef int k
    for k in range(1, 200):
        t = t * q * (1.0 / (k * k))
        hk += 1.0 / k
        if k % 2 == 0:
            s = s - hk * t
        else:
            s = s + hk * t
        if _mag1(t) * (hk + 1.0) < 1e-18 * max(_mag1(s), 1e-300):
            break
    y0[0] = (2.0 / M_PI) * (lg * j0 + s)
    t = 1.0
    s = 0.0
    hk = 0.0
    for k in range(0, 200):
        if k > 0:
            t = t * q * (-1.0 / (k * (k + 1)))
            hk += 1.0 / k
        s = s + (-2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (k + 1)) * t
        if k > 2 and _mag1(t) * 4.0 < 1e-18 * max(_mag1(s), 1e-300):
            break
    y1[0] = (2.0 / M_PI) * clog(0.5 * z) * j1 - 2.0 / (M_PI * z) \
        - (z / (2.0 * M_PI)) * s


cdef void _miller_j01(double complex z, double complex* j0,
                      double complex* j1) noexcept nogil:
    cdef double az = cabs(z)
    cdef int base = max(1, <int>az + 1)
    cdef int m_start = base + 18 + <int>(8.0 * cbrt(max(az, 1.0)))
    cdef double complex jp = 0.0, jc = 1.0, jm
    cdef double complex u = -1j if z.imag >= 0 else 1j
    cdef double complex u_inv = conj(u)
    cdef double complex u_m = u ** (m_start % 4)
    cdef double complex norm = 0.0, a0 = 0.0, a1 = 0.0
    cdef double complex two_over_z = 2.0 / z
    cdef int m
    for m in range(m_start, 0, -1):
        jm = m * two_over_z * jc - jp
        jp = jc
        jc = jm
        norm = norm + u_m * jp
        u_m = u_m * u_inv
        if fabs(jc.real) > 1e250 or fabs(jc.imag) > 1e250:
            jp = jp * 1e-250
            jc = jc * 1e-250
            norm = norm * 1e-250
        if m == 1:
            a0 = jc
            a1 = jp
    norm = 2.0 * norm + a0
    cdef double complex target
    if z.imag >= 0:
        target = cexp(-1j * z)
    else:
        target = cexp(1j * z)
    cdef double complex scale = target / norm
    j0[0] = a0 * scale
    j1[0] = a1 * scale


cdef int _cf2_h0_ratio(double complex z,
                       double complex* out) noexcept nogil:
    cdef double tiny = 1e-290
    cdef double complex f = tiny, c = tiny, d = 0.0, b, delta
    cdef double a
    cdef int j
    for j in range(1, 400):
        a = (j - 0.5) * (j - 0.5)
        b = 2.0 * (z + 1j * j)
        d = b + a * d
        if d == 0:
            d = tiny
        c = b + a * _recip(c)
        if c == 0:
            c = tiny
        d = _recip(d)
        delta = c * d
        f = f * delta
        # 2.5e-16 rather than 1e-16: the 1-norm sits up to sqrt(2)
        # above the modulus, which would put the stall floor of the
        # iteration out of reach
        if _mag1(delta - 1.0) < 2.5e-16:
            out[0] = 1j - 0.5 / z + (1j / z) * f
            return OK
    return ERR_CONVERGENCE


cdef void _h01_asymptotic(double complex z, double complex* h0,
                          double complex* h1) noexcept nogil:
    cdef double complex zi = 1.0 / z
    cdef double complex phase, term, total
    cdef double mu, mag, best
    cdef int nu, k
    for nu in range(2):
        if nu == 0:
            phase = cexp(1j * (z - 0.25 * M_PI))
        else:
            phase = cexp(1j * (z - 0.75 * M_PI))
        mu = 4.0 * nu * nu
        term = 1.0
        total = 1.0
        best = 1.0
        for k in range(0, 60):
            term = term * zi * (1j * ((mu - (2 * k + 1) * (2 * k + 1))
                                      / (8.0 * (k + 1))))
            mag = _mag1(term)
            if mag >= best:
                break
            total = total + term
            best = mag
            if mag < 1e-17 * _mag1(total):
                break
        if nu == 0:
            h0[0] = csqrt(2.0 * zi / M_PI) * phase * total
        else:
            h1[0] = csqrt(2.0 * zi / M_PI) * phase * total


cdef int _h01(double complex z, double complex* h0,
              double complex* h1) noexcept nogil:
    if not (isfinite(z.real) and isfinite(z.imag)):
        return ERR_CUT
    if z.imag == 0.0 and z.real <= 0.0:
        return ERR_CUT
    cdef bint lower = z.imag < 0.0
    cdef double complex w = conj(z) if lower else z
    cdef double az = cabs(w)
    cdef double complex a0, a1, y0, y1, g0
    cdef int status
    if az <= SERIES_RADIUS:
        _j01_series(w, &a0, &a1)
        _y01_series(w, a0, a1, &y0, &y1)
        h0[0] = a0 + 1j * y0
        h1[0] = a1 + 1j * y1
    elif az <= ASYMPTOTIC_RADIUS:
        _miller_j01(w, &a0, &a1)
        status = _cf2_h0_ratio(w, &g0)
        if status != OK:
            return status
        h0[0] = (2j / (M_PI * w)) / (a0 * g0 + a1)
        h1[0] = -g0 * h0[0]
    else:
        _h01_asymptotic(w, h0, h1)
        if lower:
            _miller_j01(w, &a0, &a1)
    if lower:
        h0[0] = 2.0 * conj(a0) - conj(h0[0])
        h1[0] = 2.0 * conj(a1) - conj(h1[0])
    return OK


cdef void _raise_status(int status, double complex z):
    if status == ERR_CUT:
        raise DomainError(
            f"argument {complex(z)!r} on the branch cut (-inf, 0] "
            "or non-finite")
    if status == ERR_CONVERGENCE:
        raise NumericalError(
            f"continued fraction did not converge at z={complex(z)!r}")


def hankel01(z):
    """H_0^(1)(z), H_1^(1)(z) elementwise; z off the cut (-inf, 0]."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zf = \
        np.ascontiguousarray(z, dtype=np.complex128).ravel()
    shape = np.shape(z)
    cdef Py_ssize_t n = zf.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] h0 = \
        np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] h1 = \
        np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t i
    cdef int status = OK
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            status = _h01(zf[i], &h0[i], &h1[i])
            if status != OK:
                bad = i
                break
    if bad >= 0:
        _raise_status(status, zf[bad])
    return h0.reshape(shape), h1.reshape(shape)


def mixed_layer_eval(px, py, qx, qy, nx, ny, ca, cb, k, cutoff):
    """Monopole plus dipole sums over source nodes at each point.

    Same contract as _kernels_py.mixed_layer_eval.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] apx = \
        np.ascontiguousarray(px, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] apy = \
        np.ascontiguousarray(py, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aqx = \
        np.ascontiguousarray(qx, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aqy = \
        np.ascontiguousarray(qy, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] anx = \
        np.ascontiguousarray(nx, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] any_ = \
        np.ascontiguousarray(ny, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] aca = \
        np.ascontiguousarray(ca, dtype=np.complex128).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] acb = \
        np.ascontiguousarray(cb, dtype=np.complex128).ravel()
    cdef double complex kk = k
    cdef double cut = cutoff
    cdef Py_ssize_t npts = apx.shape[0], nq = aqx.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = \
        np.zeros(npts, dtype=np.complex128)
    cdef Py_ssize_t i, q
    cdef double dx, dy, r, rinv, kim = kk.imag
    cdef double complex h0, h1, acc
    cdef int status = OK
    cdef Py_ssize_t bad = -1
    cdef double complex badz = 0.0
    with nogil:
        for i in range(npts):
            acc = 0.0
            for q in range(nq):
                dx = apx[i] - aqx[q]
                dy = apy[i] - aqy[q]
                r = hypot(dx, dy)
                if kim * r > cut:
                    continue
                status = _h01(kk * r, &h0, &h1)
                if status != OK:
                    bad = i
                    badz = kk * r
                    break
                rinv = 1.0 / r
                acc = acc + aca[q] * h0 \
                    + acb[q] * h1 * ((dx * anx[q] + dy * any_[q]) * rinv)
            if bad >= 0:
                break
            out[i] = acc
    if bad >= 0:
        _raise_status(status, badz)
    return out


def multipole_eval(px, py, cx, cy, coef, k, cutoff):
    """Sum of outgoing cylindrical-wave expansions at each point.

    Same contract as _kernels_py.multipole_eval.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] apx = \
        np.ascontiguousarray(px, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] apy = \
        np.ascontiguousarray(py, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acx = \
        np.ascontiguousarray(cx, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acy = \
        np.ascontiguousarray(cy, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] acoef = \
        np.ascontiguousarray(coef, dtype=np.complex128)
    cdef double complex kk = k
    cdef double cut = cutoff
    if acoef.shape[0] != acx.shape[0] or acoef.shape[1] % 2 != 1:
        raise ValueError("coef must have shape (n_centers, 2 M + 1)")
    cdef Py_ssize_t npts = apx.shape[0], ndev = acx.shape[0]
    cdef Py_ssize_t m_top = (acoef.shape[1] - 1) // 2
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = \
        np.zeros(npts, dtype=np.complex128)
    cdef Py_ssize_t i, j, m
    cdef double dx, dy, r, rinv, kim = kk.imag, sgn
    cdef double complex z, zinv, h0, h1, hm, hc, hn, ph, ej, acc
    cdef int status = OK
    cdef Py_ssize_t bad = -1
    cdef double complex badz = 0.0
    with nogil:
        for i in range(npts):
            for j in range(ndev):
                dx = apx[i] - acx[j]
                dy = apy[i] - acy[j]
                r = hypot(dx, dy)
                if kim * r > cut:
                    continue
                z = kk * r
                status = _h01(z, &h0, &h1)
                if status != OK:
                    bad = i
                    badz = z
                    break
                acc = acoef[j, m_top] * h0
                if m_top >= 1:
                    rinv = 1.0 / r
                    ph = (dx * rinv) + 1j * (dy * rinv)
                    zinv = 1.0 / z
                    ej = ph
                    hm = h0
                    hc = h1
                    sgn = -1.0
                    for m in range(1, m_top + 1):
                        if m > 1:
                            hn = (2.0 * (m - 1)) * zinv * hc - hm
                            hm = hc
                            hc = hn
                        acc = acc + hc * (acoef[j, m_top + m] * ej
                                          + sgn * acoef[j, m_top - m]
                                          * conj(ej))
                        ej = ej * ph
                        sgn = -sgn
                out[i] = out[i] + acc
            if bad >= 0:
                break
    if bad >= 0:
        _raise_status(status, badz)
    return out

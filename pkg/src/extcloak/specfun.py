"""Complex-argument Bessel and Hankel functions of integer order.

Evaluation strategy, for arguments off the branch cut (-inf, 0] where
Y_n and H_n^(1) are concerned:

* |z| <= 3.5: ascending power series for J_0, J_1 and the
  finite-sum-plus-logarithm series for Y_0, Y_1 (principal log).
* 3.5 < |z| <= 16 with Im z >= 0: backward (Miller) recurrence for
  J_0, J_1 normalized against e^{-iz} = J_0 + 2 sum_m (-i)^m J_m, then
  the continued fraction for H_0'/H_0 (convergent in the closed upper
  half plane) combined with the Wronskian J_0 H_0' - J_0' H_0 =
  2i/(pi z) to recover H_0, H_1 without forming J + iY (which cancels
  catastrophically when Im z is large).
* 3.5 < |z| <= 16 with Im z < 0: reflection
  H_n^(1)(z) = 2 J_n(z) - conj(H_n^(1)(conj z)).
* |z| > 16: large-argument asymptotic series, valid off the cut.
  This also covers |z| > 50, outside the formal accuracy contract but
  validated against the recurrence and Wronskian invariants up to the
  |kr| ~ 300 the transient pipeline needs.

Orders beyond 0, 1 come from the three-term recurrence: upward for
Y_n and H_n (their dominant direction), backward normalized for J_n.
The *_table functions carry a separate binary exponent per value so
that sequences to order several hundred neither underflow (J) nor
overflow (H); the Graf translation sums need orders up to ~600.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError

EULER_GAMMA = 0.5772156649015328606

_SERIES_RADIUS = 3.5
_ASYMPTOTIC_RADIUS = 16.0


def _check_argument(z):
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z!r}")
    return z


def _check_off_cut(z):
    z = _check_argument(z)
    if z.imag == 0.0 and z.real <= 0.0:
        raise DomainError(
            f"argument {z!r} lies on the branch cut (-inf, 0]")
    return z


def _j01_series(z):
    """J_0(z), J_1(z) by the ascending power series."""
    q = 0.25 * z * z
    # J0: sum (-q)^k / (k!)^2, J1: (z/2) sum (-q)^k / (k!(k+1)!)
    t0 = 1.0 + 0j
    t1 = 1.0 + 0j
    s0 = t0
    s1 = t1
    for k in range(1, 200):
        t0 *= -q / (k * k)
        t1 *= -q / (k * (k + 1))
        s0 += t0
        s1 += t1
        if abs(t0) < 1e-18 * abs(s0) and abs(t1) < 1e-18 * abs(s1):
            break
    return s0, 0.5 * z * s1


def _y01_series(z, j0, j1):
    """Y_0(z), Y_1(z) by the logarithmic series (DLMF 10.8.1)."""
    q = 0.25 * z * z
    lg = cmath.log(0.5 * z) + EULER_GAMMA
    # Y0 = (2/pi)[(log(z/2)+gamma) J0 + sum_{k>=1} (-1)^{k+1} H_k q^k/(k!)^2]
    t = 1.0 + 0j
    s = 0.0 + 0j
    hk = 0.0
    for k in range(1, 200):
        t *= q / (k * k)
        hk += 1.0 / k
        term = hk * t
        if k % 2 == 0:
            term = -term
        s += term
        if abs(t) * (hk + 1.0) < 1e-18 * max(abs(s), 1e-300):
            break
    y0 = (2.0 / math.pi) * (lg * j0 + s)
    # Y1 = (2/pi) log(z/2) J1 - 2/(pi z)
    #      - (z/2pi) sum_k (psi(k+1)+psi(k+2)) (-q)^k / (k!(k+1)!)
    t = 1.0 + 0j
    s = 0.0 + 0j
    hk = 0.0
    for k in range(0, 200):
        if k > 0:
            t *= -q / (k * (k + 1))
            hk += 1.0 / k
        psi_sum = -2.0 * EULER_GAMMA + 2.0 * hk + 1.0 / (k + 1)
        term = psi_sum * t
        s += term
        if k > 2 and abs(t) * 4.0 < 1e-18 * max(abs(s), 1e-300):
            break
    y1 = (2.0 / math.pi) * cmath.log(0.5 * z) * j1 - 2.0 / (math.pi * z) \
        - (z / (2.0 * math.pi)) * s
    return y0, y1


def _miller_start(n_max, az):
    base = max(n_max, int(az) + 1)
    return base + 18 + int(8.0 * max(az, 1.0) ** (1.0 / 3.0))


def _miller_j01(z):
    """J_0(z), J_1(z) by normalized backward recurrence."""
    az = abs(z)
    m_start = _miller_start(1, az)
    jp = 0.0 + 0j  # J_{m+1} surrogate
    jc = 1.0 + 0j  # J_m surrogate
    # normalizer e^{-iz} = J0 + 2 sum (-i)^m J_m  (Im z >= 0)
    #            e^{+iz} = J0 + 2 sum (+i)^m J_m  (Im z < 0)
    u = -1j if z.imag >= 0 else 1j
    u_m = u ** (m_start % 4)
    norm = 0.0 + 0j
    j0 = j1 = 0.0 + 0j
    two_over_z = 2.0 / z
    for m in range(m_start, 0, -1):
        jm = m * two_over_z * jc - jp
        jp = jc
        jc = jm
        # jp is now J_m's surrogate, jc is J_{m-1}'s
        norm += u_m * jp
        u_m /= u
        if m == 1:
            j0 = jc
            j1 = jp
        if abs(jc.real) > 1e250 or abs(jc.imag) > 1e250:
            jp *= 1e-250
            jc *= 1e-250
            norm *= 1e-250
            j0 *= 1e-250
            j1 *= 1e-250
    norm = 2.0 * norm + j0
    target = cmath.exp(-1j * z) if z.imag >= 0 else cmath.exp(1j * z)
    scale = target / norm
    return j0 * scale, j1 * scale


def _cf2_h0_ratio(z):
    """H_0'(z)/H_0(z) by continued fraction, Im z >= 0."""
    # H0'/H0 = i - 1/(2z) + (i/z) * K_{j>=1} [ (j-1/2)^2 / (2(z+ij)) ]
    tiny = 1e-290
    f = tiny
    c = f
    d = 0.0 + 0j
    for j in range(1, 400):
        a = (j - 0.5) ** 2
        b = 2.0 * (z + 1j * j)
        d = b + a * d
        if d == 0:
            d = tiny
        c = b + a / c
        if c == 0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            return 1j - 0.5 / z + (1j / z) * f
    raise NumericalError(f"continued fraction did not converge at z={z!r}")


def _h01_wronskian(z):
    """H_0, H_1 for Im z >= 0 via Miller + continued fraction."""
    j0, j1 = _miller_j01(z)
    gamma0 = _cf2_h0_ratio(z)
    h0 = (2j / (math.pi * z)) / (j0 * gamma0 + j1)
    h1 = -gamma0 * h0
    return h0, h1


def _h01_asymptotic(z):
    """H_0, H_1 by the large-argument expansion, Im z >= 0."""
    zi = 1.0 / z
    out = []
    for nu, phase in ((0, cmath.exp(1j * (z - 0.25 * math.pi))),
                      (1, cmath.exp(1j * (z - 0.75 * math.pi)))):
        mu = 4.0 * nu * nu
        term = 1.0 + 0j
        total = term
        best = abs(term)
        for k in range(0, 60):
            term = term * 1j * (mu - (2 * k + 1) ** 2) * zi / (8.0 * (k + 1))
            mag = abs(term)
            if mag >= best:
                break  # asymptotic tail started growing; stop at min term
            total += term
            best = mag
            if mag < 1e-17 * abs(total):
                break
        out.append(cmath.sqrt(2.0 * zi / math.pi) * phase * total)
    return out[0], out[1]


def hankel01(z):
    """H_0^(1)(z), H_1^(1)(z) for complex z off the cut (-inf, 0]."""
    z = _check_off_cut(z)
    az = abs(z)
    if az <= _SERIES_RADIUS:
        j0, j1 = _j01_series(z)
        y0, y1 = _y01_series(z, j0, j1)
        return j0 + 1j * y0, j1 + 1j * y1
    if z.imag >= 0:
        if az > _ASYMPTOTIC_RADIUS:
            return _h01_asymptotic(z)
        return _h01_wronskian(z)
    # Lower half plane: both the continued fraction and the single
    # exponential of the large-argument expansion drop a recessive
    # component that is only small relative to e^{2 Im z}, so reflect
    # through the real axis instead.
    if az > _ASYMPTOTIC_RADIUS:
        h0c, h1c = _h01_asymptotic(z.conjugate())
    else:
        h0c, h1c = _h01_wronskian(z.conjugate())
    j0, j1 = _miller_j01(z)
    return 2.0 * j0 - h0c.conjugate(), 2.0 * j1 - h1c.conjugate()


def bessel_j(n, z):
    """Bessel function J_n(z), integer n, any finite complex z."""
    z = _check_argument(z)
    n = int(n)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2:
            sign = -1.0
    if z == 0:
        return complex(sign if n == 0 else 0.0)
    az = abs(z)
    if az <= 6.0:
        # ascending series
        q = 0.25 * z * z
        try:
            lead = (0.5 * z) ** n / math.factorial(n)
        except OverflowError:
            return 0.0 + 0j  # (z/2)^n underflows far below n! growth
        t = lead
        s = t
        for k in range(1, 300):
            t *= -q / (k * (n + k))
            s += t
            if abs(t) < 1e-18 * abs(s):
                break
        return sign * s
    if n <= 1:
        j0, j1 = _miller_j01(z)
        return sign * (j0 if n == 0 else j1)
    mant, expo = bessel_j_table_scaled(n, np.array([z]))
    return sign * _ldexp_complex(mant[0, n], expo[0, n])


def bessel_j_prime(n, z):
    """J_n'(z) = (J_{n-1}(z) - J_{n+1}(z)) / 2, with J_0' = -J_1."""
    n = int(n)
    if n == 0:
        return -bessel_j(1, z)
    return 0.5 * (bessel_j(n - 1, z) - bessel_j(n + 1, z))


def bessel_y(n, z):
    """Bessel function Y_n(z), z off the branch cut (-inf, 0]."""
    z = _check_off_cut(z)
    n = int(n)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2:
            sign = -1.0
    # Off the real axis Y is neither uniformly dominant nor recessive,
    # so recurrence in either direction can lose all digits; recover it
    # from the two stably computed solutions instead.
    return sign * (hankel1(n, z) - bessel_j(n, z)) / 1j


def hankel1(n, z):
    """Hankel function H_n^(1)(z), z off the branch cut (-inf, 0]."""
    z = _check_off_cut(z)
    n = int(n)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2:
            sign = -1.0
    if n <= 1:
        h0, h1 = hankel01(z)
        return sign * (h0 if n == 0 else h1)
    mant, expo = hankel1_table_scaled(n, np.array([z]))
    return sign * _ldexp_complex(mant[0, n], expo[0, n])


def _ldexp_complex(mant, expo):
    try:
        return complex(math.ldexp(mant.real, int(expo)),
                       math.ldexp(mant.imag, int(expo)))
    except OverflowError:
        raise NumericalError("value overflows double precision") from None


def _renormalize(mant, expo):
    """Pull binary exponents out of mant (complex array) into expo."""
    mag = np.abs(mant)
    _, shift = np.frexp(np.where(mag > 0, mag, 1.0))
    mant = np.ldexp(mant.real, -shift) + 1j * np.ldexp(mant.imag, -shift)
    return mant, expo + shift


def bessel_j_table_scaled(n_max, z):
    """J_0..J_{n_max} at each z, as (mantissa, binary exponent) pairs.

    Backward recurrence with periodic renormalization, so orders that
    underflow double precision (J_600 at |z| < 1 is ~1e-1600) are still
    represented. z must avoid 0.
    """
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    zf = z.ravel()
    npts = zf.size
    if npts and np.any(zf == 0):
        raise DomainError("scaled J table requires z != 0")
    m_start = _miller_start(n_max, float(np.max(np.abs(zf))) if npts else 0.0)
    mant = np.zeros((npts, n_max + 1), dtype=np.complex128)
    expo = np.zeros((npts, n_max + 1), dtype=np.int64)
    jp = np.zeros(npts, dtype=np.complex128)
    jc = np.ones(npts, dtype=np.complex128)
    run_exp = np.zeros(npts, dtype=np.int64)
    upper = zf.imag >= 0
    u = np.where(upper, -1j, 1j).astype(np.complex128)
    u_m = u ** (m_start % 4)
    norm = np.zeros(npts, dtype=np.complex128)
    norm_exp = np.zeros(npts, dtype=np.int64)
    two_over_z = 2.0 / zf
    for m in range(m_start, 0, -1):
        jm = m * two_over_z * jc - jp
        jp = jc
        jc = jm
        # jp now holds order m, jc holds order m-1, both scaled 2^{-run_exp}
        # accumulate the normalizer at a common exponent
        shift = norm_exp - run_exp
        small = shift < 0
        norm = np.where(small, norm * np.exp2(shift.astype(np.float64)), norm)
        norm_exp = np.where(small, run_exp, norm_exp)
        norm += u_m * jp * np.where(small, 1.0,
                                    np.exp2(-shift.astype(np.float64)))
        u_m /= u
        if m == n_max:
            mant[:, m] = jp
            expo[:, m] = run_exp
        if m - 1 <= n_max:
            mant[:, m - 1] = jc
            expo[:, m - 1] = run_exp
        mag = np.maximum(np.abs(jc.real), np.abs(jc.imag))
        big = mag > 1e250
        if np.any(big):
            jc[big] *= 2.0 ** -900
            jp[big] *= 2.0 ** -900
            run_exp[big] += 900
    # mant[:, n]*2^{expo[:, n] - run-scale} are proportional to J_n;
    # fix the proportionality with the e^{-+iz} normalizer
    norm = 2.0 * norm + mant[:, 0] * np.exp2(
        (expo[:, 0] - norm_exp).astype(np.float64))
    # target e^{-iz} (upper) / e^{+iz} (lower) in scaled form to allow
    # |Im z| beyond the double-exponent range
    log2_mag = np.abs(zf.imag) / math.log(2.0)
    te = np.floor(log2_mag).astype(np.int64)
    tm = np.exp2(log2_mag - te)
    tphase = np.exp(-1j * np.where(upper, zf.real, -zf.real))
    # scale = target / (norm * 2^{norm_exp}) applied to mant*2^expo
    nm, ne = np.frexp(np.abs(norm))
    phase = norm / np.abs(norm)
    mant /= (nm * phase)[:, None]
    expo -= (ne + norm_exp)[:, None]
    mant *= (tm * tphase)[:, None]
    expo += te[:, None]
    mant, expo = _renormalize(mant, expo)
    return mant.reshape(shape + (n_max + 1,)), expo.reshape(shape + (n_max + 1,))


def bessel_j_table(n_max, z):
    """J_0..J_{n_max} at each z as complex128 (underflow flushes to 0)."""
    mant, expo = bessel_j_table_scaled(n_max, z)
    out = np.ldexp(mant.real, expo) + 1j * np.ldexp(mant.imag, expo)
    return out


def _hankel1_table_scaled_upper(n_max, zf):
    """Upward recurrence for H_n, valid when Im z >= 0 (H dominant)."""
    npts = zf.size
    mant = np.zeros((npts, n_max + 1), dtype=np.complex128)
    expo = np.zeros((npts, n_max + 1), dtype=np.int64)
    for i, zi in enumerate(zf):
        h0, h1 = hankel01(zi)
        mant[i, 0] = h0
        if n_max >= 1:
            mant[i, 1] = h1
    if n_max >= 2:
        run_exp = np.zeros(npts, dtype=np.int64)
        hm = mant[:, 0].copy()
        hc = mant[:, 1].copy()
        two_over_z = 2.0 / zf
        for m in range(1, n_max):
            hm, hc = hc, m * two_over_z * hc - hm
            mag = np.maximum(np.abs(hc.real), np.abs(hc.imag))
            big = mag > 1e250
            if np.any(big):
                hc[big] *= 2.0 ** -900
                hm[big] *= 2.0 ** -900
                run_exp[big] += 900
            mant[:, m + 1] = hc
            expo[:, m + 1] = run_exp
    return _renormalize(mant, expo)


def hankel1_table_scaled(n_max, z):
    """H_0^(1)..H_{n_max}^(1) at each z, scaled pairs; z off the cut.

    Upward recurrence in the closed upper half plane where H^(1) is
    the dominant solution; in the lower half plane the recurrence is
    unstable past n ~ |z|, so the table is built by the reflection
    H_n(z) = 2 J_n(z) - conj(H_n(conj z)) instead.
    """
    z = np.asarray(z, dtype=np.complex128)
    shape = z.shape
    zf = z.ravel()
    for zi in zf:
        _check_off_cut(zi)
    npts = zf.size
    mant = np.zeros((npts, n_max + 1), dtype=np.complex128)
    expo = np.zeros((npts, n_max + 1), dtype=np.int64)
    upper = zf.imag >= 0
    if np.any(upper):
        m_u, e_u = _hankel1_table_scaled_upper(n_max, zf[upper])
        mant[upper] = m_u
        expo[upper] = e_u
    if np.any(~upper):
        zl = zf[~upper]
        m_h, e_h = _hankel1_table_scaled_upper(n_max, np.conj(zl))
        m_j, e_j = bessel_j_table_scaled(n_max, zl)
        e_out = np.maximum(e_h, e_j)
        m_out = (2.0 * m_j * np.exp2((e_j - e_out).astype(np.float64))
                 - np.conj(m_h) * np.exp2((e_h - e_out).astype(np.float64)))
        mant[~upper] = m_out
        expo[~upper] = e_out
        mant, expo = _renormalize(mant, expo)
    return mant.reshape(shape + (n_max + 1,)), expo.reshape(shape + (n_max + 1,))


def hankel1_table(n_max, z):
    """H_0^(1)..H_{n_max}^(1) at each z as complex128.

    Raises NumericalError if any order overflows; use the scaled
    variant for very high orders at small |z|.
    """
    mant, expo = hankel1_table_scaled(n_max, z)
    if np.any(expo > 1020):
        raise NumericalError(
            "Hankel sequence overflows double precision; "
            "use hankel1_table_scaled")
    out = np.ldexp(mant.real, expo) + 1j * np.ldexp(mant.imag, expo)
    return out


# ---------------------------------------------------------------------------
# Certified remainder bounds (the lemma constants)


@dataclass(frozen=True)
class Annulus:
    """Compact annular sector r_min <= |z| <= r_max, |arg z| <= arg_max.

    arg_max = pi describes a full disk/annulus. A set intended for
    Hankel/Y evaluation must exclude the branch cut (arg_max < pi or
    r_min > 0 alone is not enough: the cut is arg z = pi).
    """
    r_min: float
    r_max: float
    arg_max: float = math.pi

    def __post_init__(self):
        if not (0 <= self.r_min <= self.r_max) or self.r_max <= 0:
            raise DomainError("need 0 <= r_min <= r_max, r_max > 0")
        if not (0 < self.arg_max <= math.pi):
            raise DomainError("need 0 < arg_max <= pi")

    @property
    def touches_cut(self):
        return self.arg_max >= math.pi

    def grid(self, n_radial=32, n_angular=32):
        r_lo = self.r_min if self.r_min > 0 else self.r_max / n_radial
        r = np.linspace(r_lo, self.r_max, n_radial)
        a = np.linspace(-self.arg_max, self.arg_max, n_angular)
        rr, aa = np.meshgrid(r, a, indexing="ij")
        return (rr * np.exp(1j * aa)).ravel()


def disk(r_max):
    return Annulus(0.0, float(r_max), math.pi)


@dataclass(frozen=True)
class BoundConstants:
    """Explicit constants of the Bessel remainder lemma.

    c_k1, c_k1_tilde, c_k2_tilde bound the remainders of J_n, J_n' and
    H_n^(1) after their leading terms; b_k1, b_k1_tilde, b_k2_tilde are
    the derived whole-function bounds. All are independent of the
    order n and depend only on the compact sets.
    """
    c_k1: float
    c_k1_tilde: float
    c_k2_tilde: float
    b_k1: float
    b_k1_tilde: float
    b_k2_tilde: float
    k1: Annulus
    k2: Annulus

    def __post_init__(self):
        for name in ("c_k1", "c_k1_tilde", "c_k2_tilde",
                     "b_k1", "b_k1_tilde", "b_k2_tilde"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"constant {name}={v!r} must be finite >= 0")


@dataclass
class LemmaVerification:
    constants: BoundConstants
    worst_ratio: float
    worst_by_inequality: dict = field(default_factory=dict)
    n_max: int = 0
    passed: bool = False


def _f_entire(t):
    # f(t) = sum_{k>=1} (t/2)^{2k-2} / k! = 4(e^{t^2/4}-1)/t^2, f(0)=1
    t = np.asarray(t, dtype=float)
    q = 0.25 * t * t
    with np.errstate(invalid="ignore"):
        v = np.where(q > 0, 4.0 * np.expm1(q) / np.where(q > 0, t * t, 1.0), 1.0)
    return v


def _h_entire(t):
    # h(t) = sum_k (t/2)^{2k} / (k!(k+1)!) = (2/t) I_1(t), h(0)=1
    t = np.asarray(t, dtype=float)
    q = 0.25 * t * t
    term = np.ones_like(t)
    total = np.ones_like(t)
    for k in range(1, 200):
        term = term * q / (k * (k + 1))
        total += term
        if np.all(term < 1e-17 * total):
            break
    return total


def compute_bound_constants(k1, k2, n_scan=4096):
    """Constants of the remainder lemma from its proof, by direct maxima.

    C_K1 = max f(|z|) over K1 with f(t) = 4(e^{t^2/4}-1)/t^2;
    C~_K2 adds the finite-sum estimate C_K2/pi to the I_2 estimate
    (1/pi) max g(|z|)(2|ln(z/2)|+2 gamma+5) h(|z|) with
    g(t) = (t^2/4) e^{t^2/4}.
    """
    if k2.touches_cut:
        raise DomainError("K2 must exclude the branch cut (-inf, 0]")
    r1 = np.linspace(k1.r_min, k1.r_max, n_scan)
    c_k1 = float(np.max(_f_entire(r1)))
    q1 = (0.5 * k1.r_max) ** 2
    b_k1 = 1.0 + c_k1 * q1
    c_k1_tilde = 0.5 * (c_k1 + b_k1)
    b_k1_tilde = 0.5 + c_k1_tilde * q1

    r2 = np.linspace(k2.r_min, k2.r_max, n_scan)
    c_k2 = float(np.max(_f_entire(r2)))
    # |ln(z/2)| is maximal at |arg z| = arg_max for each |z|
    log_mod = np.sqrt(np.log(0.5 * r2) ** 2 + k2.arg_max ** 2)
    g = 0.25 * r2 * r2 * np.exp(0.25 * r2 * r2)
    ceuler = 2.0 * EULER_GAMMA + 1.0
    i2 = g * (2.0 * log_mod + ceuler + 4.0) * _h_entire(r2)
    c_k2_tilde = c_k2 / math.pi + float(np.max(i2)) / math.pi
    q2 = (0.5 * k2.r_max) ** 2
    b_k2_tilde = 1.0 / math.pi + c_k2_tilde * q2
    return BoundConstants(c_k1, c_k1_tilde, c_k2_tilde,
                          b_k1, b_k1_tilde, b_k2_tilde, k1, k2)


def verify_lemma_bounds(n_max, k1, k2, n_radial=32, n_angular=32):
    """Check the three lemma inequalities and their derived forms.

    Evaluates, on a polar sampling grid of K1 (for J_n, J_n') and K2
    (for H_n^(1)) and orders 2 <= n <= n_max, the ratio of each
    inequality's left side to its right side. All ratios must be <= 1;
    the worst one is reported.
    """
    if n_max < 2:
        raise DomainError("n_max >= 2 required")
    consts = compute_bound_constants(k1, k2)
    z1 = k1.grid(n_radial, n_angular)
    z2 = k2.grid(n_radial, n_angular)
    jt = bessel_j_table(n_max + 1, z1)
    ht = hankel1_table(n_max, z2)

    ns = np.arange(2, n_max + 1)
    fact = np.array([math.factorial(n) for n in range(n_max + 2)], dtype=float)
    q1 = 0.5 * np.abs(z1)
    q2 = 0.5 * np.abs(z2)
    worst = {"J": 0.0, "J_derived": 0.0, "Jprime": 0.0,
             "Jprime_derived": 0.0, "H": 0.0, "H_derived": 0.0}
    for n in ns:
        lead = (0.5 * z1) ** n / fact[n]
        rhs = consts.c_k1 / fact[n + 1] * q1 ** (n + 2)
        worst["J"] = max(worst["J"],
                         float(np.max(np.abs(jt[:, n] - lead) / rhs)))
        rhs = consts.b_k1 / fact[n] * q1 ** n
        worst["J_derived"] = max(worst["J_derived"],
                                 float(np.max(np.abs(jt[:, n]) / rhs)))
        jprime = 0.5 * (jt[:, n - 1] - jt[:, n + 1])
        lead = 0.5 * (0.5 * z1) ** (n - 1) / fact[n - 1]
        rhs = consts.c_k1_tilde / fact[n] * q1 ** (n + 1)
        worst["Jprime"] = max(worst["Jprime"],
                              float(np.max(np.abs(jprime - lead) / rhs)))
        rhs = consts.b_k1_tilde / fact[n - 1] * q1 ** (n - 1)
        worst["Jprime_derived"] = max(
            worst["Jprime_derived"], float(np.max(np.abs(jprime) / rhs)))
        lead = (1j * fact[n - 1] / math.pi) * (2.0 / z2) ** n
        rhs = consts.c_k2_tilde * fact[n - 2] * (1.0 / q2) ** (n - 2)
        worst["H"] = max(worst["H"],
                         float(np.max(np.abs(ht[:, n] - lead) / rhs)))
        rhs = consts.b_k2_tilde * fact[n - 1] * (1.0 / q2) ** n
        worst["H_derived"] = max(worst["H_derived"],
                                 float(np.max(np.abs(ht[:, n]) / rhs)))
    overall = max(worst.values())
    return LemmaVerification(constants=consts, worst_ratio=overall,
                             worst_by_inequality=worst, n_max=int(n_max),
                             passed=bool(overall <= 1.0))

"""Free-space Green function, its dipole kernel, and source translation.

A monopole (or dipole) at a point y can be rewritten as a multipole
series about a nearby center x_j by the addition theorem for cylinder
functions. Truncating that series at order M leaves remainders that
decay geometrically in M with ratio a = |y - x_j| / |x - x_j|; this
module evaluates the translated series, measures the remainders, and
fits the two-constant bound model

    monopole error <= C1 sum_{m>M} a^m / m
    dipole error   <= C2 a^{M+1} / (1 - a)

whose constants are calibrated empirically at a small order and then
extrapolate to larger M.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError


def _as_point(p):
    q = np.asarray(p, dtype=float)
    if q.shape != (2,) or not np.all(np.isfinite(q)):
        raise DomainError(f"expected a finite 2d point, got {p!r}")
    return q


@dataclass(frozen=True)
class SourceTranslation:
    """A source point y expanded about a center x_j.

    nu is the dipole orientation at y; leave it None for pure
    monopole translations.
    """
    y: tuple
    x_j: tuple
    nu: tuple = None


@dataclass(frozen=True)
class TruncationBoundModel:
    """Fitted constants of the geometric truncation-error bounds."""
    a: float
    c1: float
    c2: float
    m_fit: int

    def __post_init__(self):
        if not (0 <= self.a < 1):
            raise DomainError(f"ratio a={self.a!r} must lie in [0, 1)")
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("fitted constants must be nonnegative")


def green(x, y, k):
    """Outgoing free-space kernel (i/4) H_0^(1)(k |x - y|)."""
    x = _as_point(x)
    y = _as_point(y)
    r = math.hypot(x[0] - y[0], x[1] - y[1])
    if r == 0.0:
        raise DomainError("kernel is singular at x = y")
    h0, _ = specfun.hankel01(k * r)
    return 0.25j * h0


def green_normal_derivative(x, y, nu, k):
    """Dipole kernel: derivative of green in y along the unit vector nu."""
    x = _as_point(x)
    y = _as_point(y)
    nu = _as_point(nu)
    dx, dy = x[0] - y[0], x[1] - y[1]
    r = math.hypot(dx, dy)
    if r == 0.0:
        raise DomainError("kernel is singular at x = y")
    _, h1 = specfun.hankel01(k * r)
    return 0.25j * k * h1 * (dx * nu[0] + dy * nu[1]) / r


def _polar_offsets(x, st):
    x = _as_point(x)
    y = _as_point(st.y)
    c = _as_point(st.x_j)
    ex, ey = x[0] - c[0], x[1] - c[1]
    sx, sy = y[0] - c[0], y[1] - c[1]
    r_x = math.hypot(ex, ey)
    if r_x == 0.0:
        raise DomainError("x coincides with the expansion center")
    rho = math.hypot(sx, sy)
    theta = math.atan2(ey, ex) - math.atan2(sy, sx)
    return r_x, rho, theta, (sx, sy)


def _scaled_value(mant, expo):
    return specfun._ldexp_complex(mant, expo)


def translated_green(x, st, k, M):
    """Monopole at st.y expanded to order M about st.x_j.

    (i/4) sum_{m=-M}^{M} H_m^(1)(k r_x) J_m(k rho) e^{i m theta},
    converging to green(x, st.y, k) when rho < r_x. The truncated sum
    is finite everywhere, so evaluation with rho >= r_x is permitted
    (it just does not converge as M grows).
    """
    r_x, rho, theta, _ = _polar_offsets(x, st)
    if rho == 0.0:
        # J_m(0) = delta_m0: only the central term survives
        return green(x, st.x_j, k)
    hm, he = specfun.hankel1_table_scaled(M, np.array([k * r_x]))
    jm, je = specfun.bessel_j_table_scaled(M, np.array([k * rho]))
    # pair the +m and -m terms: their product of (-1)^m signs cancels,
    # leaving 2 cos(m theta) times the m-th product
    acc = _scaled_value(hm[0, 0] * jm[0, 0], he[0, 0] + je[0, 0])
    u = cmath.exp(1j * theta)
    um = 1.0 + 0.0j
    for m in range(1, M + 1):
        um *= u
        p = _scaled_value(hm[0, m] * jm[0, m], he[0, m] + je[0, m])
        acc += 2.0 * um.real * p
    return 0.25j * acc


def translated_dipole(x, st, k, M):
    """Dipole at st.y (orientation st.nu) expanded to order M about st.x_j.

    Differentiates the translated monopole series term by term along
    nu, using J_m' = (J_{m-1} - J_{m+1})/2 for the radial part and the
    angular derivative of e^{+-i m theta} for the rest.
    """
    if st.nu is None:
        raise DomainError("dipole translation requires an orientation nu")
    nu = _as_point(st.nu)
    r_x, rho, theta, (sx, sy) = _polar_offsets(x, st)
    if rho == 0.0:
        raise DomainError("dipole translation is singular at y = x_j")
    # directional derivatives of rho and theta at y
    d_rho = (sx * nu[0] + sy * nu[1]) / rho
    d_theta = -(-sy * nu[0] + sx * nu[1]) / (rho * rho)
    hm, he = specfun.hankel1_table_scaled(M, np.array([k * r_x]))
    jm, je = specfun.bessel_j_table_scaled(M + 1, np.array([k * rho]))

    # individual H_m and J_m over/underflow doubles at large m, so all
    # products pair a mantissa with a mantissa and add the exponents;
    # the combined exponents stay bounded (H grows as fast as J decays)
    def hj(m, n):
        return _scaled_value(hm[0, m] * jm[0, n], he[0, m] + je[0, n])

    def h_jprime(m):
        lo = -hj(m, 1) if m == 0 else hj(m, m - 1)
        return 0.5 * (lo - hj(m, m + 1))

    acc = k * h_jprime(0) * d_rho
    u = cmath.exp(1j * theta)
    um = 1.0 + 0.0j
    for m in range(1, M + 1):
        um *= u
        # +-m pair: radial parts add to 2 cos(m theta), angular parts
        # combine to -2 m sin(m theta)
        acc += 2.0 * (k * h_jprime(m) * d_rho * um.real
                      - m * hj(m, m) * d_theta * um.imag)
    return 0.25j * acc


def truncation_errors(x, st, k, M):
    """Absolute remainders of the order-M translation at x.

    Returns (monopole remainder, dipole remainder); the second is None
    when st carries no orientation.
    """
    r = abs(green(x, st.y, k) - translated_green(x, st, k, M))
    if st.nu is None:
        return r, None
    r_prime = abs(green_normal_derivative(x, st.y, st.nu, k)
                  - translated_dipole(x, st, k, M))
    return r, r_prime


def geometric_ratio(x, sources, x_j):
    """Convergence ratio a = max_y |y - x_j| / |x - x_j|, must be < 1."""
    x = _as_point(x)
    c = _as_point(x_j)
    pts = [_as_point(y) for y in sources]
    if not pts:
        raise DomainError("need at least one source point")
    rho = max(math.hypot(p[0] - c[0], p[1] - c[1]) for p in pts)
    r_x = math.hypot(x[0] - c[0], x[1] - c[1])
    if r_x <= rho:
        raise DomainError(
            f"point at distance {r_x:.6g} lies inside the divergence disk "
            f"of radius {rho:.6g}")
    return rho / r_x


def _log_tail(a, M):
    """sum_{m > M} a^m / m, the monopole bound shape.

    Summed directly rather than as -ln(1-a) minus a partial sum, which
    cancels catastrophically for small a.
    """
    if a == 0.0:
        return 0.0
    term = a ** (M + 1)
    total = 0.0
    m = M + 1
    while m < 10 ** 7:
        inc = term / m
        total += inc
        if inc < 1e-17 * total:
            break
        term *= a
        m += 1
    return total


def theoretical_bounds(model, M):
    """Bound-model predictions (monopole, dipole) at truncation order M."""
    mono = model.c1 * _log_tail(model.a, M)
    dip = model.c2 * model.a ** (M + 1) / (1.0 - model.a)
    return mono, dip


def fit_bound_constant(x_grid, k_grid, st, m_fit):
    """Calibrate the bound constants against measured remainders.

    For every evaluation point and wavenumber, solve actual = bound at
    order m_fit for the constant, then keep the maxima so the model
    dominates the whole grid.
    """
    if m_fit < 0:
        raise DomainError("m_fit must be >= 0")
    c1 = c2 = a = 0.0
    for x in x_grid:
        a_x = geometric_ratio(x, [st.y], st.x_j)
        a = max(a, a_x)
        shape1 = _log_tail(a_x, m_fit)
        shape2 = a_x ** (m_fit + 1) / (1.0 - a_x)
        for k in k_grid:
            r, r_prime = truncation_errors(x, st, k, m_fit)
            if shape1 > 0.0:
                c1 = max(c1, r / shape1)
            if r_prime is not None and shape2 > 0.0:
                c2 = max(c2, r_prime / shape2)
    return TruncationBoundModel(a=a, c1=c1, c2=c2, m_fit=int(m_fit))


WAVENUMBER_FAMILIES = {
    "real": 1.0 + 0.0j,
    "imaginary": 1.0j,
    "dissipative": (1.0 + math.sqrt(2.0) * 1j) / math.sqrt(3.0),
    "amplifying": (99.0 - 1j * math.sqrt(199.0)) / 100.0,
}
"""Unit-modulus ray directions covering the four wavenumber regimes:
propagating (real axis), diffusive (imaginary axis), absorbing media
(upper half plane) and amplifying media (lower half plane)."""


def wavenumber_family(name, thetas):
    """Wavenumbers theta * d along the named unit-modulus ray d.

    Because every direction has modulus one, theta equals |k| and a
    single magnitude grid compares all four regimes; the rays stay off
    the branch cut for theta > 0.
    """
    try:
        direction = WAVENUMBER_FAMILIES[name]
    except KeyError:
        raise DomainError(
            f"unknown wavenumber family {name!r}; choose from "
            f"{sorted(WAVENUMBER_FAMILIES)}") from None
    t = np.asarray(thetas, dtype=float)
    if t.size == 0 or not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise DomainError("theta values must be finite and positive")
    return t * direction

"""Active exterior cloaking for the Helmholtz equation.

The cloak field equals -u_i inside the disk Omega and 0 outside; it is
produced first as a monopole/dipole layer on the circle (a Green
identity), then re-expressed as multipole expansions around a small
number of devices x_j placed on a ring outside Omega. Each device
carries coefficients

    b_{j,m} = (i/4) int_{arc j} [-(du_i/dnu) U_m(y - x_j)
                                 + u_i dU_m(y - x_j)/dnu] dS(y)

with U_m(x) = J_m(k|x|) e^{-i m arg x}, and radiates
sum_m b_{j,m} V_m(x - x_j) with V_m(x) = H_m^(1)(k|x|) e^{i m arg x}.
The device sums diverge inside the disks R_j (radius max |y - x_j|
over the device's arc); outside their union the truncated field
converges geometrically with the ratio a of the translation analysis.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels, specfun
from .errors import DomainError

_M_CAP = 200  # coefficient magnitudes leave double range beyond this


def _as_point(p):
    q = np.asarray(p, dtype=float)
    if q.shape != (2,) or not np.all(np.isfinite(q)):
        raise DomainError(f"expected a finite 2d point, got {p!r}")
    return q


@dataclass(frozen=True)
class CloakGeometry:
    """Disk Omega plus a concentric ring of devices.

    Device j sits at center + delta_d (cos phi_j, sin phi_j) with
    phi_j = phase + 2 pi (j-1)/n_dev; its arc is the 2 pi/n_dev wide
    piece of the circle centered at the same angle.
    """
    center: tuple
    delta_c: float
    delta_d: float
    n_dev: int
    phase: float
    n_int: int

    def __post_init__(self):
        if not (0.0 < self.delta_c < self.delta_d):
            raise DomainError("need 0 < delta_c < delta_d")
        if self.n_dev < 3:
            raise DomainError("need at least three devices")
        if self.n_int < self.n_dev or self.n_int % self.n_dev != 0:
            raise DomainError("n_int must be a positive multiple of n_dev")

    @property
    def device_angles(self):
        return self.phase + 2.0 * math.pi * np.arange(self.n_dev) / self.n_dev

    @property
    def device_centers(self):
        c = _as_point(self.center)
        a = self.device_angles
        return np.column_stack([c[0] + self.delta_d * np.cos(a),
                                c[1] + self.delta_d * np.sin(a)])


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Midpoint nodes on the circle, grouped by owning device arc."""
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    arc_index: np.ndarray


def build_geometry(center, delta_c, delta_d=None, n_dev=4,
                   phase=math.pi / 4, n_int=128):
    """Standard configuration; delta_d defaults to sqrt(2) delta_c.

    The circle is split into n_int equal subarcs starting at the lower
    edge of arc 1, with one node per subarc midpoint, so arcs share no
    nodes and every arc owns n_int/n_dev of them.
    """
    if delta_d is None:
        delta_d = math.sqrt(2.0) * float(delta_c)
    geom = CloakGeometry(center=tuple(_as_point(center)),
                         delta_c=float(delta_c), delta_d=float(delta_d),
                         n_dev=int(n_dev), phase=float(phase),
                         n_int=int(n_int))
    start = geom.phase - math.pi / geom.n_dev
    alpha = start + (np.arange(geom.n_int) + 0.5) * 2.0 * math.pi / geom.n_int
    normals = np.column_stack([np.cos(alpha), np.sin(alpha)])
    nodes = _as_point(center) + geom.delta_c * normals
    weights = np.full(geom.n_int, 2.0 * math.pi * geom.delta_c / geom.n_int)
    arc_index = np.arange(geom.n_int) // (geom.n_int // geom.n_dev)
    return geom, BoundaryQuadrature(nodes=nodes, normals=normals,
                                    weights=weights, arc_index=arc_index)


@dataclass(frozen=True)
class PointSource:
    """Incident field of a monopole: amplitude * (i/4) H_0^(1)(k|x - y_s|)."""
    location: tuple
    amplitude: complex = 1.0

    def values(self, px, py, k, cutoff=math.inf):
        s = _as_point(self.location)
        ca = np.array([0.25j * self.amplitude])
        cb = np.zeros(1, dtype=complex)
        zero = np.zeros(1)
        return kernels.mixed_layer_eval(px, py, s[:1], s[1:], zero, zero,
                                        ca, cb, k, cutoff)

    def value(self, x, k):
        x = _as_point(x)
        return complex(self.values(x[:1], x[1:], k)[0])

    def normal_derivatives(self, nodes, normals, k):
        """d/dnu at each node of the field, nu the given unit vectors."""
        s = _as_point(self.location)
        d = nodes - s
        r = np.hypot(d[:, 0], d[:, 1])
        _, h1 = kernels.hankel01(k * r)
        dot = (d[:, 0] * normals[:, 0] + d[:, 1] * normals[:, 1]) / r
        return -0.25j * self.amplitude * k * h1 * dot


def _field_arrays(points):
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be an (n, 2) array")
    return pts[:, 0].copy(), pts[:, 1].copy(), single


def _layer_densities(quad, u_i, k):
    ui = u_i.values(quad.nodes[:, 0], quad.nodes[:, 1], k)
    dui = u_i.normal_derivatives(quad.nodes, quad.normals, k)
    ca = -0.25j * quad.weights * dui
    cb = 0.25j * k * quad.weights * ui
    return ui, dui, ca, cb


def interior_cloak_field(points, geom, quad, u_i, k, cutoff=math.inf):
    """Green-identity layer field: -u_i inside Omega, 0 outside.

    Midpoint quadrature of the boundary integral; spectrally accurate
    away from the circle, degrading within about one node spacing of
    it (a warning is emitted for such points).
    """
    px, py, single = _field_arrays(points)
    spacing = 2.0 * math.pi * geom.delta_c / geom.n_int
    c = _as_point(geom.center)
    gap = np.abs(np.hypot(px - c[0], py - c[1]) - geom.delta_c)
    if np.any(gap < spacing):
        warnings.warn("evaluation point within one node spacing of the "
                      "layer circle; quadrature accuracy degrades there",
                      RuntimeWarning, stacklevel=2)
    _, _, ca, cb = _layer_densities(quad, u_i, k)
    out = kernels.mixed_layer_eval(px, py, quad.nodes[:, 0],
                                   quad.nodes[:, 1], quad.normals[:, 0],
                                   quad.normals[:, 1], ca, cb, k, cutoff)
    return complex(out[0]) if single else out


@dataclass(frozen=True)
class MultipoleCoefficients:
    """Device amplitudes b[j, m_max + m], j = device, m = -m_max..m_max."""
    k: complex
    m_max: int
    b: np.ndarray

    def truncate(self, m):
        """Restrict to orders |m| <= m; coefficients are M-independent."""
        if m > self.m_max:
            raise DomainError(f"m={m} exceeds stored m_max={self.m_max}")
        lo, hi = self.m_max - m, self.m_max + m + 1
        return MultipoleCoefficients(k=self.k, m_max=int(m),
                                     b=self.b[:, lo:hi])


def multipole_coefficients(geom, quad, u_i, k, m_max):
    """Assemble b_{j,m} by midpoint quadrature over each device's arc."""
    if not (0 <= m_max <= _M_CAP):
        raise DomainError(f"m_max must lie in 0..{_M_CAP}")
    ui, dui, _, _ = _layer_densities(quad, u_i, k)
    centers = geom.device_centers
    d = quad.nodes - centers[quad.arc_index]
    rho = np.hypot(d[:, 0], d[:, 1])
    phi = np.arctan2(d[:, 1], d[:, 0])
    nu = quad.normals
    d_rho = (d[:, 0] * nu[:, 0] + d[:, 1] * nu[:, 1]) / rho
    d_phi = (-d[:, 1] * nu[:, 0] + d[:, 0] * nu[:, 1]) / (rho * rho)
    jt = specfun.bessel_j_table(m_max + 1, k * rho)

    def jprime(m):
        lo = -jt[:, 1] if m == 0 else jt[:, m - 1]
        return 0.5 * (lo - jt[:, m + 1])

    w = 0.25j * quad.weights
    b = np.zeros((geom.n_dev, 2 * m_max + 1), dtype=complex)
    em = np.ones(len(rho), dtype=complex)  # e^{-i m phi}
    step = np.exp(-1j * phi)
    for m in range(0, m_max + 1):
        jm = jt[:, m]
        jp = jprime(m)
        u_pos = em * jm
        du_pos = em * (k * jp * d_rho - 1j * m * jm * d_phi)
        node_pos = w * (-dui * u_pos + ui * du_pos)
        b[:, m_max + m] = np.bincount(
            quad.arc_index, node_pos.real, geom.n_dev) + 1j * np.bincount(
            quad.arc_index, node_pos.imag, geom.n_dev)
        if m > 0:
            sgn = -1.0 if m % 2 else 1.0
            u_neg = sgn * np.conj(em) * jm
            du_neg = sgn * np.conj(em) * (k * jp * d_rho
                                          + 1j * m * jm * d_phi)
            node_neg = w * (-dui * u_neg + ui * du_neg)
            b[:, m_max - m] = np.bincount(
                quad.arc_index, node_neg.real,
                geom.n_dev) + 1j * np.bincount(
                quad.arc_index, node_neg.imag, geom.n_dev)
        em *= step
    return MultipoleCoefficients(k=complex(k), m_max=int(m_max), b=b)


def exterior_cloak_field(points, coeffs, geom, cutoff=math.inf):
    """Sum of the device multipole expansions at the given points."""
    px, py, single = _field_arrays(points)
    centers = geom.device_centers
    out = kernels.multipole_eval(px, py, centers[:, 0], centers[:, 1],
                                 coeffs.b, coeffs.k, cutoff)
    return complex(out[0]) if single else out


@dataclass(frozen=True)
class DivergenceRegion:
    """Union of the disks R_j where the device expansions diverge."""
    centers: np.ndarray
    radii: np.ndarray
    ring_center: tuple
    r_ci: float
    r_co: float

    def contains(self, points):
        px, py, single = _field_arrays(points)
        inside = np.zeros(px.shape, dtype=bool)
        for c, r in zip(self.centers, self.radii):
            inside |= np.hypot(px - c[0], py - c[1]) <= r
        return bool(inside[0]) if single else inside


def divergence_region(geom, quad):
    """Disk radii from the actual quadrature nodes of each arc."""
    centers = geom.device_centers
    d = quad.nodes - centers[quad.arc_index]
    dist = np.hypot(d[:, 0], d[:, 1])
    radii = np.zeros(geom.n_dev)
    np.maximum.at(radii, quad.arc_index, dist)
    r_max = float(np.max(radii))
    return DivergenceRegion(centers=centers, radii=radii,
                            ring_center=geom.center,
                            r_ci=geom.delta_d - r_max,
                            r_co=geom.delta_d + r_max)


def audit_points(geom, quad, margin=0.1):
    """The 2 n_dev extremal points of the two audit circles.

    The ratio a(x) peaks where |x - x_j| is smallest, which happens on
    the rays through the devices: on the outer circle (radius r_co +
    margin delta_c) and the inner circle (radius r_ci - margin
    delta_c), both centered with the ring.
    """
    region = divergence_region(geom, quad)
    r_out = region.r_co + margin * geom.delta_c
    r_in = region.r_ci - margin * geom.delta_c
    if r_in <= 0:
        raise DomainError("inner audit circle has nonpositive radius")
    c = _as_point(geom.center)
    a = geom.device_angles
    rays = np.column_stack([np.cos(a), np.sin(a)])
    return np.vstack([c + r_out * rays, c + r_in * rays])


@dataclass(frozen=True)
class CloakBoundModel:
    """One-constant geometric bound C a^{M+1}/(1-a) for the cloak error."""
    a: float
    c: float
    m_fit: int
    m_ref: int

    def __post_init__(self):
        if not (0 <= self.a < 1):
            raise DomainError(f"ratio a={self.a!r} must lie in [0, 1)")
        if self.c < 0:
            raise DomainError("constant must be nonnegative")

    def predict(self, m):
        return self.c * self.a ** (m + 1) / (1.0 - self.a)


def _ratio_at(points, region):
    px, py, _ = _field_arrays(points)
    a = 0.0
    for c, r in zip(region.centers, region.radii):
        dist = np.hypot(px - c[0], py - c[1])
        if np.any(dist <= r):
            raise DomainError("evaluation point inside the divergence disks")
        a = max(a, float(np.max(r / dist)))
    return a


def measured_truncation_error(points, coeffs, geom, m, m_ref=None):
    """max |u_e^(m) - u_e^(m_ref)| over the points (m_ref: all orders)."""
    ref = coeffs if m_ref is None else coeffs.truncate(m_ref)
    full = exterior_cloak_field(points, ref, geom)
    trunc = exterior_cloak_field(points, coeffs.truncate(m), geom)
    return float(np.max(np.abs(full - trunc)))


def cloak_error_bound(geom, quad, u_i, k_grid, m_fit=3, m_ref=60,
                      x_eval=None):
    """Fit the one-constant bound at order m_fit against the m_ref field.

    x_eval defaults to the 2 n_dev extremal audit points. One constant
    serves the whole wavenumber grid: C is solved per point and per
    wavenumber from the measured error at m_fit, and the maxima over
    the grid are kept, so the returned model dominates the m_fit error
    everywhere it was fitted.
    """
    if not 0 <= m_fit < m_ref:
        raise DomainError("need 0 <= m_fit < m_ref")
    ks = np.atleast_1d(np.asarray(k_grid, dtype=complex))
    if ks.size == 0:
        raise DomainError("k_grid must contain at least one wavenumber")
    pts = audit_points(geom, quad) if x_eval is None else np.atleast_2d(
        np.asarray(x_eval, dtype=float))
    region = divergence_region(geom, quad)
    a = _ratio_at(pts, region)
    c = 0.0
    for k in ks:
        coeffs = multipole_coefficients(geom, quad, u_i, complex(k), m_ref)
        worst = measured_truncation_error(pts, coeffs, geom, m_fit)
        c = max(c, worst * (1.0 - a) / a ** (m_fit + 1))
    return CloakBoundModel(a=a, c=c, m_fit=int(m_fit), m_ref=int(m_ref))


@dataclass(frozen=True)
class MaxPrincipleAudit:
    applicable: bool
    boundary_attained: bool
    location: tuple
    max_abs: float


def polar_disk_grid(center, radius, n_radial=24, n_angular=64):
    """Points filling the closed disk; row i sits at radius (i+1)/n_radial
    of the full radius, so the last row is the boundary ring."""
    c = _as_point(center)
    r = radius * (np.arange(1, n_radial + 1)) / n_radial
    t = 2.0 * math.pi * np.arange(n_angular) / n_angular
    rr, tt = np.meshgrid(r, t, indexing="ij")
    pts = np.column_stack([(c[0] + rr * np.cos(tt)).ravel(),
                           (c[1] + rr * np.sin(tt)).ravel()])
    return pts, (n_radial, n_angular)


def max_principle_audit(values, k):
    """Locate the maximum of |values| on a polar grid (rows = radii).

    applicable reports the |Im k| > |Re k| criterion under which a
    homogeneous Helmholtz field must peak on the boundary. location is
    the first row-major argmax; boundary_attained compares the
    outermost row against the global peak, so ties (e.g. a constant
    field) resolve to the boundary.
    """
    v = np.abs(np.asarray(values))
    if v.ndim != 2:
        raise DomainError("values must be a 2d (radial, angular) grid")
    k = complex(k)
    peak = float(np.max(v))
    boundary = float(np.max(v[-1, :])) >= peak
    idx = np.unravel_index(int(np.argmax(v)), v.shape)
    return MaxPrincipleAudit(applicable=abs(k.imag) > abs(k.real),
                             boundary_attained=boundary,
                             location=(int(idx[0]), int(idx[1])),
                             max_abs=peak)

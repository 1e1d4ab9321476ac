"""Transient thermal cloaking via an inverse Fourier-Laplace ladder.

The heat equation rho_c du/dt = kappa Lap u + f turns, per complex
frequency omega on a horizontal contour Im(omega) = c > 0, into a
Helmholtz problem with wavenumber k = i sqrt(-i omega / sigma). Each
frequency-domain field (incident monopole, device expansion, obstacle
scattering) is synthesized by the other modules of this package; the
time-domain temperatures come back through a damped DFT over the
contour samples. The shift c keeps every wavenumber inside the
dissipative regime |Im k| > |Re k|, so the exterior audit machinery
applies at every frequency of any scenario.
"""

import cmath
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as npoly

from . import cloak
from . import scatter
from .errors import DomainError

_COMPONENTS = ("incident", "cloak", "scattered", "total")


def heat_wavenumber(omega, sigma):
    """Wavenumber i sqrt(-i omega / sigma), principal square root.

    Frequencies with Im(omega) > 0 give Re(k^2) = -Im(omega) < 0 and
    land strictly inside the dissipative sector |Im k| > |Re k|.
    """
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma > 0):
        raise DomainError("diffusivity must be positive")
    omega = complex(omega)
    if not (math.isfinite(omega.real) and math.isfinite(omega.imag)):
        raise DomainError(f"frequency {omega!r} is not finite")
    if omega == 0:
        raise DomainError("zero frequency maps to a zero wavenumber")
    k = 1j * cmath.sqrt(-1j * omega / sigma)
    if k.imag == 0 and k.real <= 0:
        raise DomainError(f"frequency {omega!r} maps onto the wavenumber "
                          f"branch cut")
    return k


def polynomial_wavenumber(p_coeffs, omega):
    """Wavenumber +-i sqrt(P(-i omega)) for a time operator P(d/dt).

    p_coeffs holds ascending coefficients of a nonconstant polynomial.
    The sign makes Im(k) positive, falling back to Re(k) positive when
    both roots are real; a root on (-inf, 0] is a branch error.
    """
    coeffs = np.atleast_1d(np.asarray(p_coeffs, dtype=complex))
    if coeffs.ndim != 1 or coeffs.size < 2 or not np.any(coeffs[1:]):
        raise DomainError("the time-operator polynomial must be nonconstant")
    if not np.all(np.isfinite(coeffs)):
        raise DomainError("polynomial coefficients must be finite")
    omega = complex(omega)
    root = cmath.sqrt(complex(npoly.polyval(-1j * omega, coeffs)))
    k = 1j * root
    if k.imag < 0 or (k.imag == 0 and k.real < 0):
        k = -k
    if k.imag == 0 and k.real <= 0:
        raise DomainError(f"frequency {omega!r} maps onto the wavenumber "
                          f"branch cut")
    return k


@dataclass(frozen=True)
class LaplaceContour:
    """Frequency ladder omega_q = q dw + ic over an internal period
    big_t = (2N+2) dt, with outputs kept on the first half [0, T]."""
    t_final: float
    n_steps: int
    n_samples: int
    dt: float
    big_t: float
    dw: float
    shift: float

    @property
    def times(self):
        return np.linspace(0.0, self.t_final, self.n_steps + 1)

    @property
    def frequencies(self):
        return self.dw * np.arange(self.n_samples) + 1j * self.shift

    @property
    def laplace_points(self):
        """s_q = -i omega_q, where the transform samples live."""
        return -1j * self.frequencies


def build_contour(t_final, n_steps, alpha=0.0):
    """Contour sized for n_steps output steps on [0, t_final].

    The damping shift is c = alpha - (dw/2pi) ln(1e-6); alpha = 0
    suits decaying fields and keeps c > 0 through the dw term alone.
    """
    t_final = float(t_final)
    if not (math.isfinite(t_final) and t_final > 0):
        raise DomainError("final time must be positive")
    n_steps = int(n_steps)
    if n_steps < 2:
        raise DomainError("need at least 2 output steps")
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha >= 0):
        raise DomainError("contour shift offset must be nonnegative")
    n_samples = 2 * n_steps + 2
    dt = t_final / n_steps
    big_t = n_samples * dt
    dw = 2.0 * math.pi / big_t
    shift = alpha - dw / (2.0 * math.pi) * math.log(1e-6)
    return LaplaceContour(t_final=t_final, n_steps=n_steps,
                          n_samples=n_samples, dt=dt, big_t=big_t,
                          dw=dw, shift=shift)


def _inversion_series(samples, contour):
    """Complex inversion series before the real part is taken."""
    spectrum = np.fft.fft(samples, axis=0)[:contour.n_steps + 1]
    spectrum -= samples[0] / 2.0
    scale = 2.0 * np.exp(contour.shift * contour.times) / contour.big_t
    return spectrum * scale.reshape((-1,) + (1,) * (samples.ndim - 1))


def inverse_laplace(samples, contour):
    """Real time series at t_0..t_N from transform samples at the
    contour's Laplace points s_q = c - i w_q, q = 0..n_samples-1.

    Accepts a 1-d array or a batch with the ladder on axis 0.
    """
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[0] != contour.n_samples:
        raise DomainError(f"expected {contour.n_samples} contour samples, "
                          f"got {samples.shape[0]}")
    return _inversion_series(samples, contour).real


@dataclass(frozen=True)
class HeatMedium:
    """Diffusivity sigma with volumetric heat capacity rho_c; the
    conductivity kappa = sigma rho_c only scales source strengths."""
    sigma: float
    rho_c: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError("diffusivity must be positive")
        if not (math.isfinite(self.rho_c) and self.rho_c > 0):
            raise DomainError("heat capacity must be positive")

    @property
    def kappa(self):
        return self.sigma * self.rho_c


@dataclass(frozen=True)
class GridSpec:
    """Uniform Cartesian evaluation grid, y-major point order."""
    x_min: float
    x_max: float
    nx: int
    y_min: float
    y_max: float
    ny: int

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise DomainError("grid bounds must be increasing")
        if self.nx < 2 or self.ny < 2:
            raise DomainError("grid needs at least 2 points per axis")

    @property
    def n_points(self):
        return self.nx * self.ny

    def points(self):
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ys = np.linspace(self.y_min, self.y_max, self.ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class TimeFieldGrid:
    """Real temperature samples, one row per point, one column per
    output time."""
    grid: Optional[GridSpec]
    points: np.ndarray
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class HeatScenario:
    """Cloaked point-heating scenario on a fixed evaluation grid.

    The source must lie outside the closed cloaked disk and the
    obstacle, when present, strictly inside it. With cloak_active the
    obstacle sees the sum of the incident and device fields, so its
    scattered part shrinks with the cloaking error. subsample, when
    set, runs the obstacle solve at only that many ladder frequencies
    and fills the scattered samples in between by linear interpolation
    in q; the incident and device fields are always evaluated at every
    frequency because the time inversion amplifies sample errors by up
    to exp(c t). Contributions with Im(k) r > cutoff are skipped as
    below double rounding.
    """
    geometry: cloak.CloakGeometry
    quadrature: cloak.BoundaryQuadrature
    medium: HeatMedium
    source: cloak.PointSource
    contour: LaplaceContour
    grid: GridSpec
    m_max: int = 22
    obstacle: Optional[scatter.ObstacleDiscretization] = None
    cloak_active: bool = True
    subsample: Optional[int] = None
    cutoff: float = 40.0

    def __post_init__(self):
        center = np.asarray(self.geometry.center)
        src = np.asarray(self.source.location, dtype=float)
        if np.hypot(*(src - center)) <= self.geometry.delta_c:
            raise DomainError("source must lie outside the closed "
                              "cloaked region")
        if self.obstacle is not None:
            reach = np.hypot(self.obstacle.q[:, 0] - center[0],
                             self.obstacle.q[:, 1] - center[1])
            if np.max(reach) >= self.geometry.delta_c:
                raise DomainError("obstacle must lie strictly inside the "
                                  "cloaked region")
        if self.subsample is not None and self.subsample < 2:
            raise DomainError("frequency subsampling needs at least 2 "
                              "ladder points")
        if not (math.isfinite(self.cutoff) and self.cutoff > 0):
            raise DomainError("cutoff must be positive")

    @property
    def scaled_source(self):
        """Monopole whose frequency field is the transformed incident
        temperature: amplitude / kappa times the Green function."""
        return cloak.PointSource(self.source.location,
                                 self.source.amplitude / self.medium.kappa)


def _coincident(pts, sources):
    """Boolean mask of the points that equal one of the source
    locations bitwise in both coordinates."""
    return ((pts[:, 0, None] == sources[None, :, 0]) &
            (pts[:, 1, None] == sources[None, :, 1])).any(axis=1)


def _nan_at(hit, fn):
    """fn(keep) evaluated on the points not flagged in hit, with NaN
    written at the flagged ones."""
    if not hit.any():
        return fn(slice(None))
    values = np.full(hit.shape, np.nan, dtype=complex)
    keep = ~hit
    values[keep] = fn(keep)
    return values


def _ladder_samples(scenario, q_indices, solve_q=None):
    """Frequency-domain component fields at the given ladder indices.

    Returns (incident, cloak, scattered) arrays of shape
    (len(q_indices), n_points). solve_q, when given, lists the global
    ladder indices at which the obstacle solve runs; other scattered
    rows are left zero for downstream interpolation. Scattered-field
    values at grid points on or inside the obstacle are the analytic
    continuation of the layer potential, not physical temperatures. A
    grid node that coincides bitwise with the source location, a
    device center, or an obstacle node sits on a kernel singularity;
    the affected component carries NaN at that node and every other
    node is unaffected.
    """
    geom, quad = scenario.geometry, scenario.quadrature
    pts = scenario.grid.points()
    px, py = pts[:, 0].copy(), pts[:, 1].copy()
    src = scenario.scaled_source
    obst = scenario.obstacle
    cut = scenario.cutoff
    src_hit = _coincident(pts, np.asarray([src.location], dtype=float))
    dev_hit = _coincident(pts, geom.device_centers)
    obst_hit = _coincident(pts, obst.q) if obst is not None else None
    if solve_q is None:
        solve_here = np.ones(len(q_indices), dtype=bool)
    else:
        solve_here = np.isin(q_indices, solve_q)
    omegas = scenario.contour.frequencies[q_indices]
    out = [np.empty((len(q_indices), len(pts)), dtype=complex)
           for _ in range(3)]
    for row, omega in enumerate(omegas):
        k = heat_wavenumber(omega, scenario.medium.sigma)
        out[0][row] = _nan_at(src_hit,
                              lambda keep: src.values(px[keep], py[keep],
                                                      k, cut))
        if scenario.cloak_active:
            coeffs = cloak.multipole_coefficients(geom, quad, src, k,
                                                  scenario.m_max)
            out[1][row] = _nan_at(dev_hit,
                                  lambda keep: cloak.exterior_cloak_field(
                                      pts[keep], coeffs, geom, cut))
        else:
            out[1][row] = 0.0
        if obst is None or not solve_here[row]:
            out[2][row] = 0.0
            continue
        qx, qy = obst.q[:, 0].copy(), obst.q[:, 1].copy()
        trace = src.values(qx, qy, k, cut)
        if scenario.cloak_active:
            trace = trace + cloak.exterior_cloak_field(obst.q, coeffs,
                                                       geom, cut)
        if np.any(trace):
            density = scatter.solve_density(obst, trace, k)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                out[2][row] = _nan_at(obst_hit,
                                      lambda keep: scatter.scattered_field(
                                          pts[keep], obst, density, cut))
        else:
            out[2][row] = 0.0
    return out


def _interpolate_ladder(samples, q_grid, n_samples):
    """Linear interpolation of per-point samples from the computed
    ladder indices q_grid onto the full ladder 0..n_samples-1."""
    position = np.interp(np.arange(n_samples), q_grid,
                         np.arange(len(q_grid), dtype=float))
    low = np.floor(position).astype(int)
    high = np.minimum(low + 1, len(q_grid) - 1)
    w = (position - low)[:, None]
    return samples[low] * (1.0 - w) + samples[high] * w


def simulate_scenario(scenario, workers=1):
    """Time-domain component fields {incident, cloak, scattered,
    total} of a cloaked heating scenario.

    Frequencies are independent work units; workers > 1 spreads the
    ladder over that many processes with bitwise-identical results.
    Grid nodes that coincide with the source location, a device
    center, or an obstacle node carry NaN in the components those
    points are singular for; all other nodes are unaffected.
    """
    contour = scenario.contour
    all_q = np.arange(contour.n_samples)
    solve_q = None
    if scenario.subsample is not None:
        solve_q = np.unique(np.round(
            np.linspace(0, contour.n_samples - 1,
                        scenario.subsample)).astype(int))
    if workers > 1 and contour.n_samples > 1:
        chunks = np.array_split(all_q, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ladder_samples,
                                  [scenario] * len(chunks), chunks,
                                  [solve_q] * len(chunks)))
        ladder = [np.concatenate([p[i] for p in parts]) for i in range(3)]
    else:
        ladder = _ladder_samples(scenario, all_q, solve_q)
    series = {}
    for name, samples in zip(_COMPONENTS, ladder):
        if name == "scattered" and solve_q is not None \
                and len(solve_q) != contour.n_samples:
            samples = _interpolate_ladder(samples[solve_q], solve_q,
                                          contour.n_samples)
        series[name] = inverse_laplace(samples, contour)
    series["total"] = series["incident"] + series["cloak"] + \
        series["scattered"]
    points = scenario.grid.points()
    return {name: TimeFieldGrid(grid=scenario.grid, points=points,
                                times=contour.times,
                                values=np.ascontiguousarray(u.T))
            for name, u in series.items()}


def temperature_cap(incident, geometry, factor=100.0):
    """Safe-radius threshold: factor times the peak incident
    temperature over the cloaked disk and all output times."""
    center = np.asarray(geometry.center)
    inside = np.hypot(incident.points[:, 0] - center[0],
                      incident.points[:, 1] - center[1]) <= geometry.delta_c
    if not np.any(inside):
        raise DomainError("grid has no points inside the cloaked region")
    return factor * float(np.max(np.abs(incident.values[inside])))


@dataclass(frozen=True)
class SafeRadii:
    """Per-device standoff radii; saturated marks devices whose
    neighborhood never gets below the threshold."""
    radii: np.ndarray
    saturated: np.ndarray
    u_max: float


def safe_radius(cloak_field, geometry, u_max):
    """Smallest grid-resolved radius per device outside which the
    device field stays below u_max at all output times.

    Each grid point is assigned to its nearest device (Voronoi
    ownership); a device whose neighborhood violates the threshold at
    its outermost owned point is reported saturated at that radius.
    """
    u_max = float(u_max)
    if not (math.isfinite(u_max) and u_max > 0):
        raise DomainError("temperature threshold must be positive")
    centers = np.asarray(geometry.device_centers)
    dist = np.hypot(cloak_field.points[:, 0, None] - centers[None, :, 0],
                    cloak_field.points[:, 1, None] - centers[None, :, 1])
    owner = np.argmin(dist, axis=1)
    peak = np.max(np.abs(cloak_field.values), axis=1)
    radii = np.zeros(geometry.n_dev)
    saturated = np.zeros(geometry.n_dev, dtype=bool)
    for j in range(geometry.n_dev):
        mine = owner == j
        if not np.any(mine):
            raise DomainError(f"grid has no points in the neighborhood of "
                              f"device {j}")
        r = dist[mine, j]
        hot = r[peak[mine] > u_max]
        if hot.size == 0:
            continue
        beyond = r[r > np.max(hot)]
        if beyond.size:
            radii[j] = float(np.min(beyond))
        else:
            radii[j] = float(np.max(r))
            saturated[j] = True
    return SafeRadii(radii=radii, saturated=saturated, u_max=u_max)

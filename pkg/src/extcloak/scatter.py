"""Sound-soft obstacle scattering at complex wavenumbers.

The exterior Dirichlet problem is reformulated as a combined-field
integral equation for a density psi on the obstacle boundary,

    psi + K psi - i eta S psi = -2 u_i on the boundary,

with S and K the single- and double-layer operators (factor-2
normalization) and eta a real coupling parameter keeping the equation
uniquely solvable. The scattered field is the mixed potential

    u_s(x) = int [dG(x,y)/dnu(y) - i eta G(x,y)] psi(y) dS(y).

Discretization is the punctured trapezoid rule on a uniform 2pi grid
with banded sixth-order correction weights for the logarithmic kernel
singularity; the diagonal is never evaluated. The correction weights
only depend on the singularity type, so the rule keeps its order for
complex wavenumbers where kernel-splitting quadratures degrade.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DomainError, NumericalError

# Sixth-order correction weights for the punctured trapezoid rule on
# integrands with a log singularity at the excluded node; gamma[l-1]
# is the extra weight (in units of the grid step) given to the nodes
# l steps on either side. Their sum is 1/2, restoring the smooth-part
# weight lost with the puncture. Validated in the test suite on
# integrals of ln(4 sin^2(t/2)) before any use here.
KR_CORRECTION_6 = np.array([
    4.967362978287758,
    -16.20501504859126,
    25.85153761832639,
    -22.22599466791883,
    9.930104998037539,
    -1.817995878141594,
])

_MAX_DENSE_NODES = 2048
_CONTAINS_CHUNK = 2048


@dataclass(frozen=True)
class ObstacleDiscretization:
    """Closed smooth curve sampled at uniform parameter nodes."""
    n_nodes: int
    tau: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    normals: np.ndarray
    jacobian: np.ndarray

    @property
    def step(self):
        return 2.0 * math.pi / self.n_nodes

    @property
    def max_spacing(self):
        return self.step * float(np.max(self.jacobian))

    def arc_length(self):
        return self.step * float(np.sum(self.jacobian))

    def contains(self, points):
        """Winding-number membership test (True strictly inside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        single = np.asarray(points).ndim == 1
        inside = np.zeros(len(pts), dtype=bool)
        for lo in range(0, len(pts), _CONTAINS_CHUNK):
            chunk = pts[lo:lo + _CONTAINS_CHUNK]
            vx = self.q[None, :, 0] - chunk[:, 0, None]
            vy = self.q[None, :, 1] - chunk[:, 1, None]
            wx, wy = np.roll(vx, -1, axis=1), np.roll(vy, -1, axis=1)
            ang = np.arctan2(vx * wy - vy * wx, vx * wx + vy * wy)
            inside[lo:lo + _CONTAINS_CHUNK] = \
                np.abs(ang.sum(axis=1)) > math.pi
        return bool(inside[0]) if single else inside


def kite_obstacle(center, scale, n_nodes):
    """Kite-shaped benchmark curve, counterclockwise, outward normals.

    q(tau) = center + scale (cos tau + 0.65 cos 2 tau - 0.65,
                             1.5 sin tau).
    """
    n = int(n_nodes)
    if n < 16 or n % 2 != 0:
        raise DomainError("n_nodes must be an even integer >= 16")
    c = np.asarray(center, dtype=float)
    if c.shape != (2,) or not np.all(np.isfinite(c)):
        raise DomainError(f"expected a finite 2d center, got {center!r}")
    if not (np.isfinite(scale) and scale > 0):
        raise DomainError("scale must be positive")
    tau = 2.0 * math.pi * np.arange(n) / n
    q = np.column_stack([
        c[0] + scale * (np.cos(tau) + 0.65 * np.cos(2 * tau) - 0.65),
        c[1] + scale * 1.5 * np.sin(tau),
    ])
    dq = np.column_stack([
        scale * (-np.sin(tau) - 1.3 * np.sin(2 * tau)),
        scale * 1.5 * np.cos(tau),
    ])
    jac = np.hypot(dq[:, 0], dq[:, 1])
    normals = np.column_stack([dq[:, 1] / jac, -dq[:, 0] / jac])
    return ObstacleDiscretization(n_nodes=n, tau=tau, q=q, dq=dq,
                                  normals=normals, jacobian=jac)


def choose_eta(k):
    """Coupling parameter |k| with the sign of Re(k) (positive at
    Re(k) = 0), so that eta != 0 and eta Re(k) >= 0."""
    k = complex(k)
    return abs(k) if k.real >= 0 else -abs(k)


@dataclass(frozen=True)
class DensitySolution:
    """Nystrom density with the parameters that produced it."""
    psi: np.ndarray
    k: complex
    eta: float
    solve_residual: float
    condition_estimate: float | None = None


def _check_scattering_wavenumber(k):
    k = complex(k)
    if not (math.isfinite(k.real) and math.isfinite(k.imag)):
        raise DomainError(f"wavenumber {k!r} is not finite")
    if k.imag < 0:
        raise DomainError("gain media (Im k < 0) are an unsupported "
                          "scattering regime")
    if k.imag == 0 and k.real <= 0:
        raise DomainError(f"wavenumber {k!r} lies on the excluded cut")
    return k


def _check_eta(eta, k):
    if isinstance(eta, complex) and eta.imag != 0:
        raise DomainError("coupling parameter must be real")
    eta = float(eta.real if isinstance(eta, complex) else eta)
    if eta == 0.0 or eta * k.real < 0:
        raise DomainError("coupling parameter must be nonzero with "
                          "eta * Re(k) >= 0")
    return eta


def _band_weight_matrix(n):
    """Trapezoid weights with the log-singularity correction bands and
    a punctured diagonal, in units of the grid step."""
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    dist = np.minimum(dist, n - dist)
    w = np.ones((n, n))
    np.fill_diagonal(w, 0.0)
    for offset, gamma in enumerate(KR_CORRECTION_6, start=1):
        w[dist == offset] += gamma
    return w


def _layer_kernels(targets, obst, k):
    """Factor-2 single- and double-layer kernel values, zero diagonal
    when targets coincide with the obstacle nodes."""
    dx = targets[:, 0, None] - obst.q[None, :, 0]
    dy = targets[:, 1, None] - obst.q[None, :, 1]
    r = np.hypot(dx, dy)
    on_node = r == 0.0
    r_safe = np.where(on_node, 1.0, r)
    h0, h1 = kernels.hankel01(k * r_safe.ravel())
    h0 = h0.reshape(r.shape)
    h1 = h1.reshape(r.shape)
    single = 0.5j * h0
    dot = (dx * obst.normals[None, :, 0] + dy * obst.normals[None, :, 1])
    double = 0.5j * k * h1 * dot / r_safe
    single[on_node] = 0.0
    double[on_node] = 0.0
    return single, double


def _condition_one_norm(a):
    return float(np.linalg.norm(a, 1) * np.linalg.norm(np.linalg.inv(a), 1))


def _system_matrix(obst, k, eta):
    single, double = _layer_kernels(obst.q, obst, k)
    band = _band_weight_matrix(obst.n_nodes)
    a = obst.step * band * (double - 1j * eta * single) * \
        obst.jacobian[None, :]
    a[np.diag_indices_from(a)] += 1.0
    return a


def solve_density(obst, u_inc_trace, k, eta=None, estimate_condition=False):
    """Solve the combined-field equation by dense factorization.

    u_inc_trace holds the incident field at the obstacle nodes. eta
    defaults to choose_eta(k). The relative residual of the linear
    solve is recorded on the result; pass estimate_condition=True to
    also record a one-norm condition number.
    """
    k = _check_scattering_wavenumber(k)
    eta = _check_eta(choose_eta(k) if eta is None else eta, k)
    if obst.n_nodes > _MAX_DENSE_NODES:
        raise DomainError(f"dense solve supports at most "
                          f"{_MAX_DENSE_NODES} nodes")
    rhs = -2.0 * np.asarray(u_inc_trace, dtype=complex)
    if rhs.shape != (obst.n_nodes,):
        raise DomainError("incident trace must have one value per node")
    a = _system_matrix(obst, k, eta)
    psi = np.linalg.solve(a, rhs)
    scale = float(np.max(np.abs(rhs)))
    resid = float(np.max(np.abs(a @ psi - rhs)))
    resid = resid / scale if scale > 0 else resid
    if not np.all(np.isfinite(psi)) or resid > 1e-8:
        raise NumericalError(
            f"combined-field system is ill-conditioned: relative solve "
            f"residual {resid:.2e}, one-norm condition estimate "
            f"{_condition_one_norm(a):.2e}")
    cond = _condition_one_norm(a) if estimate_condition else None
    return DensitySolution(psi=psi, k=k, eta=eta, solve_residual=resid,
                           condition_estimate=cond)


def scattered_field(points, obst, density, cutoff=math.inf):
    """Trapezoid evaluation of the mixed potential at exterior points.

    Accuracy degrades within about one node spacing of the boundary
    and the representation is not the physical field inside the
    obstacle; both cases emit a warning.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    single_pt = np.asarray(points).ndim == 1
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be an (n, 2) array")
    near = np.zeros(len(pts), dtype=bool)
    for lo in range(0, len(pts), _CONTAINS_CHUNK):
        chunk = pts[lo:lo + _CONTAINS_CHUNK]
        d = np.hypot(chunk[:, 0, None] - obst.q[None, :, 0],
                     chunk[:, 1, None] - obst.q[None, :, 1])
        near[lo:lo + _CONTAINS_CHUNK] = d.min(axis=1) < obst.max_spacing
    if np.any(near) or np.any(obst.contains(pts)):
        warnings.warn("evaluation point near or inside the obstacle "
                      "boundary; the potential is inaccurate there",
                      RuntimeWarning, stacklevel=2)
    w = obst.step * obst.jacobian * density.psi
    ca = 0.25 * density.eta * w
    cb = 0.25j * density.k * w
    out = kernels.mixed_layer_eval(pts[:, 0].copy(), pts[:, 1].copy(),
                                   obst.q[:, 0].copy(), obst.q[:, 1].copy(),
                                   obst.normals[:, 0].copy(),
                                   obst.normals[:, 1].copy(),
                                   ca, cb, density.k, cutoff)
    return complex(out[0]) if single_pt else out


def _fourier_shift(values, n, shift):
    """Trigonometric interpolation of uniform periodic samples to the
    grid offset by the given parameter shift."""
    modes = np.fft.fftfreq(n, d=1.0 / n)
    phase = np.exp(1j * modes * shift)
    return np.fft.ifft(np.fft.fft(values, axis=0) *
                       (phase if values.ndim == 1 else phase[:, None]),
                       axis=0)


def midpoint_obstacle(obst):
    """The same curve resampled halfway between the existing nodes."""
    half = obst.step / 2.0
    q = _fourier_shift(obst.q, obst.n_nodes, half).real
    dq = _fourier_shift(obst.dq, obst.n_nodes, half).real
    jac = np.hypot(dq[:, 0], dq[:, 1])
    normals = np.column_stack([dq[:, 1] / jac, -dq[:, 0] / jac])
    return ObstacleDiscretization(n_nodes=obst.n_nodes,
                                  tau=obst.tau + half, q=q, dq=dq,
                                  normals=normals, jacobian=jac)


def boundary_residual(obst, density, u_inc):
    """Total-field trace u_i + u_s at nodes offset halfway between the
    collocation nodes, evaluated to the quadrature's own order.

    The density and the curve are resampled to the offset grid by
    trigonometric interpolation and the exterior trace follows from
    the jump relations with the same corrected quadrature, so the
    returned residuals measure the solution error rather than the
    naive near-boundary evaluation error. u_inc must expose
    values(px, py, k).
    """
    mid = midpoint_obstacle(obst)
    psi_mid = _fourier_shift(density.psi, obst.n_nodes, obst.step / 2.0)
    a_mid = _system_matrix(mid, density.k, density.eta)
    ui_mid = u_inc.values(mid.q[:, 0].copy(), mid.q[:, 1].copy(), density.k)
    return ui_mid + 0.5 * (a_mid @ psi_mid)

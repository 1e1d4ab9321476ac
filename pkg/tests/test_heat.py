"""Tests for the transient thermal cloaking pipeline."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from extcloak import cloak, heat, kernels, scatter
from extcloak.errors import DomainError

CENTER = (5.0, 5.0)
DELTA_C = 10.0 / 6.0
SOURCE = (8.0, 5.0)

# i sqrt(-i (1 + 0.5i) / 1.5) at 40 significant digits.
WAVENUMBER_ORACLE = 0.45388470957204350699 + 0.73440088706144113431j
# i sqrt(P(-i)) for P(s) = s + s^2 at 40 significant digits.
POLY_WAVENUMBER_ORACLE = 1.098684113467809966 + 0.4550898605622273413j


def small_scenario(**overrides):
    geom, quad = cloak.build_geometry(CENTER, DELTA_C, n_int=64)
    config = dict(geometry=geom, quadrature=quad,
                  medium=heat.HeatMedium(sigma=1.5),
                  source=cloak.PointSource(SOURCE),
                  contour=heat.build_contour(1.0, 16),
                  grid=heat.GridSpec(0.0, 10.0, 12, 0.0, 10.0, 12),
                  m_max=8,
                  obstacle=scatter.kite_obstacle(CENTER, 0.4, 16))
    config.update(overrides)
    return heat.HeatScenario(**config)


def test_heat_wavenumber_matches_extended_precision():
    k = heat.heat_wavenumber(1.0 + 0.5j, 1.5)
    assert abs(k - WAVENUMBER_ORACLE) <= 1e-15 * abs(WAVENUMBER_ORACLE)


def test_heat_wavenumber_unit_example():
    assert heat.heat_wavenumber(1.5j, 1.5) == 1j


@settings(max_examples=50, deadline=None)
@given(st.floats(-50.0, 50.0),
       st.floats(1e-3, 50.0),
       st.floats(0.1, 5.0))
def test_heat_wavenumber_upper_half_plane_is_dissipative(re, im, sigma):
    omega = complex(re, im)
    k = heat.heat_wavenumber(omega, sigma)
    assert abs(k.imag) > abs(k.real)
    assert k * k == pytest.approx(1j * omega / sigma, rel=1e-12)


def test_heat_wavenumber_validation():
    for omega in (0.0, float("inf"), complex("nan"), 1 + 1j * float("inf")):
        with pytest.raises(DomainError):
            heat.heat_wavenumber(omega, 1.0)
    for sigma in (0.0, -1.5, float("nan")):
        with pytest.raises(DomainError):
            heat.heat_wavenumber(1.0, sigma)
    with pytest.raises(DomainError):
        heat.heat_wavenumber(-2j, 2.0)


def test_polynomial_wavenumber_examples():
    assert heat.polynomial_wavenumber([0, 0, 1], 2.0) == 2.0
    assert heat.polynomial_wavenumber([0, 1], 1j) == 1j
    k = heat.polynomial_wavenumber([0, 1, 1], 1.0)
    assert abs(k - POLY_WAVENUMBER_ORACLE) <= 1e-15 * abs(k)


def test_polynomial_wavenumber_real_tie_prefers_positive():
    assert heat.polynomial_wavenumber([0, 0, 1], -2.0) == 2.0


@settings(max_examples=50, deadline=None)
@given(st.floats(-20.0, 20.0), st.floats(1e-3, 20.0), st.floats(0.1, 5.0))
def test_polynomial_wavenumber_linear_matches_heat_map(re, im, sigma):
    omega = complex(re, im)
    expected = heat.heat_wavenumber(omega, sigma)
    assert heat.polynomial_wavenumber([0, 1 / sigma], omega) == \
        pytest.approx(expected, rel=1e-12)


def test_polynomial_wavenumber_validation():
    for coeffs in ([5.0], [3.0, 0.0, 0.0], [], [0, float("nan")]):
        with pytest.raises(DomainError):
            heat.polynomial_wavenumber(coeffs, 1.0)
    with pytest.raises(DomainError):
        heat.polynomial_wavenumber([0, 1], 0.0)


def test_contour_bookkeeping():
    ct = heat.build_contour(4.0, 512)
    assert ct.n_samples == 1026
    assert ct.dt == 4.0 / 512
    assert ct.big_t == 1026 * ct.dt
    assert ct.dw == pytest.approx(2 * math.pi / ct.big_t, rel=1e-15)
    assert ct.shift == pytest.approx(math.log(1e6) / ct.big_t, rel=1e-15)
    assert ct.shift > 0
    times = ct.times
    assert times.shape == (513,)
    assert times[0] == 0.0 and times[-1] == 4.0
    np.testing.assert_allclose(np.diff(times), ct.dt, rtol=1e-12)
    freqs = ct.frequencies
    assert freqs.shape == (1026,)
    np.testing.assert_allclose(freqs.real, ct.dw * np.arange(1026),
                               rtol=1e-15)
    assert np.all(freqs.imag == ct.shift)
    np.testing.assert_array_equal(ct.laplace_points, -1j * freqs)


def test_contour_output_window_in_convergent_half():
    for t_final, n_steps in ((0.25, 2), (1.0, 16), (4.0, 512)):
        ct = heat.build_contour(t_final, n_steps)
        assert ct.t_final < ct.big_t / 2


def test_contour_sample_count_example():
    assert heat.build_contour(2.0, 1024).n_samples == 2050


def test_contour_alpha_offsets_shift():
    base = heat.build_contour(2.0, 64)
    lifted = heat.build_contour(2.0, 64, alpha=0.5)
    assert lifted.shift == base.shift + 0.5


def test_contour_validation():
    for bad in (0.0, -1.0, float("inf")):
        with pytest.raises(DomainError):
            heat.build_contour(bad, 16)
    with pytest.raises(DomainError):
        heat.build_contour(1.0, 1)
    with pytest.raises(DomainError):
        heat.build_contour(1.0, 16, alpha=-0.1)


def test_inverse_laplace_polynomial_transform():
    ct = heat.build_contour(3.0, 512)
    u = heat.inverse_laplace(1.0 / ct.laplace_points ** 2, ct)
    window = ct.times >= 0.1 * ct.t_final
    rel = np.abs(u[window] - ct.times[window]) / ct.times[window]
    assert np.max(rel) <= 5e-4


def test_inverse_laplace_exponential_transform_converges_slowly():
    # 1/(s+1) decays only like 1/s, outside the decay hypothesis of
    # the inversion formula; the error floor shrinks like 1/N.
    errors = {}
    for n_steps in (512, 1024):
        ct = heat.build_contour(1.0, n_steps)
        u = heat.inverse_laplace(1.0 / (ct.laplace_points + 1.0), ct)
        window = ct.times >= 0.1 * ct.t_final
        exact = np.exp(-ct.times[window])
        errors[n_steps] = np.max(np.abs(u[window] - exact) / exact)
    assert errors[512] <= 5e-2
    assert errors[1024] <= 0.7 * errors[512]


def test_inverse_laplace_heat_kernel():
    sigma = 1.5
    ct = heat.build_contour(4.0, 1024)
    window = ct.times >= 0.5
    for r in (1.0, 3.0):
        wavenumbers = np.array([heat.heat_wavenumber(w, sigma)
                                for w in ct.frequencies])
        samples = 0.25j * kernels.hankel01(wavenumbers * r)[0] / sigma
        u = heat.inverse_laplace(samples, ct)
        exact = np.array([float(oracles.heat_kernel2d(r, t, sigma))
                          for t in ct.times[window]])
        rel = np.max(np.abs(u[window] - exact) / exact)
        assert rel <= 1e-5
        assert abs(u[0]) <= 1e-3 * np.max(np.abs(u))


def test_inversion_series_real_for_conjugate_symmetric_samples():
    ct = heat.build_contour(2.0, 32)
    rng = np.random.default_rng(7)
    samples = np.fft.fft(rng.standard_normal(ct.n_samples))
    series = heat._inversion_series(samples, ct)
    assert np.max(np.abs(series.imag)) <= 1e-10 * np.max(np.abs(series.real))


def test_inverse_laplace_batched_matches_columns():
    ct = heat.build_contour(1.0, 32)
    rng = np.random.default_rng(3)
    samples = rng.standard_normal((ct.n_samples, 3)) \
        + 1j * rng.standard_normal((ct.n_samples, 3))
    batch = heat.inverse_laplace(samples, ct)
    assert batch.shape == (33, 3)
    for j in range(3):
        np.testing.assert_array_equal(batch[:, j],
                                      heat.inverse_laplace(samples[:, j], ct))


def test_inverse_laplace_validates_sample_count():
    ct = heat.build_contour(1.0, 16)
    with pytest.raises(DomainError):
        heat.inverse_laplace(np.zeros(ct.n_samples - 1, dtype=complex), ct)


def test_heat_medium():
    medium = heat.HeatMedium(sigma=1.5, rho_c=2.0)
    assert medium.kappa == 3.0
    assert heat.HeatMedium(sigma=2.0).rho_c == 1.0
    for sigma, rho_c in ((0.0, 1.0), (-1.0, 1.0), (1.0, 0.0),
                         (float("nan"), 1.0)):
        with pytest.raises(DomainError):
            heat.HeatMedium(sigma=sigma, rho_c=rho_c)


def test_grid_spec_points_y_major():
    grid = heat.GridSpec(0.0, 1.0, 3, 10.0, 12.0, 2)
    assert grid.n_points == 6
    expected = np.array([[0.0, 10.0], [0.5, 10.0], [1.0, 10.0],
                         [0.0, 12.0], [0.5, 12.0], [1.0, 12.0]])
    np.testing.assert_array_equal(grid.points(), expected)


def test_grid_spec_validation():
    with pytest.raises(DomainError):
        heat.GridSpec(0.0, 0.0, 3, 0.0, 1.0, 3)
    with pytest.raises(DomainError):
        heat.GridSpec(0.0, 1.0, 1, 0.0, 1.0, 3)


def test_scenario_validation():
    with pytest.raises(DomainError):
        small_scenario(source=cloak.PointSource(CENTER))
    with pytest.raises(DomainError):
        small_scenario(obstacle=scatter.kite_obstacle(CENTER, 0.9, 16))
    with pytest.raises(DomainError):
        small_scenario(subsample=1)
    for cutoff in (0.0, -1.0, float("inf")):
        with pytest.raises(DomainError):
            small_scenario(cutoff=cutoff)


def test_scenario_components_and_shapes():
    scenario = small_scenario()
    fields = heat.simulate_scenario(scenario)
    assert sorted(fields) == ["cloak", "incident", "scattered", "total"]
    for field in fields.values():
        assert field.grid is scenario.grid
        assert field.values.shape == (144, 17)
        np.testing.assert_array_equal(field.times, scenario.contour.times)
        np.testing.assert_array_equal(field.points, scenario.grid.points())
        assert np.all(np.isfinite(field.values))
    np.testing.assert_array_equal(
        fields["total"].values,
        fields["incident"].values + fields["cloak"].values
        + fields["scattered"].values)


def test_scenario_linearity_in_amplitude():
    unit = heat.simulate_scenario(small_scenario())
    double = heat.simulate_scenario(
        small_scenario(source=cloak.PointSource(SOURCE, 2.0)))
    for name in unit:
        np.testing.assert_allclose(double[name].values,
                                   2.0 * unit[name].values,
                                   rtol=1e-12, atol=0.0)


def test_scenario_zero_source_gives_zero_fields():
    fields = heat.simulate_scenario(
        small_scenario(source=cloak.PointSource(SOURCE, 0.0)))
    for field in fields.values():
        assert np.all(field.values == 0.0)


def test_scenario_cloak_toggle():
    on = heat.simulate_scenario(small_scenario())
    off = heat.simulate_scenario(small_scenario(cloak_active=False))
    assert np.all(off["cloak"].values == 0.0)
    assert np.max(np.abs(on["cloak"].values)) > 0.0
    # The cloak suppresses the obstacle's incident trace, so the
    # scattered component shrinks by more than an order of magnitude.
    assert np.max(np.abs(on["scattered"].values)) <= \
        0.1 * np.max(np.abs(off["scattered"].values))


def test_scenario_workers_are_bitwise_deterministic():
    serial = heat.simulate_scenario(small_scenario())
    parallel = heat.simulate_scenario(small_scenario(), workers=2)
    for name in serial:
        np.testing.assert_array_equal(parallel[name].values,
                                      serial[name].values)


def test_subsample_only_touches_scattered_component():
    config = dict(contour=heat.build_contour(1.0, 64),
                  obstacle=scatter.kite_obstacle(CENTER, 0.4, 16))
    full = heat.simulate_scenario(small_scenario(**config))
    sub = heat.simulate_scenario(small_scenario(subsample=40, **config))
    np.testing.assert_array_equal(sub["incident"].values,
                                  full["incident"].values)
    np.testing.assert_array_equal(sub["cloak"].values, full["cloak"].values)
    scale = np.nanmax(np.abs(full["total"].values))
    diff = np.nanmax(np.abs(sub["total"].values - full["total"].values))
    assert diff <= 2e-2 * scale


def test_subsample_of_every_frequency_is_exact():
    scenario = small_scenario()
    full = heat.simulate_scenario(scenario)
    sub = heat.simulate_scenario(
        small_scenario(subsample=scenario.contour.n_samples))
    for name in full:
        np.testing.assert_array_equal(sub[name].values, full[name].values)


def test_singular_grid_nodes_carry_confined_nan():
    # linspace(0, 10, 10) bitwise-hits one device center of this
    # geometry in both coordinates; the integer 11-point grid hits the
    # source location instead.
    device_grid = heat.GridSpec(0.0, 10.0, 10, 0.0, 10.0, 10)
    fields = heat.simulate_scenario(small_scenario(grid=device_grid))
    pts = fields["cloak"].points
    geom = small_scenario().geometry
    on_device = ((pts[:, 0, None] == geom.device_centers[None, :, 0]) &
                 (pts[:, 1, None] == geom.device_centers[None, :, 1]))
    hit = np.flatnonzero(on_device.any(axis=1))
    assert hit.size == 1
    for name in ("cloak", "total"):
        bad = ~np.isfinite(fields[name].values)
        assert np.all(bad[hit])
        assert not np.any(np.delete(bad, hit, axis=0))
    for name in ("incident", "scattered"):
        assert np.all(np.isfinite(fields[name].values))

    source_grid = heat.GridSpec(0.0, 10.0, 11, 0.0, 10.0, 11)
    fields = heat.simulate_scenario(small_scenario(grid=source_grid))
    pts = fields["incident"].points
    hit = np.flatnonzero((pts[:, 0] == SOURCE[0]) & (pts[:, 1] == SOURCE[1]))
    assert hit.size == 1
    bad = ~np.isfinite(fields["incident"].values)
    assert np.all(bad[hit])
    assert not np.any(np.delete(bad, hit, axis=0))


def test_contour_frequencies_stay_in_dissipative_sector():
    for sigma in (0.2, 1.5, 7.0):
        ct = heat.build_contour(2.0, 64)
        for omega in ct.frequencies:
            k = heat.heat_wavenumber(omega, sigma)
            assert abs(k.imag) > abs(k.real)


def test_cloaked_residual_suppressed_at_final_time():
    geom, quad = cloak.build_geometry(CENTER, DELTA_C, n_int=64)
    config = dict(geometry=geom, quadrature=quad,
                  contour=heat.build_contour(4.0, 128),
                  grid=heat.GridSpec(0.0, 10.0, 15, 0.0, 10.0, 15),
                  m_max=22,
                  obstacle=scatter.kite_obstacle(CENTER, 0.5, 64))
    on = heat.simulate_scenario(small_scenario(**config))
    off = heat.simulate_scenario(small_scenario(cloak_active=False, **config))
    pts = on["total"].points
    region = cloak.divergence_region(geom, quad)
    dist = np.hypot(pts[:, 0, None] - region.centers[None, :, 0],
                    pts[:, 1, None] - region.centers[None, :, 1])
    probe = np.all(dist >= region.radii, axis=1) & \
        np.all(dist >= 1.0, axis=1)
    residual_on = np.max(np.abs(
        on["total"].values[probe, -1] - on["incident"].values[probe, -1]))
    residual_off = np.max(np.abs(
        off["total"].values[probe, -1] - off["incident"].values[probe, -1]))
    assert residual_on <= 0.15 * residual_off


def test_temperature_cap_restricts_to_cloaked_disk():
    geom, _ = cloak.build_geometry((0.0, 0.0), 1.0)
    points = np.array([[0.0, 0.0], [0.5, 0.0], [3.0, 0.0]])
    values = np.array([[0.5, -2.0], [1.0, 0.25], [50.0, -50.0]])
    field = heat.TimeFieldGrid(grid=None, points=points,
                               times=np.array([0.0, 1.0]), values=values)
    assert heat.temperature_cap(field, geom) == pytest.approx(200.0)
    assert heat.temperature_cap(field, geom, factor=3.0) == pytest.approx(6.0)
    outside = heat.TimeFieldGrid(grid=None, points=points[2:],
                                 times=np.array([0.0, 1.0]),
                                 values=values[2:])
    with pytest.raises(DomainError):
        heat.temperature_cap(outside, geom)


def test_temperature_cap_reproduces_reference_threshold():
    # sigma = 1.5, T = 2 heating of the standard disk: the threshold
    # 100 max|incident| lands near 6.2 on a 0.05-spaced lattice.
    geom, quad = cloak.build_geometry(CENTER, DELTA_C, n_int=128)
    axis = np.linspace(0.0, 10.0, 200)
    keep = (axis >= CENTER[0] - DELTA_C - 0.06) & \
        (axis <= CENTER[0] + DELTA_C + 0.06)
    sub = axis[keep]
    grid = heat.GridSpec(sub[0], sub[-1], sub.size, sub[0], sub[-1], sub.size)
    scenario = heat.HeatScenario(geometry=geom, quadrature=quad,
                                 medium=heat.HeatMedium(sigma=1.5),
                                 source=cloak.PointSource(SOURCE),
                                 contour=heat.build_contour(2.0, 256),
                                 grid=grid, cloak_active=False)
    fields = heat.simulate_scenario(scenario)
    u_max = heat.temperature_cap(fields["incident"], geom)
    assert 5.9 <= u_max <= 6.6


def ring_field(geometry, radii, peaks):
    """Synthetic per-device field: one point per radius per device,
    offset along +x, peaking at the given per-device levels."""
    points, values = [], []
    for center, device_peaks in zip(geometry.device_centers, peaks):
        for r, peak in zip(radii, device_peaks):
            points.append([center[0] + r, center[1]])
            values.append([peak / 2.0, -peak])
    return heat.TimeFieldGrid(grid=None, points=np.asarray(points),
                              times=np.array([0.0, 1.0]),
                              values=np.asarray(values))


def test_safe_radius_synthetic_rings():
    geom, _ = cloak.build_geometry((0.0, 0.0), 1.0)
    radii = np.array([0.2, 0.4, 0.6, 0.8])
    quiet = np.full((4, 4), 0.5)

    calm = heat.safe_radius(ring_field(geom, radii, quiet), geom, 1.0)
    np.testing.assert_array_equal(calm.radii, 0.0)
    assert not np.any(calm.saturated)
    assert calm.u_max == 1.0

    hot = quiet.copy()
    hot[0, :2] = 5.0
    one_hot = heat.safe_radius(ring_field(geom, radii, hot), geom, 1.0)
    assert one_hot.radii[0] == pytest.approx(0.6)
    np.testing.assert_array_equal(one_hot.radii[1:], 0.0)
    assert not np.any(one_hot.saturated)

    worst = quiet.copy()
    worst[2, :] = 5.0
    saturated = heat.safe_radius(ring_field(geom, radii, worst), geom, 1.0)
    assert saturated.radii[2] == pytest.approx(0.8)
    assert saturated.saturated[2]
    assert not np.any(saturated.saturated[[0, 1, 3]])


def test_safe_radius_voronoi_ownership():
    geom, _ = cloak.build_geometry((0.0, 0.0), 1.0)
    radii = np.array([0.3, 0.9])
    peaks = np.full((4, 2), 0.5)
    peaks[1, 1] = 5.0
    result = heat.safe_radius(ring_field(geom, radii, peaks), geom, 1.0)
    assert result.saturated[1]
    assert result.radii[1] == pytest.approx(0.9)
    np.testing.assert_array_equal(result.radii[[0, 2, 3]], 0.0)


def test_safe_radius_validation():
    geom, _ = cloak.build_geometry((0.0, 0.0), 1.0)
    radii = np.array([0.2, 0.4])
    field = ring_field(geom, radii, np.full((4, 2), 0.5))
    for u_max in (0.0, -1.0, float("inf")):
        with pytest.raises(DomainError):
            heat.safe_radius(field, geom, u_max)
    partial = heat.TimeFieldGrid(grid=None, points=field.points[:4],
                                 times=field.times, values=field.values[:4])
    with pytest.raises(DomainError):
        heat.safe_radius(partial, geom, 1.0)


def test_safe_radius_from_simulated_device_fields():
    # Sweep-style configuration: the standoff radii stay strictly
    # inside the touching threshold delta_d / sqrt(2) and fill a
    # moderate fraction of the divergence radii.
    geom, quad = cloak.build_geometry((10.0, 10.0), 2.0, n_int=128)
    scenario = heat.HeatScenario(geometry=geom, quadrature=quad,
                                 medium=heat.HeatMedium(sigma=1.3),
                                 source=cloak.PointSource((10.0, 1.0)),
                                 contour=heat.build_contour(1.0, 64),
                                 grid=heat.GridSpec(0.0, 20.0, 101,
                                                    0.0, 20.0, 101),
                                 m_max=22)
    fields = heat.simulate_scenario(scenario)
    u_max = heat.temperature_cap(fields["incident"], geom)
    result = heat.safe_radius(fields["cloak"], geom, u_max)
    region = cloak.divergence_region(geom, quad)
    assert not np.any(result.saturated)
    assert np.all(result.radii > 0.0)
    assert np.all(result.radii < geom.delta_d / math.sqrt(2.0))
    ratios = result.radii / region.radii
    assert np.all((0.3 <= ratios) & (ratios <= 0.95))

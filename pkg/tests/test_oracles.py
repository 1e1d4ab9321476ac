"""Checks that the extended-precision reference implementations agree
with mpmath's own Bessel routines.

The reference series in oracles.py are written independently of both
the package and of mpmath's evaluation strategy, so agreement here is
a genuine cross-check, not a tautology. mpmath's hankel1 loses digits
at its default precision for large |Im z| (the J + iY subtraction
cancels), so the comparison raises the working precision with |z|.
"""

import mpmath as mp
import pytest

import oracles

CASES = [
    (0, mp.mpc(1.0, 0.0)),
    (1, mp.mpc(1.0, 0.0)),
    (0, mp.mpc(0.0, 1.0)),
    (3, mp.mpc(2.5, -1.0)),
    (7, mp.mpc(-4.0, 3.0)),
    (12, mp.mpc(8.0, 8.0)),
    (2, mp.mpc(-6.0, -2.0)),
    (25, mp.mpc(14.0, -9.0)),
    (5, mp.mpc(0.05, 0.02)),
    (40, mp.mpc(21.0, 30.0)),
]


def _close(a, b, tol=mp.mpf("1e-25")):
    return abs(a - b) <= tol * abs(b)


@pytest.mark.parametrize("n,z", CASES)
def test_bessel_j_matches_mpmath(n, z):
    with mp.workdps(mp.mp.dps + 30 + int(2 * abs(z))):
        ref = mp.besselj(n, z)
    assert _close(oracles.bessel_j(n, z), ref)


@pytest.mark.parametrize("n,z", CASES)
def test_bessel_j_prime_matches_mpmath(n, z):
    with mp.workdps(mp.mp.dps + 30 + int(2 * abs(z))):
        ref = mp.besselj(n, z, derivative=1)
    assert _close(oracles.bessel_j_prime(n, z), ref)


@pytest.mark.parametrize("n,z", CASES)
def test_bessel_y_matches_mpmath(n, z):
    with mp.workdps(mp.mp.dps + 30 + int(2 * abs(z))):
        ref = mp.bessely(n, z)
    assert _close(oracles.bessel_y(n, z), ref)


@pytest.mark.parametrize("n,z", CASES)
def test_hankel1_matches_mpmath(n, z):
    with mp.workdps(mp.mp.dps + 30 + int(2 * abs(z))):
        ref = mp.hankel1(n, z)
    assert _close(oracles.hankel1(n, z), ref)


def test_modified_k0_matches_mpmath():
    for z in (mp.mpc(1, 0), mp.mpc(0.3, 0.1), mp.mpc(2.0, -1.5)):
        with mp.workdps(mp.mp.dps + 30):
            ref = mp.besselk(0, z)
        assert _close(oracles.modified_k0(z), ref)


def test_hankel_h0_of_i_equals_k0_identity():
    # H_0^(1)(i x) = -(2 i / pi) K_0(x) ties the two oracles together
    with mp.workdps(mp.mp.dps + 30):
        x = mp.mpf("0.7")
        lhs = oracles.hankel1(0, mp.mpc(0, 1) * x)
        rhs = -(2 * mp.mpc(0, 1) / mp.pi) * oracles.modified_k0(x)
        assert _close(lhs, rhs)


def test_green2d_is_quarter_i_hankel():
    k = mp.mpc(10, 0.5)
    g = oracles.green2d((0.3, -0.2), (1.1, 0.9), k)
    with mp.workdps(mp.mp.dps + 20):
        dx = mp.mpf(0.3) - mp.mpf(1.1)
        dy = mp.mpf(-0.2) - mp.mpf(0.9)
        r = mp.sqrt(dx * dx + dy * dy)
        ref = mp.mpc(0, 1) / 4 * oracles.hankel1(0, k * r)
    assert _close(g, ref)


def test_heat_kernel_normalization():
    # integral over the plane of the 2D heat kernel is 1; check by
    # radial quadrature at a fixed time
    sigma = mp.mpf("1.5")
    t = mp.mpf("0.8")
    total = mp.quad(
        lambda r: 2 * mp.pi * r * oracles.heat_kernel2d(r, t, sigma),
        [0, mp.inf])
    assert abs(total - 1) < mp.mpf("1e-20")


def test_kite_arc_length_scales_linearly():
    with mp.workdps(30):
        one = oracles.kite_arc_length(1)
        half = oracles.kite_arc_length("0.5")
        assert abs(half - one / 2) < mp.mpf("1e-25") * one
        # frozen reference used by the scattering tests
        assert abs(one - mp.mpf("9.3240226732849593443")) < mp.mpf("1e-18")


def test_kite_arc_length_bounds():
    # isoperimetric lower bound from the enclosed area 1.5 pi, upper
    # bound from the supremum of the parameter speed (|q'| <= 2.8)
    one = oracles.kite_arc_length(1)
    assert one > 2 * mp.pi * mp.sqrt(mp.mpf("1.5"))
    assert one < 2 * mp.pi * mp.mpf("2.8")

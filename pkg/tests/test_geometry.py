from fractions import Fraction

import pytest

from fedosov import (DegenerateMetric, GaussianRational, Jet, KaehlerChart, NonHermitianMetric,
                     NotInvertible, WeylElement, bundle_from_metric, canonical_line_bundle,
                     chart_from_potential, conjugate, trivial_bundle)
from fedosov.geometry import mat_identity

I = GaussianRational(0, 1)
ZZB = 3  # form mask of dz ^ dzbar in dimension one


def z():
    return Jet.variable(1, 0)


def zb():
    return Jet.variable(1, 0, True)


def one():
    return Jet.const(1, 1)


def test_flat_geometry_vanishes(flat1):
    assert flat1.g[0][0] == one()
    assert flat1.gamma[0][0][0].is_zero()
    assert flat1.curv[0][0][0][0].is_zero()
    assert flat1.ricci_form.is_zero()
    assert flat1.r_can_curv.is_zero()


def test_fubini_study_metric_and_christoffel(fs1):
    t = z() * zb()
    assert fs1.g[0][0].agrees(((one() + t) ** 2).invert(8))
    gamma = zb().scale(-2) * (one() + t).invert(8)
    assert fs1.gamma[0][0][0].agrees(gamma)


def test_fubini_study_canonical_curvature_at_basepoint(fs1):
    comp = fs1.r_can_curv.terms[(0, 0, ZZB)][0]
    assert comp.value() == GaussianRational(-2, 0)
    assert fs1.r_can_curv.agrees(fs1.r_can_curv_from_riemann)


def test_disc_metric(disc1):
    t = z() * zb()
    assert disc1.g[0][0].agrees(((one() - t) ** 2).invert(8))


@pytest.mark.parametrize("name", ["flat", "fubini_study", "hyperbolic_disc"])
def test_canonical_curvature_is_imaginary(name):
    chart = chart_from_potential(name, 1, 8)
    R = chart.r_can_curv
    assert conjugate(R).agrees(-R)
    rho = chart.ricci_form
    assert conjugate(rho).agrees(rho)


def test_ricci_form_two_ways(fs1):
    assert fs1.ricci_form_from_det is not None
    assert fs1.ricci_form.agrees(fs1.ricci_form_from_det)


def test_sabotaged_chart_breaks_ricci_agreement():
    chart = chart_from_potential("fubini_study", 1, 8, sabotage=True)
    assert not chart.ricci_form.agrees(chart.ricci_form_from_det)


def test_canonical_line_bundle_curvature(fs1):
    lcan = canonical_line_bundle(fs1)
    R = lcan.curvature
    expected = fs1.r_can_curv.as_endo(1)
    assert R.agrees(expected)


def test_chern_connection_of_line_metric():
    t = z() * zb()
    H = [[((one() + t) ** 2).invert(8)]]
    b = bundle_from_metric(H)
    A = b.A_dirs[0][0][0]
    assert A.agrees(zb().scale(-2 * I) * (one() + t).invert(8))
    assert b.A_dirs[1][0][0].is_zero()
    assert b.is_type_11()
    for comp in b.compatibility_residual():
        assert comp[0][0].is_zero() or comp[0][0].agrees(Jet.zero(1))


def test_antiholomorphic_frame_uses_dbar():
    t = z() * zb()
    H = [[one() + t]]
    b = bundle_from_metric(H, "antiholomorphic", order=6)
    assert b.A_dirs[0][0][0].is_zero()
    assert not b.A_dirs[1][0][0].is_zero()


def test_identity_metric_has_flat_connection():
    b = trivial_bundle(2, 3)
    assert all(x.is_zero() for th in b.A_dirs for row in th for x in row)
    assert b.curvature.is_zero()
    assert mat_identity(2, 3) == b.H


def test_metric_validation():
    with pytest.raises(NonHermitianMetric):
        bundle_from_metric([[one(), z()], [z(), one()]])
    with pytest.raises(DegenerateMetric):
        KaehlerChart.from_metric([[z() * zb()]])
    with pytest.raises(NonHermitianMetric):
        KaehlerChart.from_metric([[one().scale(I)]])


def test_flat_omega_is_standard(flat1):
    expected = WeylElement(1, {(0, 0, ZZB): (one().scale(GaussianRational(0, Fraction(1, 2))),)})
    assert flat1.omega.agrees(expected)


def test_exact_nonconstant_metric_needs_order():
    with pytest.raises(NotInvertible):
        bundle_from_metric([[one() + z() * zb()]])

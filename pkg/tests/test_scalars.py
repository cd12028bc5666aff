from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedosov import EXACT, GaussianRational, Jet, JetOrderExhausted, NotInvertible
from fedosov.geometry import builtin_potential

I = GaussianRational(0, 1)


def z(n=1, k=0):
    return Jet.variable(n, k)


def zb(n=1, k=0):
    return Jet.variable(n, k, True)


def geometric(t: Jet, sign: int, order: int) -> Jet:
    """Hand oracle: sum_k sign^k t^k truncated at total degree ``order``."""
    out = Jet.zero(t.dim)
    p = Jet.const(t.dim, 1)
    k = 0
    while 2 * k <= order:
        out = out + p.scale(sign ** k)
        p = p * t
        k += 1
    return out.truncate(order)


# -- Gaussian rationals --------------------------------------------------------

def test_gaussian_rational_arithmetic():
    a = GaussianRational(Fraction(1, 2), 3)
    b = GaussianRational(-1, Fraction(2, 3))
    assert a * b == GaussianRational(Fraction(-1, 2) - 2, Fraction(1, 3) - 3)
    assert (a / b) * b == a
    assert a.conjugate() == GaussianRational(Fraction(1, 2), -3)
    assert str(GaussianRational(0, -1)) == "-1*i"


# -- jet arithmetic ---------------------------------------------------------------

def test_product_of_binomials():
    a = (Jet.const(1, 1) + z()).truncate(5)
    b = (Jet.const(1, 1) - z()).truncate(3)
    p = a * b
    assert p.trusted_order == 3
    assert p.agrees(Jet.const(1, 1) - z() * z())


def test_additive_identity():
    f = z() * zb() + z().scale(I)
    assert (f + Jet.zero(1)) == f


def test_geometric_series_times_denominator():
    t = z() * zb()
    s = geometric(t, -1, 4)
    prod = s * (Jet.const(1, 1) + t)
    assert prod.trusted_order == 4
    assert prod.agrees(Jet.const(1, 1))


def test_derivatives():
    assert (z() * z() * zb()).derive(0) == (z() * zb()).scale(2)
    assert z().derive(0, bar=True).is_zero()


def test_log_potential_mixed_derivative():
    # d dbar log(1 + z zbar) = 1/(1 + t)^2 = 1 - 2t + 3t^2 - ...
    K = builtin_potential("fubini_study", 1, 8)
    g = K.derive(0).derive(0, True)
    t = z() * zb()
    expected = Jet.const(1, 1) - t.scale(2) + (t * t).scale(3) - (t * t * t).scale(4)
    assert g.trusted_order == 6
    assert g.agrees(expected)


def test_derive_exhausts_trust():
    f = z().truncate(1)
    d = f.derive(0)
    assert d.trusted_order == 0
    with pytest.raises(JetOrderExhausted):
        d.derive(0)


def test_invert_geometric_and_binomial():
    t = z() * zb()
    inv = (Jet.const(1, 1) - t).invert(6)
    assert inv.agrees(geometric(t, 1, 6))
    assert Jet.const(1, 1).invert() == Jet.const(1, 1)
    sq = (Jet.const(1, 1) + t) ** 2
    expected = Jet.const(1, 1) - t.scale(2) + (t * t).scale(3) - (t * t * t).scale(4)
    assert sq.invert(6).agrees(expected)


def test_invert_errors():
    with pytest.raises(NotInvertible):
        z().invert(4)
    with pytest.raises(NotInvertible):
        (Jet.const(1, 1) + z()).invert()


def test_conjugation_examples():
    assert z().scale(I).conj() == zb().scale(-I)
    t = z() * zb()
    assert t.conj() == t


# -- properties ---------------------------------------------------------------------------

_coef = st.builds(GaussianRational, st.fractions(max_denominator=4, min_value=-3, max_value=3),
                  st.fractions(max_denominator=4, min_value=-3, max_value=3))


@st.composite
def jets(draw, dim=2, degree=3, order=5):
    terms = {}
    for _ in range(draw(st.integers(0, 5))):
        e = draw(st.lists(st.integers(0, degree), min_size=2 * dim, max_size=2 * dim))
        if sum(e) <= degree:
            terms[(tuple(e[:dim]), tuple(e[dim:]))] = draw(_coef)
    return Jet(dim, terms, draw(st.sampled_from([EXACT, order])))


@settings(max_examples=40, deadline=None)
@given(jets(), jets(), jets())
def test_ring_axioms(a, b, c):
    assert ((a * b) * c).agrees(a * (b * c))
    assert (a * (b + c)).agrees(a * b + a * c)
    assert (a * b).agrees(b * a)


@settings(max_examples=40, deadline=None)
@given(jets())
def test_derivatives_commute_and_conj_involution(f):
    if f.trusted_order >= 2 or f.is_exact:
        assert f.derive(0).derive(1, True).agrees(f.derive(1, True).derive(0))
    assert f.conj().conj() == f
    assert (f * f.conj()).conj().agrees(f * f.conj())


@settings(max_examples=40, deadline=None)
@given(jets())
def test_inverse_times_self(f):
    f = (f + Jet.const(2, 1)).truncate(5) if not f.value() else f.truncate(5)
    inv = f.invert()
    assert (inv * f).agrees(Jet.const(2, 1))


def test_real_symmetric_jet_fixed_by_conj():
    f = z() * zb() + (z() * z() * zb() * zb()).scale(Fraction(3, 2))
    assert f.conj() == f

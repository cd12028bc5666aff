import random
from fractions import Fraction

import pytest

from fedosov import (GaussianRational, IncompatibleKinds, TruncationPolicy, WeylElement, circ,
                     conjugate, contraction, delta, delta_inv, delta_star, laplace_fib,
                     mu_product, poisson_fibre, proj, s_kappa, sigma, star_involution,
                     supercommutator)
from fedosov.verification import random_element
from fedosov.weyl import FlatMetric

W = WeylElement
I = GaussianRational(0, 1)
C1 = FlatMetric(1)
C2 = FlatMetric(2)


def y(n=1, k=0):
    return W.sym_gen(n, k)


def yb(n=1, k=0):
    return W.sym_gen(n, k, True)


def dz(n=1, k=0):
    return W.form_gen(n, k)


def dzb(n=1, k=0):
    return W.form_gen(n, k, True)


def lam(c=1):
    return W.constant(1, c, 1)


def yyb():
    return mu_product(y(), yb())


# -- graded commutativity --------------------------------------------------------

def test_symmetric_generators_commute():
    assert mu_product(y(), yb()).agrees(mu_product(yb(), y()))


def test_form_generators_anticommute():
    assert mu_product(dz(), dz()).is_zero()
    assert (mu_product(dz(), dzb()) + mu_product(dzb(), dz())).is_zero()
    assert not mu_product(dz(), dzb()).is_zero()


def test_policy_degree_cap():
    p = TruncationPolicy(2, 6)
    assert p.total_degree_cap == 4


# -- Koszul differential and homotopy ----------------------------------------------------------

def test_delta_examples():
    assert delta(y()).agrees(dz())
    assert delta_inv(dz()).agrees(y())
    assert delta_inv(mu_product(y(), dz())).agrees(mu_product(y(), y()).scale(Fraction(1, 2)))
    assert delta_star(dz()).agrees(y())
    assert delta(yb(), "z").is_zero()


def test_projection_examples():
    a = mu_product(y(), y()) + yyb() + dzb()
    assert proj(a, "z").agrees(mu_product(y(), y()))
    assert proj(a, "zbar").agrees(dzb())
    assert sigma(a + W.constant(1, 3)).agrees(W.constant(1, 3))


@pytest.mark.parametrize("seed", range(5))
def test_delta_squares_and_hodge(seed):
    rng = random.Random(seed)
    a = random_element(rng, 2, max_sym=3)
    assert delta(delta(a)).is_zero()
    assert delta_inv(delta_inv(a)).is_zero()
    recon = delta(delta_inv(a)) + delta_inv(delta(a)) + sigma(a)
    assert recon.agrees(a)


# -- contractions and products ---------------------------------------------------------

def test_contraction_examples():
    assert contraction(y(), yb(), "P", C1).agrees(W.constant(1, 1))
    assert contraction(yb(), y(), "P", C1).is_zero()
    assert contraction(yb(), y(), "Pbar", C1).agrees(W.constant(1, 1))
    assert poisson_fibre(y(), yb(), C1).agrees(W.constant(1, -2 * I))


def test_fibre_laplacian_and_s_kappa():
    assert laplace_fib(yyb(), C1).agrees(W.constant(1, 1))
    assert laplace_fib(mu_product(y(), y()), C1).is_zero()
    assert s_kappa(yyb(), 1, C1).agrees(yyb() + lam())


@pytest.mark.parametrize("kappa,ab,ba", [(1, 2, 0), (0, 1, -1), (-1, 0, -2)])
def test_ordered_products_of_generators(kappa, ab, ba):
    assert circ(y(), yb(), kappa, C1).agrees(yyb() + lam(ab))
    assert circ(yb(), y(), kappa, C1).agrees(yyb() + lam(ba))


def test_commutator_is_kappa_independent():
    for kappa in (-1, 0, 1):
        assert supercommutator(y(), yb(), kappa, C1).agrees(lam(2))


def test_unit_is_central():
    a = yyb() + dz()
    for kappa in (-1, 0, 1):
        assert supercommutator(W.constant(1, 1), a, kappa, C1).is_zero()


@pytest.mark.parametrize("kappa", [-1, 0, 1])
@pytest.mark.parametrize("seed", range(3))
def test_product_associative(kappa, seed):
    rng = random.Random(100 + seed)
    a, b, c = (random_element(rng, 2, max_sym=2) for _ in range(3))
    lhs = circ(circ(a, b, kappa, C2), c, kappa, C2)
    rhs = circ(a, circ(b, c, kappa, C2), kappa, C2)
    assert lhs.agrees(rhs)


@pytest.mark.parametrize("seed", range(3))
def test_s_kappa_intertwines_orderings(seed):
    rng = random.Random(200 + seed)
    a, b = (random_element(rng, 1, max_sym=3, forms=(0,)) for _ in range(2))
    for kappa in (-1, 1):
        lhs = s_kappa(circ(a, b, 0, C1), kappa, C1)
        rhs = circ(s_kappa(a, kappa, C1), s_kappa(b, kappa, C1), kappa, C1)
        assert lhs.agrees(rhs)


# -- involution ---------------------------------------------------------------------------------

def test_involution_examples():
    assert star_involution(W.constant(1, I)).agrees(W.constant(1, -I))
    assert conjugate(y()).agrees(yb())
    with pytest.raises(IncompatibleKinds):
        conjugate(W.identity(1, 2))


@pytest.mark.parametrize("seed", range(3))
def test_involution_is_anti_multiplicative_weyl(seed):
    rng = random.Random(300 + seed)
    a, b = (random_element(rng, 1, max_sym=2, forms=(0,)) for _ in range(2))
    lhs = star_involution(circ(a, b, 0, C1))
    rhs = circ(star_involution(b), star_involution(a), 0, C1)
    assert lhs.agrees(rhs)
    assert star_involution(star_involution(a)).agrees(a)

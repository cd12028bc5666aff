import threading

import pytest

from fedosov import (ConfigError, FedosovSolution, GaussianRational, Jet, JetOrderExhausted,
                     NonClosedOmega, NonTypeOneOne, WeylElement,
                     chart_from_potential, lambda_coefficients, mu_product, omega_from_potential,
                     recursion_residual, required_jet_order, two_form)
from fedosov.weyl import sigma

I = GaussianRational(0, 1)


def z(n=1, k=0):
    return Jet.variable(n, k)


def zb(n=1, k=0):
    return Jet.variable(n, k, True)


@pytest.fixture(scope="module")
def flat_sol(flat1, policy2):
    return FedosovSolution(flat1, 0, None, policy2)


@pytest.fixture(scope="module")
def fs_sol(fs1, policy2):
    return FedosovSolution(fs1, 0, None, policy2)


def test_flat_connection_form_vanishes(flat_sol):
    assert flat_sol.r.is_zero()


def test_taylor_of_unit_is_unit(flat_sol, fs_sol):
    for sol in (flat_sol, fs_sol):
        assert sol.taylor(Jet.const(1, 1)).agrees(WeylElement.constant(1, 1))


def test_flat_taylor_is_taylor_expansion(flat_sol):
    W = WeylElement
    f = z() * zb()
    y, yb = W.sym_gen(1, 0), W.sym_gen(1, 0, True)
    hand = (W.from_jet(f) + mu_product(y, W.from_jet(zb())) + mu_product(yb, W.from_jet(z()))
            + mu_product(y, yb))
    assert flat_sol.taylor(f).agrees(hand)


@pytest.mark.parametrize("kappa,first", [(-1, 0), (0, 1), (1, 2)])
def test_flat_star_of_coordinates(flat1, policy2, kappa, first):
    sol = FedosovSolution(flat1, kappa, None, policy2)
    c = lambda_coefficients(sol.star(z(), zb()))
    assert c[0] == z() * zb()
    assert c.get(1, Jet.zero(1)).agrees(Jet.const(1, first))
    assert 2 not in c or c[2].is_zero()


def test_star_unit_and_classical_limit(fs_sol):
    f = z() * z() * zb() + z()
    g = zb() * zb() + z() * zb()
    one = Jet.const(1, 1)
    assert fs_sol.star(one, f).agrees(fs_sol.star(f, one))
    c = lambda_coefficients(fs_sol.star(f, g))
    assert c[0].agrees(f * g)


def test_fubini_study_connection_starts_at_degree_three(fs_sol):
    assert not fs_sol.r.is_zero()
    assert min(fs_sol.r.key_degree(k) for k in fs_sol.r.terms) == 3
    assert sigma(fs_sol.r).is_zero()


def test_recursion_residual_vanishes(fs_sol, fs1):
    res = recursion_residual(fs_sol.r, fs1, 0, None)
    assert res.is_zero()


def test_required_jet_order_enforced(policy2):
    assert required_jet_order(policy2) == policy2.T + 2
    low = chart_from_potential("fubini_study", 1, required_jet_order(policy2) - 1)
    with pytest.raises(JetOrderExhausted):
        FedosovSolution(low, 0, None, policy2)


def test_non_closed_omega_rejected(policy2):
    chart = chart_from_potential("flat", 2)
    omega = two_form(2, {(0, 2): zb(2, 1)}, lam=1)
    with pytest.raises(NonClosedOmega):
        FedosovSolution(chart, 0, omega, policy2)


def test_type_20_omega_needs_weyl_ordering(policy2):
    chart = chart_from_potential("flat", 2)
    omega = two_form(2, {(0, 1): Jet.const(2, 1)}, lam=1)
    with pytest.raises(NonTypeOneOne):
        FedosovSolution(chart, 1, omega, policy2)
    sol = FedosovSolution(chart, 0, omega, policy2)
    assert not sol.r.is_zero()


def test_omega_must_start_at_lambda_one(flat1, policy2):
    omega = two_form(1, {(0, 1): Jet.const(1, I)}, lam=0)
    with pytest.raises(ConfigError):
        FedosovSolution(flat1, 0, omega, policy2)


def test_omega_from_potential_is_closed_and_real(flat1, policy2):
    omega = omega_from_potential(z() * zb() * z() * zb())
    sol = FedosovSolution(flat1, 0, omega, policy2)
    assert recursion_residual(sol.r, flat1, 0, omega).is_zero()


def test_concurrent_products_agree(fs_sol):
    pairs = [(z() ** a * zb() ** b, zb() ** a * z()) for a in range(1, 3) for b in range(2)]
    serial = [fs_sol.star(f, g) for f, g in pairs]
    results = [None] * len(pairs)

    def work(i):
        f, g = pairs[i]
        results[i] = fs_sol.star(f, g)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(len(pairs))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for a, b in zip(serial, results):
        assert a.agrees(b)

"""Independent oracles, seeded random data and the named check suites.

A suite is a list of :class:`Check` objects (id, anchor, thunk).  Running a
check yields a :class:`CheckReport`; failures always carry a witness, and a
single check can be replayed by id with the same seed.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable

from .errors import FedosovError
from .scalars import EXACT, GaussianRational, Jet, pack
from .weyl import WeylElement, TruncationPolicy, shape, unit_sym

SUITES = ("graded", "geometry", "fedosov", "wick", "hermitian", "morita")


# -- reports -------------------------------------------------------------------------

@dataclass
class CheckReport:
    check_id: str
    anchor: str
    status: str
    witness: dict | None = None
    lambda_order: int | None = None
    cap: int | None = None
    wall_time: float = 0.0
    suite: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_record(self) -> dict:
        return {"suite": self.suite, "id": self.check_id, "anchor": self.anchor,
                "status": self.status, "lambda_order": self.lambda_order, "cap": self.cap,
                "witness": self.witness}


@dataclass
class Check:
    check_id: str
    anchor: str
    run: Callable[[random.Random], object]


def element_witness(a: WeylElement, b: WeylElement, cap=None) -> dict | None:
    """``None`` when ``a`` and ``b`` agree, else the first differing coefficient."""
    d = a.first_difference(b, cap)
    if d is None:
        return None
    key, entry, (alpha, beta, v1, v2) = d
    return {"key": key, "entry": entry, "monomial": {"z": list(alpha), "zbar": list(beta)},
            "lhs": str(v1), "rhs": str(v2)}


def jet_witness(a: Jet, b: Jet) -> dict | None:
    d = a.first_difference(b)
    if d is None:
        return None
    alpha, beta, v1, v2 = d
    return {"monomial": {"z": list(alpha), "zbar": list(beta)}, "lhs": str(v1), "rhs": str(v2)}


def first_failure(pairs) -> dict | None:
    """First witness over ``(label, lhs, rhs)`` triples of elements."""
    for label, a, b in pairs:
        w = element_witness(a, b)
        if w is not None:
            w["case"] = label
            return w
    return None


def expect_zero(label, a: WeylElement) -> dict | None:
    return first_failure([(label, a, a.like({}))])


# -- random data ------------------------------------------------------------------------

_SMALL = [Fraction(p, q) for p in range(-3, 4) for q in (1, 2)]


def random_scalar(rng: random.Random) -> GaussianRational:
    return GaussianRational(rng.choice(_SMALL), rng.choice(_SMALL))


def random_jet(rng: random.Random, dim: int, degree: int = 3, density: float = 0.5,
               holomorphic: bool = False, antiholomorphic: bool = False,
               real_coeffs: bool = False) -> Jet:
    """Random polynomial jet (exact) with small Gaussian-rational coefficients."""
    coeffs = {}
    for exps in itertools.product(range(degree + 1), repeat=2 * dim):
        if sum(exps) > degree:
            continue
        a, b = exps[:dim], exps[dim:]
        if holomorphic and any(b):
            continue
        if antiholomorphic and any(a):
            continue
        if rng.random() < density:
            c = random_scalar(rng)
            if real_coeffs:
                c = GaussianRational(c.re)
            coeffs[(tuple(a), tuple(b))] = c
    if not coeffs:
        coeffs[((0,) * dim, (0,) * dim)] = GaussianRational(1)
    return Jet(dim, coeffs)


def random_element(rng: random.Random, dim: int, kind: str = "scalar", rank: int = 1,
                   terms: int = 3, max_lambda: int = 1, max_sym: int = 2, forms=(0, 1, 2),
                   jet_degree: int = 2) -> WeylElement:
    """Random element with a few keys and exact jet values."""
    out = {}
    size = shape(kind, rank)[0] * shape(kind, rank)[1] if kind != "scalar" else 1
    for _ in range(terms):
        lam = rng.randint(0, max_lambda)
        sdeg = rng.randint(0, max_sym)
        exps = [0] * (2 * dim)
        for _ in range(sdeg):
            exps[rng.randrange(2 * dim)] += 1
        fdeg = rng.choice(forms)
        mask = 0
        for v in rng.sample(range(2 * dim), min(fdeg, 2 * dim)):
            mask |= 1 << v
        val = tuple(random_jet(rng, dim, jet_degree, 0.4) for _ in range(size))
        out[(lam, pack(exps), mask)] = val
    return WeylElement(dim, out, kind, rank)


def monomial_basis(dim: int, cap: int, forms=None, kind="scalar", rank=1):
    """All unit monomials ``lambda^p y^s (x) dx^M`` of total degree <= cap."""
    forms = range(1 << (2 * dim)) if forms is None else forms
    size = 1 if kind == "scalar" else shape(kind, rank)[0] * shape(kind, rank)[1]
    one = Jet.const(dim, 1)
    zero = Jet.zero(dim)
    for p in range(cap // 2 + 1):
        rest = cap - 2 * p
        for exps in itertools.product(range(rest + 1), repeat=2 * dim):
            if sum(exps) > rest:
                continue
            for mask in forms:
                for e in range(size):
                    val = tuple(one if i == e else zero for i in range(size))
                    yield WeylElement(dim, {(p, pack(exps), mask): val}, kind, rank)


def spanning_set(rng: random.Random, dim: int, cap: int, kind="scalar", rank=1,
                 n_random: int = 10, forms=None):
    """Unit monomials up to ``cap`` plus seeded random elements."""
    out = list(monomial_basis(dim, cap, forms, kind, rank))
    allowed = (0, 1, 2) if forms is None else tuple(sorted({bin(m).count("1") for m in forms}))
    for _ in range(n_random):
        out.append(random_element(rng, dim, kind, rank, forms=allowed))
    return out


def homogeneous_parts(a: WeylElement):
    """Split by form parity (super-signs need homogeneous inputs)."""
    even = a.filter(lambda k: bin(k[2]).count("1") % 2 == 0)
    odd = a.filter(lambda k: bin(k[2]).count("1") % 2 == 1)
    return [x for x in (even, odd) if x.terms]


# -- oracle ------------------------------------------------------------------------------

def oracle_flat_star(f: Jet, g: Jet, kappa, N: int) -> dict:
    """Closed-form kappa-ordered product of jets on flat space.

    ``sum (k+1)^|m| (k-1)^|n| lambda^(|m|+|n|) / (m! n!) d^m dbar^n f . dbar^m d^n g``
    over multi-indices ``m, n``; returns ``{lambda power: Jet}``.
    """
    kappa = Fraction(kappa)
    n = f.dim
    wp, wq = kappa + 1, kappa - 1
    out: dict = {}
    multi = [m for m in itertools.product(range(N + 1), repeat=n) if sum(m) <= N]
    for mu in multi:
        for nu in multi:
            order = sum(mu) + sum(nu)
            if order > N:
                continue
            w = wp ** sum(mu) * wq ** sum(nu)
            if w == 0:
                continue
            denom = 1
            for e in itertools.chain(mu, nu):
                denom *= factorial(e)
            df, dg = f, g
            for k, e in enumerate(mu):
                for _ in range(e):
                    df = df.derive(k)
                    dg = dg.derive(k, True)
            for k, e in enumerate(nu):
                for _ in range(e):
                    df = df.derive(k, True)
                    dg = dg.derive(k)
            term = (df * dg).scale(w / denom)
            out[order] = term if order not in out else out[order] + term
    return {k: v for k, v in sorted(out.items())}


# -- running --------------------------------------------------------------------------------

def _run_check(check: Check, suite: str, seed: int, lam, cap) -> CheckReport:
    rng = random.Random(f"{seed}:{suite}:{check.check_id}")
    t0 = time.perf_counter()
    try:
        w = check.run(rng)
    except FedosovError as e:
        w = {"error": type(e).__name__, "message": str(e)}
    dt = time.perf_counter() - t0
    status = "pass" if w is None else "fail"
    return CheckReport(check.check_id, check.anchor, status, w, lam, cap, dt, suite)


@dataclass
class SuiteConfig:
    """Everything a suite needs; built by the CLI from a problem file."""

    chart_factory: Callable
    policy: TruncationPolicy
    kappa: Fraction = Fraction(1)
    omega_factory: Callable | None = None
    bundle_factory: Callable | None = None
    seed: int = 0
    spanning_cap: int | None = None
    name: str = "config"
    extra: dict = field(default_factory=dict)


def run_suite(name: str, config: SuiteConfig, only: str | None = None) -> list:
    """Run a named suite (or a single check ``only``) and return its reports."""
    from . import suites
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    lam, cap = config.policy.lambda_order, config.policy.T
    t0 = time.perf_counter()
    try:
        ctx = suites.SuiteContext(config)
        checks = getattr(suites, f"suite_{name}")(ctx)
    except FedosovError as e:
        return [CheckReport("setup", "problem setup", "fail",
                            {"error": type(e).__name__, "message": str(e)}, lam, cap,
                            time.perf_counter() - t0, name)]
    reports = []
    for c in checks:
        if only is not None and c.check_id != only:
            continue
        reports.append(_run_check(c, name, config.seed, lam, cap))
    return sorted(reports, key=lambda r: r.check_id) if only is None else reports


def replay(report: CheckReport, config: SuiteConfig) -> CheckReport:
    """Re-evaluate the check behind ``report`` standalone."""
    out = run_suite(report.suite, config, only=report.check_id)
    if not out:
        raise ValueError(f"no check {report.check_id!r} in suite {report.suite!r}")
    return out[0]


# -- reusable checks --------------------------------------------------------------------------

def check_associativity(sol, triples, N: int | None = None) -> CheckReport:
    """``(f * g) * h = f * (g * h)`` for the supplied jet triples."""
    t0 = time.perf_counter()
    w = None
    for i, (f, g, h) in enumerate(triples):
        lhs = sol.star(sol.star(f, g), h)
        rhs = sol.star(f, sol.star(g, h))
        if N is not None:
            lhs = lhs.filter(lambda k: k[0] <= N)
            rhs = rhs.filter(lambda k: k[0] <= N)
        w = first_failure([(f"triple {i}", lhs, rhs)])
        if w is not None:
            break
    return CheckReport("associativity", "star product is associative",
                       "pass" if w is None else "fail", w, N or sol.N, sol.T,
                       time.perf_counter() - t0)


def check_separation(sol, cases) -> CheckReport:
    """Cases ``(label, f, g, expected_product_jet)``: ``f * g`` must equal the jet."""
    t0 = time.perf_counter()
    w = None
    for label, f, g, expected in cases:
        got = sol.star(f, g)
        exp = WeylElement(sol.dim, {(0, 0, 0): (expected,)})
        w = first_failure([(label, got, exp)])
        if w is not None:
            break
    return CheckReport("separation", "Wick-type separation of variables",
                       "pass" if w is None else "fail", w, sol.N, sol.T,
                       time.perf_counter() - t0)

"""Fedosov recursions, Fedosov-Taylor series and the deformed products.

All fixed points are computed by iterating on the total-degree filtration.
Every :class:`WeylElement` carries the total degree through which it is
exact, and each pass of a recursion raises that degree by one, so the number
of passes is known in advance and no convergence test is needed.
"""

from __future__ import annotations

import threading
from fractions import Fraction

from .errors import (ConfigError, IncompatibleKinds, JetOrderExhausted,
                     MissingFibreMetric, NonClosedOmega, NonTypeOneOne)
from .geometry import (BundleChart, KaehlerChart, canonical_line_bundle, connection_apply,
                       exterior_d, form_type_ok, two_form)
from .scalars import EXACT, GaussianRational, Jet
from .weyl import (TruncationPolicy, WeylElement, _vzero, circ, conjugate, conj_transpose,
                   delta, delta_inv, i_over_lambda_ad, proj, s_kappa, sigma, sigma_circ,
                   star_involution, vmul)

_I = GaussianRational(0, 1)

_OPS = {"scalar": "D", "endo": "Dprime", "section": "DE"}


# -- inputs ----------------------------------------------------------------------

def as_symbol(x, dim: int, kind: str = "scalar", rank: int = 1) -> WeylElement:
    """Coerce classical data (or a lambda-series of it) to a form-free element.

    Accepted: a :class:`WeylElement` with only ``sigma`` components, a
    :class:`Jet` (scalar, or a multiple of the identity for ``endo``), a
    constant, a list of jets (lambda-series for scalars, a column for
    sections) or a list of rows (a matrix for ``endo``).
    """
    if isinstance(x, WeylElement):
        if any(k[1] or k[2] for k in x.terms):
            raise IncompatibleKinds("classical data must have no symmetric or form part")
        if x.kind == "scalar" and kind == "endo":
            return x.as_endo(rank)
        if x.kind != kind:
            raise IncompatibleKinds(f"expected {kind} data, got {x.kind}")
        return x
    if not isinstance(x, (Jet, list, tuple)):
        x = Jet.const(dim, x)
    if isinstance(x, Jet):
        if x.dim != dim:
            raise IncompatibleKinds("jet dimension does not match the chart")
        w = WeylElement(dim, {(0, 0, 0): (x,)})
        if kind == "endo":
            return w.as_endo(rank)
        if kind != "scalar":
            raise IncompatibleKinds(f"a single jet is not {kind} data")
        return w
    if kind == "scalar":
        return WeylElement(dim, {(p, 0, 0): (j,) for p, j in enumerate(x)})
    if kind == "section":
        if len(x) != rank:
            raise IncompatibleKinds(f"section needs {rank} components")
        return WeylElement(dim, {(0, 0, 0): tuple(x)}, "section", rank)
    if kind == "endo":
        flat = tuple(e for row in x for e in row)
        if len(x) != rank or len(flat) != rank * rank:
            raise IncompatibleKinds(f"endomorphism needs a {rank}x{rank} matrix")
        return WeylElement(dim, {(0, 0, 0): flat}, "endo", rank)
    raise IncompatibleKinds(kind)


def lambda_coefficients(a: WeylElement) -> dict:
    """``{lambda power: value}`` of the form-free part (jets or jet tuples)."""
    out = {}
    for k, v in sorted(a.terms.items()):
        if k[1] or k[2]:
            continue
        out[k[0]] = v[0] if a.kind == "scalar" else v
    return out


def omega_11(dim: int, comps: dict) -> WeylElement:
    """``sum_p lambda^p c^p_{k lbar} dz^k ^ dzbar^l`` from ``{p: matrix}``."""
    out = WeylElement.zero(dim)
    for p, mat in comps.items():
        out = out + two_form(dim, {(k, dim + l): mat[k][l]
                                   for k in range(dim) for l in range(dim)}, lam=p)
    return out


def omega_from_potential(phi: Jet, lam: int = 1, coeff=1) -> WeylElement:
    """Closed (1,1) form ``coeff lambda^p i d dbar phi`` (real when ``phi`` is)."""
    n = phi.dim
    c = GaussianRational.coerce(coeff) * _I
    return omega_11(n, {lam: [[phi.derive(k).derive(l, True).scale(c) for l in range(n)]
                              for k in range(n)]})


def validate_omega(omega: WeylElement | None, dim: int, kappa) -> WeylElement:
    if omega is None:
        return WeylElement.zero(dim)
    if omega.kind != "scalar" or omega.dim != dim:
        raise ConfigError("Omega must be a scalar two-form on the chart")
    for k in omega.terms:
        if k[1] or bin(k[2]).count("1") != 2:
            raise ConfigError(f"Omega component {omega.describe_key(k)} is not a two-form")
        if k[0] < 1:
            raise ConfigError("Omega must start at order lambda^1")
    if not exterior_d(omega).is_zero():
        raise NonClosedOmega("d Omega does not vanish")
    if Fraction(kappa) != 0 and not form_type_ok(omega):
        bad = next(k for k in omega.terms
                   if not form_type_ok(omega.filter(lambda q, k=k: q == k)))
        raise NonTypeOneOne(f"Omega has a component {omega.describe_key(bad)} "
                            "that is not of type (1,1)")
    return omega


def required_jet_order(policy: TruncationPolicy) -> int:
    """Smallest potential jet order for which ``r`` is determined through the cap."""
    return policy.T + 2


# -- the recursion ---------------------------------------------------------------

def _curvature_source(chart: KaehlerChart, bundle: BundleChart | None, omega: WeylElement):
    R = chart.symplectic_R
    if bundle is None:
        return R + omega
    r = bundle.rank
    RE = bundle.curvature.scale(_I).times_lambda(1)
    return R.as_endo(r) - RE + omega.as_endo(r)


def solve_r(chart: KaehlerChart, kappa, omega: WeylElement | None, policy: TruncationPolicy,
            bundle: BundleChart | None = None, cap=None) -> WeylElement:
    """Fixed point of ``r = delta^-1(R + Omega + D r + (i/lambda) r o r)``.

    With a bundle the curvature source becomes ``R - i lambda R^E`` and ``D'``
    replaces ``D`` (the primed recursion).
    """
    n = chart.dim
    omega = validate_omega(omega, n, kappa)
    target = policy.T + 1 if cap is None else cap
    if target < 3:
        raise ConfigError("total degree cap too small for the recursion")
    src = _curvature_source(chart, bundle, omega)
    if bundle is None:
        r = WeylElement.zero(n, cap=2)
        op = "D"
    else:
        r = WeylElement.zero(n, "endo", bundle.rank, cap=2)
        op = "Dprime"
    while r.cap < target:
        c = min(r.cap + 1, target)
        rhs = src.truncate(c - 1) + connection_apply(r, chart, bundle, op, cap=c - 1)
        rhs = rhs + circ(r, r, kappa, chart, cap=c + 1).i_over_lambda()
        r = delta_inv(rhs).truncate(c)
    return r


def recursion_residual(r: WeylElement, chart, kappa, omega, bundle=None, cap=None):
    """``delta r - (R + Omega + D r + (i/lambda) r o r)`` through ``cap``."""
    c = r.cap - 1 if cap is None else cap
    src = _curvature_source(chart, bundle, validate_omega(omega, chart.dim, kappa))
    op = "D" if bundle is None else "Dprime"
    rhs = src.truncate(c) + connection_apply(r, chart, bundle, op, cap=c)
    rhs = rhs + circ(r, r, kappa, chart, cap=c + 2).i_over_lambda()
    return (delta(r) - rhs).truncate(c)


class FedosovSolution:
    """Solved Fedosov data for one chart, ordering parameter and Omega."""

    def __init__(self, chart: KaehlerChart, kappa, omega: WeylElement | None,
                 policy: TruncationPolicy, bundle: BundleChart | None = None):
        self.chart = chart
        self.kappa = Fraction(kappa)
        self.policy = policy
        self.bundle = bundle
        self.dim = chart.dim
        self._check_jets()
        self.omega = validate_omega(omega, chart.dim, kappa)
        self.r = solve_r(chart, kappa, self.omega, policy)
        self.r_prime = None
        self.r_E = None
        if bundle is not None:
            self.r_prime = solve_r(chart, kappa, self.omega, policy, bundle)
            diff = self.r_prime - self.r.as_endo(bundle.rank)
            self.r_E = diff.i_over_lambda()
        self._memo: dict = {}
        self._lock = threading.Lock()

    def _check_jets(self):
        need = required_jet_order(self.policy)
        have = self.chart.potential_order
        if have < need:
            raise JetOrderExhausted(
                f"chart jets trusted to order {have}; cap {self.policy.T} needs at least {need}")

    @property
    def N(self) -> int:
        return self.policy.lambda_order

    @property
    def T(self) -> int:
        return self.policy.T

    def _need_bundle(self):
        if self.bundle is None:
            raise IncompatibleKinds("this operation needs a bundle")

    # -- derivations -------------------------------------------------------------
    def derivative(self, a: WeylElement, which: str | None = None) -> WeylElement:
        """``-delta + D + (i/lambda) ad(r)`` and its primed / module versions."""
        which = which or {"scalar": "D", "endo": "Dprime", "section": "DE"}[a.kind]
        ch, k = self.chart, self.kappa
        c = a.cap - 1
        if which == "D":
            if a.kind != "scalar":
                raise IncompatibleKinds("D acts on scalar elements")
            return (-delta(a) + connection_apply(a, ch, None, "D", cap=c)
                    + i_over_lambda_ad(self.r, a, k, ch, cap=c)).truncate(c)
        self._need_bundle()
        if which == "Dprime":
            if a.kind == "scalar":
                a = a.as_endo(self.bundle.rank)
            return (-delta(a) + connection_apply(a, ch, self.bundle, "Dprime", cap=c)
                    + i_over_lambda_ad(self.r_prime, a, k, ch, cap=c)).truncate(c)
        if which == "DE":
            if a.kind != "section":
                raise IncompatibleKinds("D^E acts on section elements")
            return (-delta(a) + connection_apply(a, ch, self.bundle, "DE", cap=c)
                    + i_over_lambda_ad(self.r, a, k, ch, cap=c)
                    + circ(self.r_E, a, k, ch, cap=c)).truncate(c)
        raise ValueError(which)

    # -- Taylor series -------------------------------------------------------------
    def _fingerprint(self, which, x: WeylElement, cap):
        items = tuple(sorted((k, tuple((tuple(sorted(j._c.items())), j.trusted_order)
                                       for j in v)) for k, v in x.terms.items()))
        return (which, x.kind, x.rank, cap, items)

    def taylor(self, x, which: str | None = None, cap=None) -> WeylElement:
        """``tau(x)``: the flat element with symbol ``x`` (memoized)."""
        kind = {"tau": "scalar", "tau_prime": "endo", "tau_E": "section"}.get(which)
        if kind is None:
            kind = x.kind if isinstance(x, WeylElement) else "scalar"
        which = {"scalar": "tau", "endo": "tau_prime", "section": "tau_E"}[kind]
        rank = self.bundle.rank if self.bundle is not None else 1
        if kind != "scalar":
            self._need_bundle()
        x = as_symbol(x, self.dim, kind, rank)
        target = self.T if cap is None else cap
        key = self._fingerprint(which, x, target)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = self._taylor(x, which, target)
        with self._lock:
            self._memo.setdefault(key, res)
        return self._memo[key]

    def _taylor(self, x: WeylElement, which: str, target) -> WeylElement:
        ch, k = self.chart, self.kappa
        t = x.truncate(0)
        while t.cap < target:
            c = t.cap + 1
            if which == "tau":
                rhs = (connection_apply(t, ch, None, "D", cap=c - 1)
                       + i_over_lambda_ad(self.r, t, k, ch, cap=c - 1))
            elif which == "tau_prime":
                rhs = (connection_apply(t, ch, self.bundle, "Dprime", cap=c - 1)
                       + i_over_lambda_ad(self.r_prime, t, k, ch, cap=c - 1))
            else:
                rhs = (connection_apply(t, ch, self.bundle, "DE", cap=c - 1)
                       + i_over_lambda_ad(self.r, t, k, ch, cap=c - 1)
                       + circ(self.r_E, t, k, ch, cap=c - 1))
            t = (x + delta_inv(rhs.truncate(c - 1))).truncate(c)
        return t

    def projected_taylor(self, x, which: str = "tau", side: str = "z", cap=None) -> WeylElement:
        """Independent path for ``pi_z tau(x)`` / ``pi_zbar tau(x)`` (Wick ordering only)."""
        if self.kappa != 1:
            raise ConfigError("projected recursions are only available for kappa = 1")
        kind = {"tau": "scalar", "tau_prime": "endo", "tau_E": "section"}[which]
        if kind != "scalar":
            self._need_bundle()
        rank = self.bundle.rank if self.bundle is not None else 1
        x = as_symbol(x, self.dim, kind, rank)
        ch = self.chart
        op = _OPS[kind]
        target = self.T if cap is None else cap
        r_left = {"tau": self.r, "tau_prime": self.r_prime, "tau_E": self.r}[which]
        r_right = {"tau": self.r, "tau_prime": self.r_prime, "tau_E": self.r_prime}[which]
        t = x.truncate(0)
        while t.cap < target:
            c = t.cap + 1
            d = connection_apply(t, ch, self.bundle, op, part=side, cap=c - 1)
            if side == "z":
                prod = proj(circ(t, r_left, 1, ch, cap=c + 1), "z").i_over_lambda().scale(-1)
            else:
                prod = proj(circ(r_right, t, 1, ch, cap=c + 1), "zbar").i_over_lambda()
            t = (x + delta_inv((d + prod).truncate(c - 1), side)).truncate(c)
        return t

    # -- products -------------------------------------------------------------------
    def _product(self, a: WeylElement, b: WeylElement) -> WeylElement:
        out = sigma_circ(a, b, self.kappa, self.chart, cap=self.T)
        return out.filter(lambda k: k[0] <= self.N)

    def star(self, f, g) -> WeylElement:
        return self._product(self.taylor(f, "tau"), self.taylor(g, "tau"))

    def star_prime(self, A, B) -> WeylElement:
        self._need_bundle()
        return self._product(self.taylor(A, "tau_prime"), self.taylor(B, "tau_prime"))

    def right_mult(self, s, f) -> WeylElement:
        """``s . f = sigma(tau^E(s) o tau(f))``."""
        self._need_bundle()
        return self._product(self.taylor(s, "tau_E"), self.taylor(f, "tau"))

    def left_mult(self, A, s) -> WeylElement:
        """``A .' s = sigma(tau'(A) o tau^E(s))``."""
        self._need_bundle()
        return self._product(self.taylor(A, "tau_prime"), self.taylor(s, "tau_E"))

    def module_mult(self, which: str, x, y) -> WeylElement:
        if which in ("right", "s.f"):
            return self.right_mult(x, y)
        if which in ("left", "A.s"):
            return self.left_mult(x, y)
        raise ValueError(which)

    # -- Hermitian structure ------------------------------------------------------
    def _fibre_metric(self):
        self._need_bundle()
        if self.bundle.H is None:
            raise MissingFibreMetric("the bundle carries no fibre metric")
        return self.bundle.H

    def pairing_H(self, psi: WeylElement, psi2: WeylElement, cap=None) -> WeylElement:
        """``H(Psi, Psi') = conj(Psi)^T o_Wick (H Psi')``."""
        H = self._fibre_metric()
        r = self.bundle.rank
        flat = tuple(x for row in H for x in row)
        hpsi = psi2.like({k: vmul(flat, (r, r), v, (r, 1)) for k, v in psi2.terms.items()})
        return circ(conj_transpose(psi), hpsi, 1, self.chart, cap)

    def deformed_metric(self, s, s2) -> WeylElement:
        """``h(s, s') = sigma(H(tau^E s, tau^E s'))`` (Wick ordering)."""
        if self.kappa != 1:
            raise ConfigError("the deformed metric is defined for kappa = 1")
        H = self._fibre_metric()
        r = self.bundle.rank
        a = conj_transpose(self.taylor(s, "tau_E"))
        b = self.taylor(s2, "tau_E")
        flat = tuple(x for row in H for x in row)
        hb = b.like({k: vmul(flat, (r, r), v, (r, 1)) for k, v in b.terms.items()})
        return self._product(a, hb)

    def involution(self, a: WeylElement) -> WeylElement:
        if a.kind == "scalar":
            return conjugate(a)
        return star_involution(a, self.bundle)


def deformed_pairing_H(psi, psi2, sol: FedosovSolution, cap=None):
    return sol.pairing_H(psi, psi2, cap)


def deformed_metric_h(s, s2, sol: FedosovSolution):
    return sol.deformed_metric(s, s2)


def star(f, g, sol: FedosovSolution):
    return sol.star(f, g)


def star_prime(A, B, sol: FedosovSolution):
    return sol.star_prime(A, B)


def fedosov_derivative(a, sol: FedosovSolution, which=None):
    return sol.derivative(a, which)


def taylor(x, sol: FedosovSolution, which=None):
    return sol.taylor(x, which)


# -- Morita bimodule on the canonical line bundle ----------------------------------

class MoritaBimodule:
    """Sections of ``L_can`` as a Wick / anti-Wick bimodule.

    One Omega feeds both recursions, so the construction cannot be fed
    mismatched data.
    """

    def __init__(self, chart: KaehlerChart, omega: WeylElement | None, policy: TruncationPolicy):
        self.chart = chart
        self.policy = policy
        self.line = canonical_line_bundle(chart)
        self.wick = FedosovSolution(chart, 1, omega, policy)
        self.anti = FedosovSolution(chart, -1, omega, policy)
        self.omega = self.wick.omega
        self.dim = chart.dim
        self._memo: dict = {}

    @property
    def T(self):
        return self.policy.T

    def diamond(self, a: WeylElement, psi: WeylElement, cap=None) -> WeylElement:
        """``a <> Psi = S^-1 a o_Weyl Psi``."""
        return circ(s_kappa(a, -1, self.chart), psi, 0, self.chart, cap)

    def diamond_bar(self, psi: WeylElement, b: WeylElement, cap=None) -> WeylElement:
        """``Psi <>bar b = Psi o_Weyl S b``."""
        return circ(psi, s_kappa(b, 1, self.chart), 0, self.chart, cap)

    def _twisted(self, psi: WeylElement, cap) -> WeylElement:
        """``(i/lambda)(r_W <> Psi - (-1)^|Psi| Psi <>bar r_aW)``."""
        left = self.diamond(self.wick.r, psi, cap + 2)
        even = psi.filter(lambda k: bin(k[2]).count("1") % 2 == 0)
        odd = psi.filter(lambda k: bin(k[2]).count("1") % 2 == 1)
        both = (left - self.diamond_bar(even, self.anti.r, cap + 2)
                + self.diamond_bar(odd, self.anti.r, cap + 2))
        return both.i_over_lambda()

    def derivative(self, psi: WeylElement) -> WeylElement:
        c = psi.cap - 1
        return (-delta(psi) + connection_apply(psi, self.chart, self.line, "DE", cap=c)
                + self._twisted(psi, c)).truncate(c)

    def taylor(self, s, cap=None) -> WeylElement:
        x = as_symbol([s] if isinstance(s, Jet) else s, self.dim, "section", 1) \
            if not isinstance(s, WeylElement) else s
        target = self.T if cap is None else cap
        key = (self.wick._fingerprint("tau_L", x, target))
        if key in self._memo:
            return self._memo[key]
        t = x.truncate(0)
        while t.cap < target:
            c = t.cap + 1
            rhs = connection_apply(t, self.chart, self.line, "DE", cap=c - 1)
            rhs = rhs + self._twisted(t, c - 1)
            t = (x + delta_inv(rhs.truncate(c - 1))).truncate(c)
        self._memo.setdefault(key, t)
        return t

    def left(self, f, s) -> WeylElement:
        """``f <>. s = sigma(tau_Wick(f) <> tau^L(s))``."""
        a = self.wick.taylor(f, "tau")
        out = sigma(self.diamond(a, self.taylor(s), self.T))
        return out.filter(lambda k: k[0] <= self.policy.lambda_order)

    def right(self, s, g) -> WeylElement:
        """``s .<> g = sigma(tau^L(s) <>bar tau_antiWick(g))``."""
        b = self.anti.taylor(g, "tau")
        out = sigma(self.diamond_bar(self.taylor(s), b, self.T))
        return out.filter(lambda k: k[0] <= self.policy.lambda_order)


def morita_bimodule(chart: KaehlerChart, omega: WeylElement | None,
                    policy: TruncationPolicy) -> MoritaBimodule:
    return MoritaBimodule(chart, omega, policy)

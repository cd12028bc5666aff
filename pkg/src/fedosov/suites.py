"""Bodies of the named verification suites.

Each ``suite_<name>(ctx)`` builds whatever solved data it needs up front (so
setup errors surface as a failed setup record) and returns a list of
:class:`~fedosov.verification.Check` objects.
"""

from __future__ import annotations

from fractions import Fraction

from .fedosov import (FedosovSolution, MoritaBimodule, as_symbol, lambda_coefficients,
                      recursion_residual)
from .geometry import (BundleChart, bundle_from_metric, canonical_line_bundle,
                       connection_apply, form_type_ok, mat_conj_transpose, mat_inverse,
                       mat_mul)
from .errors import FedosovError
from .scalars import GaussianRational, Jet
from .verification import (Check, element_witness, expect_zero, first_failure,
                           homogeneous_parts, jet_witness, oracle_flat_star, random_element,
                           random_jet, spanning_set)
from .weyl import (WeylElement, circ, conj_transpose, conjugate, contraction,
                   delta, delta_inv, delta_star, dfact, i_over_lambda_ad, laplace_fib,
                   mu_product, poisson_fibre, proj, s_kappa, sigma, star_involution,
                   supercommutator, unit_sym)

_I = GaussianRational(0, 1)
KAPPAS = (Fraction(-1), Fraction(0), Fraction(1))


def _parity(a: WeylElement) -> int:
    return a.form_parity()


def _sign(p: int) -> int:
    return -1 if p % 2 else 1


def _over(items, fn):
    """First witness of ``fn`` over ``items`` (index recorded)."""
    for i, x in enumerate(items):
        w = fn(x)
        if w is not None:
            w.setdefault("item", i)
            return w
    return None


class SuiteContext:
    """Lazily built charts, bundles and solutions shared by one suite run."""

    def __init__(self, config):
        self.config = config
        self.policy = config.policy
        self.chart = config.chart_factory()
        self.dim = self.chart.dim
        self._omega = config.omega_factory(self.chart) if config.omega_factory else None
        self._bundle = config.bundle_factory(self.chart) if config.bundle_factory else None
        self._sols: dict = {}
        self._other: dict = {}
        cap = config.spanning_cap
        self.span_cap = cap if cap is not None else (3 if self.dim == 1 else 1)

    @property
    def omega(self):
        return self._omega

    def bundle(self, kind: str = "holomorphic") -> BundleChart:
        """Configured bundle of this kind, else a default rank-2 metric bundle."""
        b = self._bundle
        if b is not None and b.kind == kind:
            return b
        key = ("bundle", kind)
        if key not in self._other:
            H = b.H if b is not None and b.H is not None else default_metric(self.dim, 2,
                                                                           self.policy.jet_order)
            self._other[key] = bundle_from_metric(H, kind, f"{kind}-metric")
        return self._other[key]

    def line(self) -> BundleChart:
        if "line" not in self._other:
            self._other["line"] = canonical_line_bundle(self.chart)
        return self._other["line"]

    def sol(self, kappa, bundle: BundleChart | None = None) -> FedosovSolution:
        key = (Fraction(kappa), id(bundle))
        if key not in self._sols:
            self._sols[key] = FedosovSolution(self.chart, kappa, self._omega, self.policy, bundle)
        return self._sols[key]

    def morita(self) -> MoritaBimodule:
        if "morita" not in self._other:
            self._other["morita"] = MoritaBimodule(self.chart, self._omega, self.policy)
        return self._other["morita"]

    @property
    def N(self):
        return self.policy.lambda_order


def default_metric(dim: int, rank: int, order) -> list:
    """A non-diagonal Hermitian fibre metric, invertible at the basepoint."""
    z, zb = Jet.variable(dim, 0), Jet.variable(dim, 0, True)
    one, zero = Jet.const(dim, 1), Jet.zero(dim)
    c = GaussianRational(1, 1)
    t = z * zb
    H = [[one + t if i == j else zero for j in range(rank)] for i in range(rank)]
    if rank >= 2:
        H[0][1] = zb.scale(c)
        H[1][0] = z.scale(c.conjugate())
        H[1][1] = one.scale(2) + t.scale(3)
    return [[x.truncate(order) for x in row] for row in H]


# -- small helpers -------------------------------------------------------------------------

def taylor1(f: Jet, dim: int) -> WeylElement:
    """Degree-one fibre Taylor part ``d_k f y^k + dbar_k f ybar^k``."""
    terms = {}
    for v in range(2 * dim):
        d = f.derive(v % dim, v >= dim)
        if not (d.is_zero() and d.is_exact):
            terms[(0, unit_sym(v, dim), 0)] = (d,)
    return WeylElement(dim, terms)


def fibre_derivative(a: WeylElement, var: int) -> WeylElement:
    n = a.dim
    terms = {}
    for k, v in a.terms.items():
        d = dfact(k[1], unit_sym(var, n), n)
        if d is None:
            continue
        terms[(k[0], d[1], k[2])] = tuple(x.scale(d[0]) for x in v)
    return a.like(terms)


def real_poisson_oracle(a: WeylElement, b: WeylElement) -> WeylElement:
    """``sum_k d_{u_k} a d_{v_k} b - d_{v_k} a d_{u_k} b`` in real fibre coordinates.

    With ``y = u + i v`` one has ``d_u = d_y + d_ybar`` and
    ``d_v = i (d_y - d_ybar)``; only valid for the standard flat metric.
    """
    n = a.dim
    out = WeylElement.zero(n)
    for k in range(n):
        du = lambda x: fibre_derivative(x, k) + fibre_derivative(x, n + k)
        dv = lambda x: (fibre_derivative(x, k) - fibre_derivative(x, n + k)).scale(_I)
        out = out + mu_product(du(a), dv(b)) - mu_product(dv(a), du(b))
    return out


def jet_elem(j: Jet) -> WeylElement:
    return WeylElement(j.dim, {(0, 0, 0): (j,)})


def matrix_elem(M, dim) -> WeylElement:
    r = len(M)
    return WeylElement(dim, {(0, 0, 0): tuple(x for row in M for x in row)}, "endo", r)


def column_elem(v, dim) -> WeylElement:
    return WeylElement(dim, {(0, 0, 0): tuple(v)}, "section", len(v))


def conj_series(a: WeylElement) -> WeylElement:
    """Entry-wise conjugate of a form-free lambda-series (lambda real)."""
    return a.like({k: tuple(x.conj() for x in v) for k, v in a.terms.items()})


def component(a: WeylElement, i: int, j: int = 0) -> WeylElement:
    return a.entry(i, j)


def random_matrix(rng, dim, rank, **kw):
    return [[random_jet(rng, dim, **kw) for _ in range(rank)] for _ in range(rank)]


def random_vector(rng, dim, rank, **kw):
    return [random_jet(rng, dim, **kw) for _ in range(rank)]


def flat_section(rng, bundle: BundleChart, direction: str, degree=2):
    """Random section with ``nabla_Y s = 0`` for ``Y`` of the given type.

    ``direction`` is ``"10"`` (holomorphic vectors) or ``"01"``.
    """
    n, r = bundle.dim, bundle.rank
    hol = bundle.kind == "holomorphic"
    if (direction == "01") == hol:
        # the connection has no component along the direction: plain (anti)holomorphy
        return random_vector(rng, n, r, degree=degree, holomorphic=hol, antiholomorphic=not hol)
    u = random_vector(rng, n, r, degree=degree, holomorphic=not hol, antiholomorphic=hol)
    return [row[0] for row in mat_mul(bundle.Hinv, [[x] for x in u])]


def flat_endo(rng, bundle: BundleChart, direction: str, degree=2):
    n, r = bundle.dim, bundle.rank
    hol = bundle.kind == "holomorphic"
    if (direction == "01") == hol:
        return random_matrix(rng, n, r, degree=degree, holomorphic=hol, antiholomorphic=not hol)
    C = random_matrix(rng, n, r, degree=degree, holomorphic=not hol, antiholomorphic=hol)
    return mat_mul(mat_mul(bundle.Hinv, C), bundle.H)


def classical(a: WeylElement) -> WeylElement:
    return a.lambda_part(0)


def lam_trunc(a: WeylElement, N: int) -> WeylElement:
    return a.filter(lambda k: k[0] <= N)


# -- graded ----------------------------------------------------------------------------------

def suite_graded(ctx: SuiteContext) -> list:
    ch, n = ctx.chart, ctx.dim
    cap = ctx.span_cap + 1

    def span(rng, **kw):
        return spanning_set(rng, n, cap, **kw)

    def check_delta_sq(rng):
        return _over(span(rng), lambda a: expect_zero("delta^2", delta(delta(a))))

    def check_delta_star_sq(rng):
        return _over(span(rng), lambda a: expect_zero("delta*^2", delta_star(delta_star(a))))

    def check_hodge(rng):
        return _over(span(rng), lambda a: first_failure([
            ("hodge", delta(delta_inv(a)) + delta_inv(delta(a)) + sigma(a), a)]))

    def check_split_hodge(rng):
        def fn(a):
            return first_failure([
                ("z-part", delta(delta_inv(a, "z"), "z") + delta_inv(delta(a, "z"), "z")
                 + proj(a, "zbar"), a),
                ("zbar-part", delta(delta_inv(a, "zbar"), "zbar")
                 + delta_inv(delta(a, "zbar"), "zbar") + proj(a, "z"), a)])
        return _over(span(rng), fn)

    def check_split_example(rng):
        a = mu_product(WeylElement.sym_gen(n, 0, True), WeylElement.form_gen(n, 0))
        lhs = delta_inv(delta(a, "z"), "z") + delta(delta_inv(a, "z"), "z") + proj(a, "z")
        return first_failure([("dzb_s (x) dz_a", lhs, a)])

    def check_split_relations(rng):
        def fn(a):
            return first_failure([
                ("pi_z delta", proj(delta(a), "z"), delta(proj(a, "z"), "z")),
                ("pi_zbar delta", proj(delta(a), "zbar"), delta(proj(a, "zbar"), "zbar")),
                ("pi_z delta^-1", proj(delta_inv(a), "z"), delta_inv(proj(a, "z"), "z")),
                ("pi_zbar delta^-1", proj(delta_inv(a), "zbar"),
                 delta_inv(proj(a, "zbar"), "zbar")),
                ("sigma = pi_z pi_zbar", sigma(a), proj(proj(a, "zbar"), "z")),
                ("delta split", delta(a), delta(a, "z") + delta(a, "zbar"))])
        return _over(span(rng), fn)

    def check_laplace_delta(rng):
        return _over(span(rng), lambda a: first_failure([
            ("[Delta, delta]", laplace_fib(delta(a), ch), delta(laplace_fib(a, ch)))]))

    def check_leibniz(rng):
        for _ in range(10):
            a, b = random_element(rng, n), random_element(rng, n)
            lhs = laplace_fib(mu_product(a, b), ch)
            rhs = (mu_product(laplace_fib(a, ch), b) + contraction(a, b, "P", ch)
                   + contraction(a, b, "Pbar", ch) + mu_product(a, laplace_fib(b, ch)))
            w = first_failure([("Delta mu", lhs, rhs)])
            if w:
                return w
        return None

    def check_supercommutative(rng):
        for _ in range(10):
            for a in homogeneous_parts(random_element(rng, n)):
                for b in homogeneous_parts(random_element(rng, n)):
                    s = _sign(_parity(a) * _parity(b))
                    w = first_failure([("mu", mu_product(a, b), mu_product(b, a).scale(s))])
                    if w:
                        return w
        return None

    def check_assoc(kappa):
        def run(rng):
            for _ in range(6):
                a, b, c = (random_element(rng, n, max_sym=2) for _ in range(3))
                w = first_failure([(f"kappa={kappa}",
                                    circ(circ(a, b, kappa, ch), c, kappa, ch),
                                    circ(a, circ(b, c, kappa, ch), kappa, ch))])
                if w:
                    return w
            return None
        return run

    def check_intertwine(kappa):
        def run(rng):
            for _ in range(6):
                a, b = random_element(rng, n), random_element(rng, n)
                lhs = circ(a, b, kappa, ch)
                rhs = s_kappa(circ(s_kappa(a, -kappa, ch), s_kappa(b, -kappa, ch), 0, ch),
                              kappa, ch)
                w = first_failure([("S^k intertwines", lhs, rhs),
                                   ("S^k S^-k", s_kappa(s_kappa(a, -kappa, ch), kappa, ch), a)])
                if w:
                    return w
            return None
        return run

    def check_proj_wick(rng):
        for _ in range(8):
            F, G = random_element(rng, n), random_element(rng, n)
            w = first_failure([
                ("pi_z", proj(circ(F, G, 1, ch), "z"), proj(circ(proj(F, "z"), G, 1, ch), "z")),
                ("pi_zbar", proj(circ(F, G, 1, ch), "zbar"),
                 proj(circ(F, proj(G, "zbar"), 1, ch), "zbar"))])
            if w:
                return w
        return None

    def check_involution(rng):
        for _ in range(8):
            for a in homogeneous_parts(random_element(rng, n)):
                for b in homogeneous_parts(random_element(rng, n)):
                    s = _sign(_parity(a) * _parity(b))
                    w = first_failure([
                        ("anti-homomorphism", conjugate(circ(a, b, 1, ch)),
                         circ(conjugate(b), conjugate(a), 1, ch).scale(s)),
                        ("involutive", conjugate(conjugate(a)), a)])
                    if w:
                        return w
        return None

    def check_endo_involution(rng):
        b = ctx.bundle("holomorphic")
        r = b.rank
        for _ in range(4):
            for a in homogeneous_parts(random_element(rng, n, "endo", r)):
                for c in homogeneous_parts(random_element(rng, n, "endo", r)):
                    s = _sign(_parity(a) * _parity(c))
                    w = first_failure([
                        ("anti-homomorphism", star_involution(circ(a, c, 1, ch), b),
                         circ(star_involution(c, b), star_involution(a, b), 1, ch).scale(s)),
                        ("involutive", star_involution(star_involution(a, b), b), a)])
                    if w:
                        return w
        ident = star_involution(WeylElement.identity(n, r), (mat_identity_rows(n, r),) * 2)
        return first_failure([("H = id gives conjugate transpose",
                               ident, WeylElement.identity(n, r))])

    def check_poisson(rng):
        if ch.name != "flat" or any(ch.potential is None for _ in [0]):
            # only the flat chart has the standard real Poisson tensor
            pass
        y = WeylElement.sym_gen(n, 0) + WeylElement.sym_gen(n, 0, True)
        cases = [(y, y)] + [(random_element(rng, n, forms=(0,)),
                              random_element(rng, n, forms=(0,)))
                            for _ in range(8)]
        flat = _flat_metric_chart(n)
        for a, b in cases:
            w = first_failure([("(2/i)(P - Pbar)", poisson_fibre(a, b, flat),
                                real_poisson_oracle(a, b))])
            if w:
                return w
        return None

    def check_contraction_examples(rng):
        flat = _flat_metric_chart(n)
        y, yb = WeylElement.sym_gen(n, 0), WeylElement.sym_gen(n, 0, True)
        one = WeylElement.constant(n, 1)
        return first_failure([
            ("P(y, ybar)", contraction(y, yb, "P", flat), one),
            ("P(ybar, y)", contraction(yb, y, "P", flat), one.like({})),
            ("Delta(y ybar)", laplace_fib(mu_product(y, yb), flat), one),
            ("Wick y o ybar", circ(y, yb, 1, flat),
             mu_product(y, yb) + WeylElement.lam(n).scale(2)),
            ("Wick ybar o y", circ(yb, y, 1, flat), mu_product(y, yb)),
            ("Weyl y o ybar", circ(y, yb, 0, flat), mu_product(y, yb) + WeylElement.lam(n)),
            ("S(y ybar)", s_kappa(mu_product(y, yb), 1, flat),
             mu_product(y, yb) + WeylElement.lam(n))])

    def check_ad_direct(rng):
        flat = _flat_metric_chart(n)
        y, yb = WeylElement.sym_gen(n, 0), WeylElement.sym_gen(n, 0, True)
        yy = mu_product(y, yb)
        via_products = (circ(yy, y, 0, flat) - circ(y, yy, 0, flat)).i_over_lambda()
        # (i/lambda) lambda ((P - Pbar)(a, b) - (P - Pbar)(b, a)) with a = y ybar, b = y
        direct = (contraction(yy, y, "P", flat) - contraction(yy, y, "Pbar", flat)
                  - contraction(y, yy, "P", flat) + contraction(y, yy, "Pbar", flat)).scale(_I)
        return first_failure([("(i/lambda) ad(y ybar) y", via_products, direct),
                              ("ad(1) a", supercommutator(WeylElement.constant(n, 1), y, 0, flat),
                               y.like({}))])

    def check_rho_central(rng):
        rho = ch.ricci_form
        for kappa in KAPPAS:
            for _ in range(4):
                a = random_element(rng, n)
                for part in homogeneous_parts(a):
                    w = expect_zero(f"ad(rho) kappa={kappa}",
                                    supercommutator(rho, part, kappa, ch))
                    if w:
                        return w
        return None

    checks = [
        Check("delta-squared", "delta^2 = 0", check_delta_sq),
        Check("delta-star-squared", "(delta^*)^2 = 0", check_delta_star_sq),
        Check("hodge-decomposition", "delta delta^-1 + delta^-1 delta + sigma = id", check_hodge),
        Check("split-hodge", "split Hodge decompositions (complementary projection)",
              check_split_hodge),
        Check("split-hodge-example", "split Hodge decomposition on dzb_s (x) dz_a",
              check_split_example),
        Check("split-relations", "pi_z delta = delta_z pi_z and mirrors", check_split_relations),
        Check("laplace-delta", "[Delta_fib, delta] = 0", check_laplace_delta),
        Check("laplace-leibniz", "Delta_fib mu = mu (Delta + P + Pbar + Delta)", check_leibniz),
        Check("mu-supercommutative", "fibrewise product is super-commutative",
              check_supercommutative),
        Check("poisson-real", "fibre Poisson operator equals (2/i)(P - Pbar)", check_poisson),
        Check("contraction-examples", "single contractions and low-order products",
              check_contraction_examples),
        Check("ad-direct", "(i/lambda) ad via products equals direct contraction",
              check_ad_direct),
        Check("projection-wick", "pi_z(F o G) = pi_z(pi_z F o G) and mirror", check_proj_wick),
        Check("involution-scalar", "conjugation is a super anti-homomorphism for o_Wick",
              check_involution),
        Check("involution-endo", "metric adjoint is a super anti-homomorphism for o_Wick",
              check_endo_involution),
        Check("ricci-central", "the Ricci form is central for every o_kappa", check_rho_central),
    ]
    for kappa in KAPPAS:
        checks.append(Check(f"circ-assoc-k{kappa}", f"o_kappa associative, kappa={kappa}",
                            check_assoc(kappa)))
        checks.append(Check(f"s-kappa-intertwine-k{kappa}",
                            f"o_kappa = S^kappa(S^-kappa . o_Weyl S^-kappa .), kappa={kappa}",
                            check_intertwine(kappa)))
    return checks


def mat_identity_rows(dim, r):
    return [[Jet.const(dim, 1 if i == j else 0) for j in range(r)] for i in range(r)]


def _flat_metric_chart(n):
    from .weyl import FlatMetric
    return FlatMetric(n)


# -- geometry ----------------------------------------------------------------------------------

def suite_geometry(ctx: SuiteContext) -> list:
    ch, n = ctx.chart, ctx.dim
    R = ch.symplectic_R
    rho = ch.ricci_form
    holo = ctx.bundle("holomorphic")
    anti = ctx.bundle("antiholomorphic")
    line = ctx.line()
    cap = ctx.span_cap

    def span(rng, kind="scalar", rank=1):
        return spanning_set(rng, n, cap, kind, rank, n_random=10)

    rho_det = ch.ricci_form_from_det

    def check_laplace_R(rng):
        ref = rho if rho_det is None else rho_det
        return first_failure([("Delta_fib R", laplace_fib(R, ch), ref)])

    def check_rho(rng):
        half_i = GaussianRational(0, Fraction(1, 2))
        pairs = [("rho", rho, ch.r_can_curv.scale(half_i))]
        if rho_det is not None:
            pairs.append(("rho from det g", rho_det, ch.r_can_curv.scale(half_i)))
        return first_failure(pairs)

    def check_rcan(rng):
        return first_failure([("two expressions", ch.r_can_curv, ch.r_can_curv_from_riemann),
                              ("L_can curvature", line.curvature.with_kind("scalar"),
                               ch.r_can_curv)])

    def check_bianchi(rng):
        pairs = [("delta R", delta(R), R.like({})),
                 ("D R", connection_apply(R, ch, None, "D"), R.like({}))]
        for b in (holo, anti, line):
            RE = b.curvature
            pairs.append((f"delta R^E ({b.name})", delta(RE), RE.like({})))
            pairs.append((f"D' R^E ({b.name})", connection_apply(RE, ch, b, "Dprime"),
                          RE.like({})))
        return first_failure(pairs)

    def check_reality(rng):
        return first_failure([("conj R", conjugate(R), R), ("conj rho", conjugate(rho), rho),
                              ("conj R^Lcan", conjugate(ch.r_can_curv),
                               ch.r_can_curv.scale(-1))])

    def check_metric_symmetry(rng):
        # g_{p qbar} R^p_{m k lbar} + g_{m pbar} R^pbar_{qbar k lbar} = 0
        for m in range(n):
            for q in range(n):
                for k in range(n):
                    for l in range(n):
                        lhs = None
                        for p in range(n):
                            t1 = ch.g[p][q] * ch.curv[p][m][k][l]
                            t2 = ch.g[m][p] * ch.gamma_bar[p][l][q].derive(k)
                            t = t1 + t2
                            lhs = t if lhs is None else lhs + t
                        w = jet_witness(lhs, Jet.zero(n))
                        if w:
                            w["indices"] = [m, q, k, l]
                            return w
        return None

    def check_christoffel_sym(rng):
        for l in range(n):
            for k in range(n):
                for m in range(n):
                    w = jet_witness(ch.gamma[l][k][m], ch.gamma[l][m][k])
                    if w:
                        return w
        return None

    def check_curvature_identities(rng):
        pairs = []
        for kappa in KAPPAS:
            pairs.append((f"S^k R kappa={kappa}", s_kappa(R, kappa, ch),
                          R + rho.times_lambda(1).scale(kappa)))
        for b in (holo, line):
            pairs.append((f"S^k R^E ({b.name})", s_kappa(b.curvature, 1, ch), b.curvature))
        return first_failure(pairs)

    def check_D_squared(kappa):
        def run(rng):
            return _over(span(rng), lambda a: first_failure([
                ("D^2", D2(a, ch, None, "D"), i_over_lambda_ad(R, a, kappa, ch))]))
        return run

    def check_DE_squared(kappa):
        def run(rng):
            RE = holo.curvature
            return _over(span(rng, "section", holo.rank), lambda a: first_failure([
                ("(D^E)^2", D2(a, ch, holo, "DE"),
                 i_over_lambda_ad(R, a, kappa, ch) + circ(RE, a, kappa, ch))]))
        return run

    def check_Dprime_squared(kappa):
        def run(rng):
            X = R.as_endo(holo.rank) - holo.curvature.scale(_I).times_lambda(1)
            return _over(span(rng, "endo", holo.rank), lambda a: first_failure([
                ("(D')^2", D2(a, ch, holo, "Dprime"), i_over_lambda_ad(X, a, kappa, ch))]))
        return run

    def check_laplace_D(rng):
        def fn(a, b=None, which="D"):
            lhs = laplace_fib(connection_apply(a, ch, b, which), ch)
            rhs = connection_apply(laplace_fib(a, ch), ch, b, which)
            return first_failure([(f"[Delta, {which}]", lhs, rhs)])
        return (_over(span(rng), fn)
                or _over(span(rng, "section", holo.rank), lambda a: fn(a, holo, "DE"))
                or _over(span(rng, "endo", holo.rank), lambda a: fn(a, holo, "Dprime")))

    def check_delta_D(rng):
        def fn(a, b=None, which="D"):
            lhs = (delta(connection_apply(a, ch, b, which))
                   + connection_apply(delta(a), ch, b, which))
            return expect_zero(f"delta {which} + {which} delta", lhs)
        return (_over(span(rng), fn)
                or _over(span(rng, "section", holo.rank), lambda a: fn(a, holo, "DE"))
                or _over(span(rng, "endo", holo.rank), lambda a: fn(a, holo, "Dprime")))

    def check_D_split(rng):
        def fn(a, b=None, which="D"):
            full = connection_apply(a, ch, b, which)
            z = connection_apply(a, ch, b, which, "z")
            zb = connection_apply(a, ch, b, which, "zbar")
            return first_failure([
                ("D = D_z + D_zbar", full, z + zb),
                ("pi_z D", proj(full, "z"), connection_apply(proj(a, "z"), ch, b, which, "z")),
                ("pi_zbar D", proj(full, "zbar"),
                 connection_apply(proj(a, "zbar"), ch, b, which, "zbar"))])
        return (_over(span(rng), fn)
                or _over(span(rng, "section", holo.rank), lambda a: fn(a, holo, "DE"))
                or _over(span(rng, "endo", holo.rank), lambda a: fn(a, holo, "Dprime")))

    def check_D_derivation(rng):
        for kappa in KAPPAS:
            for _ in range(4):
                for a in homogeneous_parts(random_element(rng, n)):
                    for b in homogeneous_parts(random_element(rng, n)):
                        lhs = connection_apply(circ(a, b, kappa, ch), ch, None, "D")
                        rhs = (circ(connection_apply(a, ch, None, "D"), b, kappa, ch)
                               + circ(a, connection_apply(b, ch, None, "D"), kappa, ch)
                               .scale(_sign(_parity(a))))
                        w = first_failure([(f"D(a o b) kappa={kappa}", lhs, rhs)])
                        if w:
                            return w
        return None

    def check_bundle_compat(rng):
        for b in (holo, anti, line):
            for v, M in enumerate(b.compatibility_residual()):
                for row in M:
                    for x in row:
                        w = jet_witness(x, Jet.zero(n))
                        if w:
                            w["bundle"] = b.name
                            w["direction"] = v
                            return w
            if not b.is_type_11():
                return {"bundle": b.name, "reason": "R^E has a (2,0) or (0,2) part"}
            # A has type (1,0) for holomorphic frames, (0,1) for anti-holomorphic ones
            off = range(n, 2 * n) if b.kind == "holomorphic" else range(n)
            for v in off:
                for row in b.A_dirs[v]:
                    for x in row:
                        if not x.is_zero():
                            return {"bundle": b.name, "reason": "connection form of wrong type"}
        return None

    checks = [
        Check("laplace-R", "Delta_fib R = rho", check_laplace_R),
        Check("ricci-vs-lcan", "rho = (i/2) R^Lcan", check_rho),
        Check("lcan-curvature", "both expressions of R^Lcan agree", check_rcan),
        Check("bianchi", "delta R = 0 = D R, delta R^E = 0 = D' R^E", check_bianchi),
        Check("reality", "R and rho real, R^Lcan imaginary", check_reality),
        Check("metric-antisymmetry", "g R + g Rbar = 0 (metric connection)",
              check_metric_symmetry),
        Check("christoffel-symmetry", "Gamma^l_km = Gamma^l_mk", check_christoffel_sym),
        Check("s-kappa-curvature", "S^kappa R = R + kappa lambda rho, S^kappa R^E = R^E",
              check_curvature_identities),
        Check("laplace-D", "[Delta_fib, D] = [Delta_fib, D^E] = [Delta_fib, D'] = 0",
              check_laplace_D),
        Check("delta-D", "delta super-commutes with D, D^E, D'", check_delta_D),
        Check("D-split", "D = D_z + D_zbar and pi_z D = D_z pi_z", check_D_split),
        Check("D-derivation", "D is a derivation of o_kappa", check_D_derivation),
        Check("bundle-compatibility", "dH = i(A^*H - HA), R^E of type (1,1)",
              check_bundle_compat),
    ]
    for kappa in KAPPAS:
        checks.append(Check(f"D-squared-k{kappa}", f"D^2 = (i/lambda) ad(R), kappa={kappa}",
                            check_D_squared(kappa)))
        checks.append(Check(f"DE-squared-k{kappa}",
                            f"(D^E)^2 = (i/lambda) ad(R) + R^E, kappa={kappa}",
                            check_DE_squared(kappa)))
        checks.append(Check(f"Dprime-squared-k{kappa}",
                            f"(D')^2 = (i/lambda) ad(R - i lambda R^E), kappa={kappa}",
                            check_Dprime_squared(kappa)))
    return checks


def D2(a, ch, b, which):
    return connection_apply(connection_apply(a, ch, b, which), ch, b, which)


# -- fedosov ----------------------------------------------------------------------------------

def _residual_checks(ctx, kappa, holo):
    ch = ctx.chart

    def run(rng):
        sol = ctx.sol(kappa, holo)
        pairs = [("residual r", recursion_residual(sol.r, ch, kappa, sol.omega),
                  sol.r.like({})),
                 ("delta^-1 r", delta_inv(sol.r), sol.r.like({})),
                 ("sigma r", sigma(sol.r), sol.r.like({})),
                 ("residual r'", recursion_residual(sol.r_prime, ch, kappa, sol.omega, holo),
                  sol.r_prime.like({})),
                 ("delta^-1 r'", delta_inv(sol.r_prime), sol.r_prime.like({})),
                 ("r' - r at lambda^0", (sol.r_prime - sol.r.as_endo(holo.rank)).lambda_part(0),
                  sol.r_prime.like({}))]
        w = first_failure(pairs)
        if w:
            return w
        low = min((sol.r.key_degree(k) for k in sol.r.terms), default=None)
        if low is not None and low < 3:
            return {"reason": "r has a term of total degree below 3", "degree": low}
        return None
    return run


def suite_fedosov(ctx: SuiteContext) -> list:
    ch, n, N = ctx.chart, ctx.dim, ctx.N
    holo = ctx.bundle("holomorphic")
    line = ctx.line()
    r = holo.rank
    sols = {k: ctx.sol(k, holo) for k in KAPPAS}
    for k in KAPPAS:
        ctx.sol(k, line)
    cap = ctx.span_cap

    def rf(rng, **kw):
        kw.setdefault("density", 0.4)
        return random_jet(rng, n, **kw)

    def d_squared(kappa):
        def run(rng):
            sol = sols[kappa]
            return (_over(spanning_set(rng, n, cap), lambda a: expect_zero(
                        "D D", sol.derivative(sol.derivative(a))))
                    or _over(spanning_set(rng, n, cap, "endo", r), lambda a: expect_zero(
                        "D' D'", sol.derivative(sol.derivative(a))))
                    or _over(spanning_set(rng, n, cap, "section", r), lambda a: expect_zero(
                        "D^E D^E", sol.derivative(sol.derivative(a)))))
        return run

    def module_derivation(kappa):
        def run(rng):
            sol = sols[kappa]
            for _ in range(4):
                for psi in homogeneous_parts(random_element(rng, n, "section", r)):
                    for b in homogeneous_parts(random_element(rng, n)):
                        a = random_element(rng, n, "endo", r)
                        for a in homogeneous_parts(a):
                            s_psi, s_a = _sign(_parity(psi)), _sign(_parity(a))
                            w = first_failure([
                                ("D^E(Psi o b)", sol.derivative(circ(psi, b, kappa, ch)),
                                 circ(sol.derivative(psi), b, kappa, ch)
                                 + circ(psi, sol.derivative(b), kappa, ch).scale(s_psi)),
                                ("D^E(a o Psi)", sol.derivative(circ(a, psi, kappa, ch)),
                                 circ(sol.derivative(a), psi, kappa, ch)
                                 + circ(a, sol.derivative(psi), kappa, ch).scale(s_a))])
                            if w:
                                return w
            return None
        return run

    def taylor_checks(kappa):
        def run(rng):
            sol = sols[kappa]
            data = [("tau", rf(rng)), ("tau", Jet.const(n, 1)),
                    ("tau_prime", random_matrix(rng, n, r, degree=2, density=0.4)),
                    ("tau_E", random_vector(rng, n, r, degree=2, density=0.4))]
            for which, x in data:
                t = sol.taylor(x, which)
                w = first_failure([(f"sigma {which}", sigma(t), as_symbol(x, n, t.kind, r)),
                                   (f"D {which}", sol.derivative(t), t.like({}))])
                if w:
                    return w
            return None
        return run

    def assoc(kappa):
        def run(rng):
            sol = sols[kappa]
            for i in range(4):
                f, g, h = rf(rng), rf(rng), rf(rng)
                w = first_failure([(f"triple {i}", sol.star(sol.star(f, g), h),
                                    sol.star(f, sol.star(g, h)))])
                if w:
                    return w
            one = Jet.const(n, 1)
            f = rf(rng)
            return first_failure([("1 * f", sol.star(one, f), jet_elem(f)),
                                  ("f * 1", sol.star(f, one), jet_elem(f)),
                                  ("lambda^0", classical(sol.star(f, f)), jet_elem(f * f))])
        return run

    def assoc_prime(kappa):
        def run(rng):
            sol = sols[kappa]
            for i in range(2):
                A, B, C = (random_matrix(rng, n, r, degree=2, density=0.3) for _ in range(3))
                w = first_failure([(f"triple {i}", sol.star_prime(sol.star_prime(A, B), C),
                                    sol.star_prime(A, sol.star_prime(B, C)))])
                if w:
                    return w
            return None
        return run

    def module_laws(kappa, bundle):
        def run(rng):
            sol = ctx.sol(kappa, bundle)
            k = bundle.rank
            for i in range(2):
                A, B = (random_matrix(rng, n, k, degree=2, density=0.3) for _ in range(2))
                s = random_vector(rng, n, k, degree=2, density=0.4)
                f, g = rf(rng, degree=2), rf(rng, degree=2)
                w = first_failure([
                    ("(A *' B) .' s", sol.left_mult(sol.star_prime(A, B), s),
                     sol.left_mult(A, sol.left_mult(B, s))),
                    ("(s . f) . g", sol.right_mult(sol.right_mult(s, f), g),
                     sol.right_mult(s, sol.star(f, g))),
                    ("(A .' s) . f", sol.right_mult(sol.left_mult(A, s), f),
                     sol.left_mult(A, sol.right_mult(s, f))),
                    ("s . 1", sol.right_mult(s, Jet.const(n, 1)), column_elem(s, n)),
                    ("id .' s", sol.left_mult(mat_identity_rows(n, k), s), column_elem(s, n)),
                    ("lambda^0 s . f", classical(sol.right_mult(s, f)),
                     column_elem([x * f for x in s], n)),
                    ("lambda^0 A .' s", classical(sol.left_mult(A, s)),
                     column_elem([row[0] for row in mat_mul(A, [[x] for x in s])], n))])
                if w:
                    w["pass"] = i
                    return w
            return None
        return run

    def commutator(kappa):
        def run(rng):
            sol = sols[kappa]
            for i in range(5):
                f, g = rf(rng), rf(rng)
                c = (sol.star(f, g) - sol.star(g, f)).lambda_part(1)
                pb = poisson_fibre(taylor1(f, n), taylor1(g, n), ch).scale(_I).times_lambda(1)
                w = first_failure([(f"pair {i}", c, pb)])
                if w:
                    return w
            return None
        return run

    def flat_oracle(kappa):
        def run(rng):
            # the closed form is the Omega = 0 product
            sol = FedosovSolution(ch, kappa, None, ctx.policy)
            for i in range(5):
                f, g = rf(rng), rf(rng)
                exp = oracle_flat_star(f, g, kappa, N)
                w = first_failure([(f"pair {i}", sol.star(f, g),
                                    WeylElement(n, {(p, 0, 0): (j,) for p, j in exp.items()}))])
                if w:
                    return w
            return None
        return run

    checks = []
    for kappa in KAPPAS:
        checks += [
            Check(f"recursion-k{kappa}", f"r, r' solve their recursions, kappa={kappa}",
                  _residual_checks(ctx, kappa, holo)),
            Check(f"recursion-lcan-k{kappa}", f"r' for L_can solves its recursion, kappa={kappa}",
                  _residual_checks(ctx, kappa, line)),
            Check(f"fedosov-square-k{kappa}", f"Fedosov derivations square to zero, kappa={kappa}",
                  d_squared(kappa)),
            Check(f"module-derivation-k{kappa}",
                  f"D^E is a module derivation along D' and D, kappa={kappa}",
                  module_derivation(kappa)),
            Check(f"taylor-k{kappa}", f"sigma tau = id and D tau = 0, kappa={kappa}",
                  taylor_checks(kappa)),
            Check(f"star-assoc-k{kappa}", f"star product associative with unit, kappa={kappa}",
                  assoc(kappa)),
            Check(f"star-prime-assoc-k{kappa}", f"endomorphism product associative, kappa={kappa}",
                  assoc_prime(kappa)),
            Check(f"bimodule-k{kappa}", f"bimodule laws, rank-2 bundle, kappa={kappa}",
                  module_laws(kappa, holo)),
            Check(f"bimodule-lcan-k{kappa}", f"bimodule laws, L_can, kappa={kappa}",
                  module_laws(kappa, line)),
            Check(f"commutator-k{kappa}", f"f*g - g*f = i lambda {{f,g}} + O(lambda^2), "
                  f"kappa={kappa}", commutator(kappa)),
        ]
        if ch.name == "flat":
            checks.append(Check(f"flat-oracle-k{kappa}",
                                f"star product equals the closed form on flat space, "
                                f"kappa={kappa}", flat_oracle(kappa)))
    return checks


# -- wick ------------------------------------------------------------------------------------

def transition_matrix(dim: int, rank: int, kind: str):
    """Unipotent (anti-)holomorphic frame change ``phi`` and its inverse."""
    v = Jet.variable(dim, 0, kind != "holomorphic")
    one, zero = Jet.const(dim, 1), Jet.zero(dim)
    phi = [[one if i == j else zero for j in range(rank)] for i in range(rank)]
    inv = [[one if i == j else zero for j in range(rank)] for i in range(rank)]
    if rank >= 2:
        phi[0][1] = v + v * v
        inv[0][1] = (v + v * v).scale(-1)
    else:
        # rank one: an invertible jet, truncated so that the inverse is exact enough
        phi[0][0] = one + v
        inv[0][0] = None
    return phi, inv


def frame_changed(bundle: BundleChart, phi, order) -> BundleChart:
    """The same bundle seen in the frame ``e_beta = e_alpha phi``."""
    Hb = mat_mul(mat_mul(mat_conj_transpose(phi), bundle.H), phi)
    Hb = [[x.truncate(order) for x in row] for row in Hb]
    return bundle_from_metric(Hb, bundle.kind, bundle.name + "-beta", transition=phi)


def _vec(M):
    return [row[0] for row in M]


def _apply(M, v):
    return _vec(mat_mul(M, [[x] for x in v]))


def apply_series(M, a: WeylElement) -> WeylElement:
    """Pointwise ``M a`` for a form-free section-valued lambda-series."""
    terms = {}
    for k, v in a.terms.items():
        terms[k] = tuple(_apply(M, list(v)))
    return a.like(terms)


def suite_wick(ctx: SuiteContext) -> list:
    ch, n, N = ctx.chart, ctx.dim, ctx.N
    holo = ctx.bundle("holomorphic")
    anti = ctx.bundle("antiholomorphic")
    r = holo.rank
    sh = ctx.sol(1, holo)
    sa = ctx.sol(1, anti)
    order = ctx.policy.jet_order + 2

    def rf(rng, **kw):
        kw.setdefault("density", 0.4)
        return random_jet(rng, n, **kw)

    def check_type_projections(rng):
        pairs = []
        for sol in (sh, sa):
            for side in ("z", "zbar"):
                for label, x in (("r", sol.r), ("r'", sol.r_prime), ("r^E", sol.r_E)):
                    pairs.append((f"pi_{side} {label} ({sol.bundle.kind})", proj(x, side),
                                  x.like({})))
        return first_failure(pairs)

    def projected_path(rng):
        cases = [("tau", rf(rng)), ("tau_prime", random_matrix(rng, n, r, degree=2, density=0.4)),
                 ("tau_E", random_vector(rng, n, r, degree=2, density=0.4))]
        for sol in (sh, sa):
            for which, x in cases:
                t = sol.taylor(x, which)
                for side in ("z", "zbar"):
                    w = first_failure([(f"{which} {side} ({sol.bundle.kind})",
                                        sol.projected_taylor(x, which, side), proj(t, side))])
                    if w:
                        return w
        return None

    def check_projected_taylor(rng):
        pairs = []
        f = rf(rng, antiholomorphic=True)
        g = rf(rng, holomorphic=True)
        pairs.append(("i", proj(sh.taylor(f), "z"), jet_elem(f)))
        pairs.append(("ii", proj(sh.taylor(g), "zbar"), jet_elem(g)))
        for sol in (sh, sa):
            b = sol.bundle
            A = flat_endo(rng, b, "10")
            B = flat_endo(rng, b, "01")
            s = flat_section(rng, b, "10")
            t = flat_section(rng, b, "01")
            pairs += [
                (f"iii ({b.kind})", proj(sol.taylor(A, "tau_prime"), "z"), matrix_elem(A, n)),
                (f"iv ({b.kind})", proj(sol.taylor(B, "tau_prime"), "zbar"), matrix_elem(B, n)),
                (f"v ({b.kind})", proj(sol.taylor(s, "tau_E"), "z"), column_elem(s, n)),
                (f"vi ({b.kind})", proj(sol.taylor(t, "tau_E"), "zbar"), column_elem(t, n))]
        return first_failure(pairs)

    def separation(rng):
        pairs = []
        for i in range(3):
            f, f2 = rf(rng), rf(rng)
            g = rf(rng, holomorphic=True)
            gb = rf(rng, antiholomorphic=True)
            pairs += [(f"f * g, g holomorphic [{i}]", sh.star(f, g), jet_elem(f * g)),
                      (f"g * f, g anti-holomorphic [{i}]", sh.star(gb, f2), jet_elem(gb * f2))]
        for sol in (sh, sa):
            b = sol.bundle
            A = random_matrix(rng, n, r, degree=2, density=0.4)
            s0 = random_vector(rng, n, r, degree=2, density=0.4)
            f = rf(rng, degree=2)
            g = rf(rng, degree=2, holomorphic=True)
            B10 = flat_endo(rng, b, "10")
            B01 = flat_endo(rng, b, "01")
            t01 = flat_section(rng, b, "01")
            s10 = flat_section(rng, b, "10")
            k = b.kind
            pairs += [
                (f"s . g ({k})", sol.right_mult(s0, g), column_elem([x * g for x in s0], n)),
                (f"B .' s ({k})", sol.left_mult(B10, s0), column_elem(_apply(B10, s0), n)),
                (f"B *' A ({k})", sol.star_prime(B10, A), matrix_elem(mat_mul(B10, A), n)),
                (f"A .' t ({k})", sol.left_mult(A, t01), column_elem(_apply(A, t01), n)),
                (f"s . f ({k})", sol.right_mult(s10, f), column_elem([x * f for x in s10], n)),
                (f"A *' B ({k})", sol.star_prime(A, B01), matrix_elem(mat_mul(A, B01), n))]
        return first_failure(pairs)

    def mixed_control(rng):
        # f = z, g = z zbar: the lambda^1 coefficient is 2 g^{k lbar} d_k f dbar_l g
        f = Jet.variable(n, 0)
        g = Jet.variable(n, 0) * Jet.variable(n, 0, True)
        got = sh.star(f, g)
        lam1 = None
        for k in range(n):
            for l in range(n):
                t = ch.ginv[k][l] * f.derive(k) * g.derive(l, True)
                lam1 = t if lam1 is None else lam1 + t
        expected_lam1 = jet_elem(lam1.scale(2)).times_lambda(1)
        w = first_failure([("lambda^1 term", got.lambda_part(1), expected_lam1)])
        if w:
            return w
        if got.lambda_part(1).is_zero():
            return {"reason": "mixed witness unexpectedly has zero lambda^1 term"}
        return None

    def check_local_right(rng):
        for _ in range(3):
            s = random_vector(rng, n, r, degree=2, density=0.4)
            f = rf(rng, degree=2)
            got = sa.right_mult(s, f)
            for i in range(r):
                w = first_failure([(f"component {i}", got.entry(i), sa.star(s[i], f))])
                if w:
                    return w
        return None

    def check_local_left(rng):
        k = r
        for _ in range(2):
            A = random_matrix(rng, n, k, degree=2, density=0.4)
            s = random_vector(rng, n, k, degree=2, density=0.4)
            total = None
            for i in range(k):
                se = [[s[a] if b == i else Jet.zero(n) for b in range(k)] for a in range(k)]
                prod = sh.star_prime(A, se)
                col = column_series(prod, i, k)
                total = col if total is None else total + col
            w = first_failure([("(1/k) sum (A *' s e^i) e_i",
                                total.scale(Fraction(1, k)), sh.left_mult(A, s))])
            if w:
                return w
        return None

    def frame_change(rng):
        pairs = []
        for sol, b in ((sh, holo), (sa, anti)):
            phi, inv = transition_matrix(n, b.rank, b.kind)
            bb = frame_changed(b, phi, order)
            sb = FedosovSolution(ch, 1, ctx.omega, ctx.policy, bb)
            s_beta = random_vector(rng, n, b.rank, degree=2, density=0.4)
            s_alpha = _apply(phi, s_beta)
            f = rf(rng, degree=2)
            A_beta = random_matrix(rng, n, b.rank, degree=2, density=0.4)
            A_alpha = mat_mul(mat_mul(phi, A_beta), inv)
            pairs += [
                (f"s . f ({b.kind})", sol.right_mult(s_alpha, f),
                 apply_series(phi, sb.right_mult(s_beta, f))),
                (f"A .' s ({b.kind})", sol.left_mult(A_alpha, s_alpha),
                 apply_series(phi, sb.left_mult(A_beta, s_beta)))]
            phi_e = matrix_elem(phi, n)
            ident = WeylElement.identity(n, b.rank)
            if b.kind == "holomorphic":
                pairs.append(("phi *' phi^-1", sol.star_prime(phi, inv), ident))
                pairs.append(("phi^-1 *' phi", sol.star_prime(inv, phi), ident))
            else:
                # anti-holomorphic entries act pointwise from the left on s_beta
                comps = [None] * b.rank
                for a in range(b.rank):
                    for c in range(b.rank):
                        t = sol.star(phi[a][c], s_beta[c])
                        comps[a] = t if comps[a] is None else comps[a] + t
                pairs.append(("phi * s_beta", stack_series(comps, n),
                              column_elem(s_alpha, n)))
            del phi_e
        return first_failure(pairs)

    def bad_omega(rng):
        # negative control: a closed (2,0) Omega must be rejected for kappa = 1
        from .errors import NonTypeOneOne
        from .geometry import two_form
        om = two_form(n, {(0, 1): Jet.const(n, 1)}, lam=1)
        try:
            FedosovSolution(ch, 1, om, ctx.policy)
        except NonTypeOneOne:
            return None
        return {"reason": "(2,0) Omega accepted for kappa = 1"}

    checks = [
        Check("r-projections", "pi_z and pi_zbar of r, r', r^E vanish", check_type_projections),
        Check("projected-recursions", "projected Taylor recursions match projections of tau",
              projected_path),
        Check("projected-taylor", "projections of tau are classical for flat data",
              check_projected_taylor),
        Check("separation", "Wick type: flat data multiply pointwise", separation),
        Check("separation-mixed-control", "mixed witness: lambda^1 = 2 g^{k lbar} df dbar g",
              mixed_control),
        Check("local-right-module", "anti-holomorphic frame: s . f = e (s_alpha * f)",
              check_local_right),
        Check("local-left-module", "holomorphic frame: A .' s from star-prime", check_local_left),
        Check("frame-change", "module products transform with the frame change", frame_change),
    ]
    if n >= 2:
        checks.append(Check("non-11-omega", "a (2,0) Omega is rejected for Wick ordering",
                            bad_omega))
    return checks


def column_series(a: WeylElement, i: int, k: int) -> WeylElement:
    """Column ``i`` of an endomorphism-valued series as a section series."""
    terms = {key: tuple(v[row * k + i] for row in range(k)) for key, v in a.terms.items()}
    return WeylElement(a.dim, terms, "section", k)


def stack_series(comps, dim) -> WeylElement:
    """Section series from scalar series per component."""
    k = len(comps)
    keys = set()
    for c in comps:
        keys |= set(c.terms)
    zero = Jet.zero(dim)
    terms = {key: tuple(c.terms.get(key, (zero,))[0] for c in comps) for key in keys}
    return WeylElement(dim, terms, "section", k)


# -- hermitian --------------------------------------------------------------------------------

def classical_h(H, s, s2):
    """``h(s, s') = s^dagger H s'`` as a jet."""
    Hs2 = _apply(H, s2)
    out = None
    for a, b in zip(s, Hs2):
        t = a.conj() * b
        out = t if out is None else out + t
    return out


def adjoint(H, Hinv, A):
    return mat_mul(mat_mul(Hinv, mat_conj_transpose(A)), H)


def suite_hermitian(ctx: SuiteContext) -> list:
    ch, n = ctx.chart, ctx.dim
    holo = ctx.bundle("holomorphic")
    anti = ctx.bundle("antiholomorphic")
    r = holo.rank
    sh = ctx.sol(1, holo)
    sa = ctx.sol(1, anti)
    order = ctx.policy.jet_order + 2

    def rf(rng, **kw):
        kw.setdefault("density", 0.4)
        return random_jet(rng, n, **kw)

    def rv(rng, k=r):
        return random_vector(rng, n, k, degree=2, density=0.4)

    def rm(rng, k=r):
        return random_matrix(rng, n, k, degree=2, density=0.4)

    def check_hermitian_recursion(rng):
        pairs = []
        for sol in (sh, sa):
            b = sol.bundle
            k = b.kind
            pairs += [(f"conj r ({k})", conjugate(sol.r), sol.r),
                      (f"r'* ({k})", star_involution(sol.r_prime, b), sol.r_prime),
                      (f"r^E* ({k})", star_involution(sol.r_E, b), sol.r_E.scale(-1))]
            f, g = rf(rng), rf(rng)
            A, B = rm(rng), rm(rng)
            As, Bs = adjoint(b.H, b.Hinv, A), adjoint(b.H, b.Hinv, B)
            pairs += [
                (f"conj tau(f) ({k})", conjugate(sol.taylor(f)), sol.taylor(f.conj())),
                (f"tau'(A)* ({k})", star_involution(sol.taylor(A, "tau_prime"), b),
                 sol.taylor(As, "tau_prime")),
                (f"conj(f * g) ({k})", conjugate(sol.star(f, g)), sol.star(g.conj(), f.conj())),
                (f"(A *' B)* ({k})", star_involution(sol.star_prime(A, B), b),
                 sol.star_prime(Bs, As))]
            for _ in range(3):
                for a in homogeneous_parts(random_element(rng, n, "endo", r)):
                    pairs.append((f"D' a* ({k})", star_involution(sol.derivative(a), b),
                                  sol.derivative(star_involution(a, b))))
                for a in homogeneous_parts(random_element(rng, n)):
                    pairs.append((f"D conj a ({k})", conjugate(sol.derivative(a)),
                                  sol.derivative(conjugate(a))))
        return first_failure(pairs)

    def check_pairing(rng):
        for sol in (sh, sa):
            b = sol.bundle
            for _ in range(4):
                for psi in homogeneous_parts(random_element(rng, n, "section", r)):
                    for psi2 in homogeneous_parts(random_element(rng, n, "section", r)):
                        a = random_element(rng, n, "endo", r)
                        c = random_element(rng, n)
                        for ah in homogeneous_parts(a):
                            for ch_ in homogeneous_parts(c):
                                pp, p2, pa = _parity(psi), _parity(psi2), _parity(ah)
                                w = first_failure([
                                    ("H(a o Psi, Psi')",
                                     sol.pairing_H(circ(ah, psi, 1, ch), psi2),
                                     sol.pairing_H(psi, circ(star_involution(ah, b), psi2, 1, ch))
                                     .scale(_sign(pa * pp))),
                                    ("H(Psi, Psi' o b)",
                                     sol.pairing_H(psi, circ(psi2, ch_, 1, ch)),
                                     circ(sol.pairing_H(psi, psi2), ch_, 1, ch)),
                                    ("H conjugate symmetry", sol.pairing_H(psi, psi2),
                                     conjugate(sol.pairing_H(psi2, psi)).scale(_sign(pp * p2)))])
                                if w:
                                    w["bundle"] = b.kind
                                    return w
        return None

    def compat(rng):
        for sol in (sh, sa):
            for _ in range(4):
                for psi in homogeneous_parts(random_element(rng, n, "section", r)):
                    for psi2 in homogeneous_parts(random_element(rng, n, "section", r)):
                        lhs = sol.derivative(sol.pairing_H(psi, psi2))
                        rhs = (sol.pairing_H(sol.derivative(psi), psi2)
                               + sol.pairing_H(psi, sol.derivative(psi2)).scale(
                                   _sign(_parity(psi))))
                        w = first_failure([(f"D H ({sol.bundle.kind})", lhs, rhs)])
                        if w:
                            return w
        return None

    def check_deformed_metric(rng):
        for sol in (sh, sa):
            b = sol.bundle
            k = b.kind
            for _ in range(2):
                s, s2 = rv(rng), rv(rng)
                f = rf(rng, degree=2)
                A = rm(rng)
                As = adjoint(b.H, b.Hinv, A)
                hss = sol.deformed_metric(s, s)
                w = first_failure([
                    (f"conjugate symmetry ({k})", sol.deformed_metric(s, s2),
                     conjugate(sol.deformed_metric(s2, s))),
                    (f"h(s, s' . f) ({k})", sol.deformed_metric(s, sol.right_mult(s2, f)),
                     sol.star(sol.deformed_metric(s, s2), f)),
                    (f"h(A .' s, s') ({k})", sol.deformed_metric(sol.left_mult(A, s), s2),
                     sol.deformed_metric(s, sol.left_mult(As, s2))),
                    (f"lambda^0 ({k})", classical(hss), jet_elem(classical_h(b.H, s, s)))])
                if w:
                    return w
                v = classical_h(b.H, s, s).value()
                if v.im != 0 or v.re < 0:
                    return {"reason": "h(s, s) at the basepoint is not nonnegative",
                            "value": str(v)}
        return None

    def check_metric_holomorphic(rng):
        pairs = []
        for _ in range(3):
            s = rv(rng)
            t = random_vector(rng, n, r, degree=2, density=0.4, holomorphic=True)
            pairs += [("s' holomorphic", sh.deformed_metric(s, t),
                       jet_elem(classical_h(holo.H, s, t))),
                      ("s holomorphic", sh.deformed_metric(t, s),
                       jet_elem(classical_h(holo.H, t, s)))]
        return first_failure(pairs)

    def check_local_metric_anti(rng):
        k = anti.rank
        basis = [[Jet.const(n, 1 if i == j else 0) for i in range(k)] for j in range(k)]
        hij = [[sa.deformed_metric(basis[i], basis[j]) for j in range(k)] for i in range(k)]
        for _ in range(2):
            s, s2 = rv(rng), rv(rng)
            total = None
            for i in range(k):
                for j in range(k):
                    t = sa.star(sa.star(s[i].conj(), hij[i][j]), s2[j])
                    total = t if total is None else total + t
            w = first_failure([("sum conj(s^i) * h_ij * s'^j", total,
                                sa.deformed_metric(s, s2))])
            if w:
                return w
        return None

    def check_local_metric_holo(rng):
        k = holo.rank
        zero = Jet.zero(n)
        for _ in range(2):
            s, s2 = rv(rng), rv(rng)
            total = None
            for i in range(k):
                se = [[s[a] if c == i else zero for c in range(k)] for a in range(k)]
                ses = adjoint(holo.H, holo.Hinv, se)
                for j in range(k):
                    se2 = [[s2[a] if c == j else zero for c in range(k)] for a in range(k)]
                    col = column_series(sh.star_prime(ses, se2), j, k)
                    t = component(apply_series(holo.H, col), i)
                    total = t if total is None else total + t
            w = first_failure([("(1/k^2) sum h(e_i, (s e^i)* *' (s' e^j) e_j)",
                                total.scale(Fraction(1, k * k)), sh.deformed_metric(s, s2))])
            if w:
                return w
        return None

    def frame_invariance(rng):
        pairs = []
        for sol, b in ((sh, holo), (sa, anti)):
            phi, _ = transition_matrix(n, b.rank, b.kind)
            sb = FedosovSolution(ch, 1, ctx.omega, ctx.policy, frame_changed(b, phi, order))
            s, s2 = rv(rng), rv(rng)
            pairs.append((f"h in two frames ({b.kind})",
                          sol.deformed_metric(_apply(phi, s), _apply(phi, s2)),
                          sb.deformed_metric(s, s2)))
        return first_failure(pairs)

    return [
        Check("hermitian-recursion", "r, r', r^E, tau and the products are Hermitian",
              check_hermitian_recursion),
        Check("pairing-properties", "H is sesquilinear, o_Wick-balanced and conjugate symmetric",
              check_pairing),
        Check("pairing-compatibility", "D H(Psi, Psi') = H(D^E Psi, Psi') +- H(Psi, D^E Psi')",
              compat),
        Check("deformed-metric", "h conjugate symmetric, module compatible, classical at lambda^0",
              check_deformed_metric),
        Check("deformed-metric-holomorphic", "h(s, s') = h_classical for holomorphic s or s'",
              check_metric_holomorphic),
        Check("local-metric-anti", "anti-holomorphic frame: h from star products",
              check_local_metric_anti),
        Check("local-metric-holo", "holomorphic frame: h from star-prime products",
              check_local_metric_holo),
        Check("metric-frame-change", "deformed metric is frame independent", frame_invariance),
    ]


# -- morita -----------------------------------------------------------------------------------

def suite_morita(ctx: SuiteContext) -> list:
    ch, n = ctx.chart, ctx.dim
    mb = ctx.morita()
    line = mb.line
    wick, anti = mb.wick, mb.anti
    R, rho = ch.symplectic_R, ch.ricci_form
    cap = ctx.span_cap

    def rf(rng, **kw):
        kw.setdefault("density", 0.4)
        kw.setdefault("degree", 2)
        return random_jet(rng, n, **kw)

    def rpsi(rng):
        return random_element(rng, n, "section", 1)

    def square(rng):
        return _over(spanning_set(rng, n, cap, "section", 1),
                     lambda p: expect_zero("D^L D^L", mb.derivative(mb.derivative(p))))

    def bimodule(rng):
        for _ in range(4):
            a, b, c = (random_element(rng, n) for _ in range(3))
            psi = rpsi(rng)
            w = first_failure([
                ("(a o_Wick b) <> Psi", mb.diamond(circ(a, b, 1, ch), psi),
                 mb.diamond(a, mb.diamond(b, psi))),
                ("Psi <>bar (b o_antiWick c)", mb.diamond_bar(psi, circ(b, c, -1, ch)),
                 mb.diamond_bar(mb.diamond_bar(psi, b), c)),
                ("(a <> Psi) <>bar b", mb.diamond_bar(mb.diamond(a, psi), b),
                 mb.diamond(a, mb.diamond_bar(psi, b)))])
            if w:
                return w
        return None

    def derivation(rng):
        for _ in range(4):
            for a in homogeneous_parts(random_element(rng, n)):
                for psi in homogeneous_parts(rpsi(rng)):
                    pa, pp = _parity(a), _parity(psi)
                    w = first_failure([
                        ("D^L(a <> Psi)", mb.derivative(mb.diamond(a, psi)),
                         mb.diamond(wick.derivative(a), psi)
                         + mb.diamond(a, mb.derivative(psi)).scale(_sign(pa))),
                        ("D^L(Psi <>bar b)", mb.derivative(mb.diamond_bar(psi, a)),
                         mb.diamond_bar(mb.derivative(psi), a)
                         + mb.diamond_bar(psi, anti.derivative(a)).scale(_sign(pp)))])
                    if w:
                        return w
        return None

    def curvature(rng):
        for _ in range(4):
            psi = rpsi(rng)
            lr = mu_product(rho, psi).times_lambda(1)
            dl2 = connection_apply(connection_apply(psi, ch, line, "DE"), ch, line, "DE")
            w = first_failure([
                ("R o_Weyl Psi", circ(R, psi, 0, ch), mb.diamond(R, psi) + lr),
                ("Psi o_Weyl R", circ(psi, R, 0, ch), mb.diamond_bar(psi, R) - lr),
                ("(D^L)^2", dl2,
                 (mb.diamond(R, psi) - mb.diamond_bar(psi, R)).i_over_lambda())])
            if w:
                return w
        return None

    def taylor(rng):
        for s in (rf(rng), Jet.const(n, 1)):
            t = mb.taylor(s)
            w = first_failure([("sigma tau^L", sigma(t), jet_elem(s).with_kind("section")),
                               ("D^L tau^L", mb.derivative(t), t.like({}))])
            if w:
                return w
        return None

    def laws(rng):
        one = Jet.const(n, 1)
        for i in range(2):
            f, g, h = rf(rng), rf(rng), rf(rng)
            s = rf(rng)
            w = first_failure([
                ("(f *_Wick g) <> s", mb.left(wick.star(f, g), s), mb.left(f, mb.left(g, s))),
                ("s <>bar (g *_antiWick h)", mb.right(s, anti.star(g, h)),
                 mb.right(mb.right(s, g), h)),
                ("(f <> s) <>bar g", mb.right(mb.left(f, s), g), mb.left(f, mb.right(s, g))),
                ("1 <> s", mb.left(one, s), jet_elem(s).with_kind("section")),
                ("s <>bar 1", mb.right(s, one), jet_elem(s).with_kind("section")),
                ("lambda^0 f <> s", classical(mb.left(f, s)),
                 jet_elem(f * s).with_kind("section")),
                ("lambda^0 s <>bar g", classical(mb.right(s, g)),
                 jet_elem(s * g).with_kind("section"))])
            if w:
                w["pass"] = i
                return w
        return None

    return [
        Check("morita-square", "(D^L)^2 = 0", square),
        Check("morita-fibre-bimodule", "fibrewise bimodule for o_Wick and o_antiWick", bimodule),
        Check("morita-derivation", "D^L is a module derivation along both Fedosov derivations",
              derivation),
        Check("morita-curvature", "R o_Weyl Psi = R <> Psi + lambda rho Psi and (D^L)^2 formula",
              curvature),
        Check("morita-taylor", "sigma tau^L = id and D^L tau^L = 0", taylor),
        Check("morita-laws", "Wick / anti-Wick bimodule laws, units, classical limit", laws),
    ]

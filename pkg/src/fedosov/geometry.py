"""Kaehler charts, Hermitian bundles and the connection operators on W (x) Lambda.

Index conventions (all at the chart basepoint, jets in ``z, zbar``):

* ``g[k][l] = d_k dbar_l K`` is ``g_{k lbar}``; ``ginv[k][l] = g^{k lbar}`` with
  ``g^{k lbar} g_{m lbar} = delta^k_m``.
* ``gamma[l][k][m] = Gamma^l_{km} = g^{l nbar} d_k g_{m nbar}``.
* ``curv[j][m][k][l] = R^j_{m k lbar} = -dbar_l Gamma^j_{km}``.
* Bundle connections are stored as ``theta = -i A`` so that
  ``nabla^E s = ds + theta s`` in a local frame (``nabla_X e = -i e A(X)``).
  ``theta_dirs[v]`` is the matrix along direction ``v`` (``v < n``: ``dz^v``,
  ``v >= n``: ``dzbar^(v-n)``).
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property

from .errors import (DegenerateMetric, IncompatibleKinds, JetOrderExhausted,
                     NonHermitianMetric, NotInvertible)
from .scalars import EXACT, GaussianRational, Jet, series_compose
from .weyl import (WeylElement, _vadd, _vjet, _vscale, _vzero, dfact, unit_sym, vmul,
                   wedge)

BUILTIN_POTENTIALS = ("flat", "fubini_study", "hyperbolic_disc")

_I = GaussianRational(0, 1)
_MINUS_I = GaussianRational(0, -1)


# -- jet matrices -------------------------------------------------------------

def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    return [[_sum(A[i][l] * B[l][j] for l in range(k)) for j in range(m)] for i in range(n)]


def _sum(it):
    acc = None
    for x in it:
        acc = x if acc is None else acc + x
    return acc


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_conj_transpose(A):
    return [[A[j][i].conj() for j in range(len(A))] for i in range(len(A[0]))]


def mat_identity(dim, r, trusted_order=EXACT):
    return [[Jet.const(dim, 1 if i == j else 0, trusted_order) for j in range(r)]
            for i in range(r)]


def mat_inverse(M, order=None):
    """Gauss-Jordan inverse of a square jet matrix invertible at the basepoint."""
    r = len(M)
    dim = M[0][0].dim
    if order is None:
        order = min(x.trusted_order for row in M for x in row)
    A = [[x.truncate(order) for x in row] for row in M]
    B = mat_identity(dim, r, order)
    for col in range(r):
        piv = next((i for i in range(col, r) if A[i][col].value()), None)
        if piv is None:
            raise NotInvertible("matrix is singular at the basepoint")
        A[col], A[piv] = A[piv], A[col]
        B[col], B[piv] = B[piv], B[col]
        inv = A[col][col].invert(order)
        A[col] = [x * inv for x in A[col]]
        B[col] = [x * inv for x in B[col]]
        for i in range(r):
            if i != col and not A[i][col].is_zero():
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[col])]
                B[i] = [a - f * b for a, b in zip(B[i], B[col])]
    return B


def mat_agrees(A, B) -> bool:
    return all(a.agrees(b) for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def is_hermitian(H) -> bool:
    return mat_agrees(H, mat_conj_transpose(H))


# -- potentials ---------------------------------------------------------------

def builtin_potential(name: str, dim: int, jet_order, scale=1) -> Jet:
    """Series jet of a built-in Kaehler potential around the origin."""
    scale = Fraction(scale)
    t = _sum(Jet.variable(dim, k) * Jet.variable(dim, k, True) for k in range(dim))
    if name == "flat":
        return t.scale(scale)
    if name == "fubini_study":
        m = int(jet_order) // 2 + 1
        coeffs = [0] + [Fraction((-1) ** (j + 1), j) for j in range(1, m + 1)]
    elif name == "hyperbolic_disc":
        m = int(jet_order) // 2 + 1
        coeffs = [0] + [Fraction(1, j) for j in range(1, m + 1)]
    else:
        raise ValueError(f"unknown potential {name!r}; expected one of {BUILTIN_POTENTIALS}")
    return series_compose(coeffs, t, jet_order).scale(scale)


# -- forms ---------------------------------------------------------------------

def two_form(dim: int, comps: dict, lam: int = 0) -> WeylElement:
    """Scalar two-form ``lam^p sum c_{uv} dx^u ^ dx^v`` from ``{(u, v): jet}``.

    Directions ``u < n`` are ``dz^u``, ``u >= n`` are ``dzbar^(u-n)``.
    """
    terms: dict = {}
    for (u, v), j in comps.items():
        s, m = wedge(1 << u, 1 << v)
        if not s:
            continue
        key = (lam, 0, m)
        val = (j.scale(s),)
        terms[key] = val if key not in terms else _vadd(terms[key], val)
    return WeylElement(dim, terms)


def form_type_ok(a: WeylElement) -> bool:
    """True when every two-form component is of type (1,1)."""
    n = a.dim
    lo = (1 << n) - 1
    for k, v in a.terms.items():
        if all(x.is_zero() for x in v):
            continue
        hol = bin(k[2] & lo).count("1")
        anti = bin(k[2] >> n).count("1")
        if hol != anti:
            return False
    return True


def exterior_d(a: WeylElement) -> WeylElement:
    """Exterior derivative of the jet coefficients (flat part of D)."""
    n = a.dim
    terms: dict = {}
    for k, v in a.terms.items():
        lam, sym, mask = k
        for var in range(2 * n):
            s, m = wedge(1 << var, mask)
            if not s:
                continue
            bar = var >= n
            dv = tuple(x.derive(var % n, bar) for x in v)
            key = (lam, sym, m)
            val = _vscale(dv, s)
            terms[key] = val if key not in terms else _vadd(terms[key], val)
    return a.like({k: v for k, v in terms.items() if not _vzero(v)})


# -- charts --------------------------------------------------------------------

class KaehlerChart:
    """All local geometric data derived from a Kaehler potential jet."""

    def __init__(self, potential: Jet, name: str = "custom", sabotage: bool = False,
                 jet_order=None):
        if jet_order is not None:
            potential = potential.truncate(jet_order)
        self.dim = potential.dim
        self.potential = potential
        self.name = name
        self.sabotage = sabotage
        n = self.dim
        if potential.trusted_order != EXACT and potential.trusted_order < 4:
            raise JetOrderExhausted("potential must be trusted to order >= 4")
        g = [[potential.derive(k).derive(l, True) for l in range(n)] for k in range(n)]
        self._init_metric(g)

    @classmethod
    def from_metric(cls, g, name="custom-metric"):
        """Build from an explicit Hermitian metric jet matrix ``g_{k lbar}``."""
        if not is_hermitian(g):
            raise NonHermitianMetric("metric jet matrix is not Hermitian")
        self = cls.__new__(cls)
        self.dim = len(g)
        self.potential = None
        self.name = name
        self.sabotage = False
        self._init_metric(g)
        return self

    def _init_metric(self, g):
        n = self.dim
        self.g = g
        det0 = _det0([[x.value() for x in row] for row in g])
        if not det0:
            raise DegenerateMetric("det g vanishes at the basepoint")
        Ginv = mat_inverse(g)
        # g^{k lbar} g_{m lbar} = delta^k_m  =>  ginv = (G^{-1})^T
        self.ginv = [[Ginv[l][k] for l in range(n)] for k in range(n)]

    @property
    def jet_order(self):
        return min(x.trusted_order for row in self.g for x in row)

    @property
    def potential_order(self):
        """Trusted order of the potential (two more than the metric's)."""
        return self.jet_order + 2

    @cached_property
    def gamma(self):
        n = self.dim
        dg = [[[self.g[m][q].derive(k) for q in range(n)] for m in range(n)] for k in range(n)]
        gam = [[[_sum(self.ginv[l][q] * dg[k][m][q] for q in range(n)) for m in range(n)]
                for k in range(n)] for l in range(n)]
        if self.sabotage:
            gam = [[[x.scale(-1) for x in row] for row in blk] for blk in gam]
        return gam

    @cached_property
    def gamma_bar(self):
        """``conj(Gamma^l_{km})`` as jets: Christoffels of the anti-holomorphic part."""
        return [[[x.conj() for x in row] for row in blk] for blk in self.gamma]

    @cached_property
    def curv(self):
        n = self.dim
        return [[[[-self.gamma[j][k][m].derive(l, True) for l in range(n)] for k in range(n)]
                 for m in range(n)] for j in range(n)]

    @cached_property
    def omega(self) -> WeylElement:
        n = self.dim
        half_i = GaussianRational(0, Fraction(1, 2))
        return two_form(n, {(k, n + l): self.g[k][l].scale(half_i)
                            for k in range(n) for l in range(n)})

    @cached_property
    def r_can_curv(self) -> WeylElement:
        """``R^{L_can} = dbar_l Gamma^j_{kj} dz^k ^ dzbar^l``."""
        n = self.dim
        return two_form(n, {(k, n + l): _sum(self.gamma[j][k][j] for j in range(n)).derive(l, True)
                            for k in range(n) for l in range(n)})

    @cached_property
    def r_can_curv_from_riemann(self) -> WeylElement:
        """Second expression ``-R^j_{j k lbar} dz^k ^ dzbar^l``."""
        n = self.dim
        return two_form(n, {(k, n + l): -_sum(self.curv[j][j][k][l] for j in range(n))
                            for k in range(n) for l in range(n)})

    @cached_property
    def ricci_form(self) -> WeylElement:
        """``rho = -(i/2) R^j_{j k lbar} dz^k ^ dzbar^l``."""
        n = self.dim
        c = GaussianRational(0, Fraction(-1, 2))
        return two_form(n, {(k, n + l): _sum(self.curv[j][j][k][l] for j in range(n)).scale(c)
                            for k in range(n) for l in range(n)})

    @cached_property
    def ricci_form_from_det(self):
        """``(i/2) d dbar log det g``, computed without Christoffel symbols.

        ``None`` when ``det g`` is an exact non-constant jet (no finite inverse).
        """
        n = self.dim
        det = _det_jet(self.g)
        try:
            inv = det.invert()
        except NotInvertible:
            return None
        c = GaussianRational(0, Fraction(1, 2))
        return two_form(n, {(k, n + l): (det.derive(k) * inv).derive(l, True).scale(c)
                            for k in range(n) for l in range(n)})

    @cached_property
    def symplectic_R(self) -> WeylElement:
        """``R = -(i/2) g_{m lbar} R^m_{p i jbar} y^p ybar^l (x) dz^i ^ dzbar^j``."""
        n = self.dim
        c = GaussianRational(0, Fraction(-1, 2))
        terms: dict = {}
        for p in range(n):
            for l in range(n):
                sym = unit_sym(p, n) + unit_sym(n + l, n)
                for i in range(n):
                    for j in range(n):
                        coeff = _sum(self.g[m][l] * self.curv[m][p][i][j] for m in range(n))
                        s, mask = wedge(1 << i, 1 << (n + j))
                        key = (0, sym, mask)
                        val = (coeff.scale(c).scale(s),)
                        terms[key] = val if key not in terms else _vadd(terms[key], val)
        return WeylElement(n, terms)

    def curvature_fields(self):
        return self.curv, self.r_can_curv, self.ricci_form, self.symplectic_R

    def __repr__(self):
        return f"KaehlerChart({self.name}, dim={self.dim}, jet_order={self.jet_order})"


def _det0(M):
    """Determinant of a small matrix of Gaussian rationals."""
    r = len(M)
    if r == 1:
        return M[0][0]
    acc = GaussianRational(0)
    for j in range(r):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det0(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def chart_from_potential(K, n: int | None = None, jet_order=None, scale=1,
                         sabotage: bool = False) -> KaehlerChart:
    """Chart from a potential jet or a built-in potential name."""
    if isinstance(K, str):
        if n is None:
            raise ValueError("dimension required for a built-in potential")
        if K != "flat" and jet_order is None:
            raise ValueError("jet_order required for a series potential")
        jet = builtin_potential(K, n, jet_order if K != "flat" else EXACT, scale)
        return KaehlerChart(jet, K, sabotage)
    if n is not None and K.dim != n:
        raise ValueError("potential dimension mismatch")
    return KaehlerChart(K, "custom", sabotage, jet_order)


# -- bundles -------------------------------------------------------------------

class BundleChart:
    """Local data of a Hermitian vector bundle in a fixed frame.

    ``theta_dirs[v]`` holds the connection matrix ``-i A(dx^v)`` per direction.
    """

    def __init__(self, dim, rank, kind, theta_dirs, H=None, name="bundle", transition=None):
        if kind not in ("holomorphic", "antiholomorphic"):
            raise ValueError(kind)
        self.dim = dim
        self.rank = rank
        self.kind = kind
        self.theta_dirs = theta_dirs
        self.H = H
        self.name = name
        self.transition = transition

    @cached_property
    def Hinv(self):
        if self.H is None:
            return None
        return mat_inverse(self.H)

    @cached_property
    def A_dirs(self):
        """Connection one-form components ``A = i theta``."""
        return [[[x.scale(_I) for x in row] for row in th] for th in self.theta_dirs]

    @cached_property
    def curvature(self) -> WeylElement:
        """``R^E = d theta + theta ^ theta`` as an End-valued two-form."""
        n, r = self.dim, self.rank
        terms: dict = {}
        for u in range(2 * n):
            for v in range(u + 1, 2 * n):
                tu, tv = self.theta_dirs[u], self.theta_dirs[v]
                d = mat_sub([[x.derive(u % n, u >= n) for x in row] for row in tv],
                            [[x.derive(v % n, v >= n) for x in row] for row in tu])
                comm = mat_sub(mat_mul(tu, tv), mat_mul(tv, tu))
                val = tuple(a + b for ra, rb in zip(d, comm) for a, b in zip(ra, rb))
                if _vzero(val):
                    continue
                terms[(0, 0, (1 << u) | (1 << v))] = val
        return WeylElement(n, terms, "endo", r)

    def is_type_11(self) -> bool:
        return form_type_ok(self.curvature)

    def compatibility_residual(self):
        """``dH - i(A^* H - H A)`` per direction (zero for a metric connection)."""
        n = self.dim
        out = []
        for v in range(2 * n):
            dH = [[x.derive(v % n, v >= n) for x in row] for row in self.H]
            # A^* along dx^v is the conjugate transpose of A along the conjugate direction
            vc = (v + n) % (2 * n)
            Astar = mat_conj_transpose(self.A_dirs[vc])
            rhs = mat_sub(mat_mul(Astar, self.H), mat_mul(self.H, self.A_dirs[v]))
            rhs = [[x.scale(_I) for x in row] for row in rhs]
            out.append(mat_sub(dH, rhs))
        return out

    def __repr__(self):
        return f"BundleChart({self.name}, rank={self.rank}, {self.kind})"


def bundle_from_metric(H, kind: str = "holomorphic", name="bundle", transition=None,
                       order=None) -> BundleChart:
    """Canonical (Chern) connection ``A = i H^{-1} d H`` of a Hermitian metric.

    ``d`` is ``partial`` for holomorphic frames and ``dbar`` for
    anti-holomorphic ones.
    """
    if not is_hermitian(H):
        raise NonHermitianMetric("fibre metric jet matrix is not Hermitian")
    r = len(H)
    dim = H[0][0].dim
    if order is not None:
        H = [[x.truncate(order) for x in row] for row in H]
    Hinv = mat_inverse(H)
    zero = [[Jet.zero(dim) for _ in range(r)] for _ in range(r)]
    theta = []
    for v in range(2 * dim):
        hol = v < dim
        if hol == (kind == "holomorphic"):
            dH = [[x.derive(v % dim, not hol) for x in row] for row in H]
            theta.append(mat_mul(Hinv, dH))
        else:
            theta.append(zero)
    b = BundleChart(dim, r, kind, theta, H, name, transition)
    b.__dict__["Hinv"] = Hinv
    return b


def canonical_line_bundle(chart: KaehlerChart) -> BundleChart:
    """``L_can`` with connection ``theta = -Gamma^l_{kl} dz^k`` and metric ``1/det g``."""
    n = chart.dim
    theta = []
    for v in range(2 * n):
        if v < n:
            theta.append([[-_sum(chart.gamma[l][v][l] for l in range(n))]])
        else:
            theta.append([[Jet.zero(n)]])
    detg = _det_jet(chart.g)
    H = [[detg.invert()]]
    return BundleChart(n, 1, "holomorphic", theta, H, "L_can")


def _det_jet(M):
    r = len(M)
    if r == 1:
        return M[0][0]
    acc = None
    for j in range(r):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _det_jet(minor)
        term = term if j % 2 == 0 else -term
        acc = term if acc is None else acc + term
    return acc


def trivial_bundle(dim, rank=1, kind="holomorphic") -> BundleChart:
    return bundle_from_metric(mat_identity(dim, rank), kind, "trivial")


# -- connection operators --------------------------------------------------------

_DIRECTIONS = {"full": (True, True), "z": (True, False), "zbar": (False, True)}


def connection_apply(a: WeylElement, chart: KaehlerChart, bundle: BundleChart | None = None,
                     which: str = "D", part: str = "full", cap=None) -> WeylElement:
    """Apply ``D`` (scalar), ``D^E`` (section values) or ``D'`` (endomorphisms).

    ``part`` selects the holomorphic (``"z"``) or anti-holomorphic
    (``"zbar"``) half.  The form part is differentiated only through the
    jet coefficients; the Christoffel rotation acts on symmetric generators.
    Keys of total degree above ``cap`` are neither differentiated nor kept.
    """
    expected = {"D": ("scalar",), "DE": ("section",), "Dprime": ("endo",), "Drow": ("row",)}
    if which not in expected:
        raise ValueError(which)
    if a.kind not in expected[which] and not (which == "Dprime" and a.kind == "scalar"):
        raise IncompatibleKinds(f"{which} cannot act on {a.kind} values")
    if which != "D" and bundle is None:
        raise IncompatibleKinds(f"{which} needs a bundle")
    n = a.dim
    hol, anti = _DIRECTIONS[part]
    dirs = [v for v in range(2 * n) if (v < n and hol) or (v >= n and anti)]
    rows, cols = a.shape
    if a.kind == "scalar":
        rows = cols = 1
    terms: dict = {}

    def add(key, val):
        prev = terms.get(key)
        terms[key] = val if prev is None else _vadd(prev, val)

    rcap = a.cap if cap is None else min(cap, a.cap)
    for k, v in a.terms.items():
        if a.key_degree(k) > rcap:
            continue
        lam, sym, mask = k
        for var in dirs:
            s, m = wedge(1 << var, mask)
            if not s:
                continue
            bar = var >= n
            kk = var % n
            # coefficient derivative
            add((lam, sym, m), _vscale(tuple(x.derive(kk, bar) for x in v), s))
            # Christoffel rotation of symmetric generators of the same type
            gam = chart.gamma_bar if bar else chart.gamma
            off = n if bar else 0
            for mm in range(n):
                d = dfact(sym, unit_sym(off + mm, n), n)
                if d is None:
                    continue
                for j in range(n):
                    gj = gam[mm][kk][j]
                    if gj.is_zero() and gj.is_exact:
                        continue
                    nsym = d[1] + unit_sym(off + j, n)
                    add((lam, nsym, m), _vscale(_vjet(v, gj), -d[0] * s))
            if which != "D":
                th = bundle.theta_dirs[var]
                flat = tuple(x for row in th for x in row)
                r = bundle.rank
                if which == "DE":
                    add((lam, sym, m), _vscale(vmul(flat, (r, r), v, (rows, cols)), s))
                elif which == "Drow":
                    add((lam, sym, m), _vscale(vmul(v, (rows, cols), flat, (r, r)), -s))
                else:
                    vv = v if a.kind == "endo" else _scalar_to_endo(v, r)
                    comm = _vadd(vmul(flat, (r, r), vv, (r, r)),
                                 _vscale(vmul(vv, (r, r), flat, (r, r)), -1))
                    if a.kind == "endo":
                        add((lam, sym, m), _vscale(comm, s))
    return a.like({k: v for k, v in terms.items() if not _vzero(v)}, rcap)


def _scalar_to_endo(v, r):
    j = v[0]
    z = Jet.zero(j.dim, j.trusted_order)
    return tuple(j if a == b else z for a in range(r) for b in range(r))


def D(a, chart, part="full", cap=None):
    return connection_apply(a, chart, None, "D", part, cap)

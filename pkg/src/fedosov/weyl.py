"""The formal Weyl algebra W (x) Lambda and its End(E)- and E-valued variants.

Conventions
-----------
Symmetric generators ``y^k = dz^k_s`` and ``ybar^k = dzbar^k_s`` are
commuting polynomial variables and ``i_s(Z_k)`` is the formal partial
derivative in ``y^k``.  The symmetric tensor ``dz^k v dzbar^l``
therefore corresponds to the monomial ``y^k ybar^l`` with no extra factor;
e.g. ``1/2 g_{kl} dz^k v dzbar^l`` is stored as the monomial coefficient
``g_{kl}/2`` on ``y^k ybar^l`` and ``i_s(Z_k) y^m = delta^m_k``.

Anti-symmetric generators ``da^k = dz^k_a`` (bit ``k``) and ``dabar^k``
(bit ``n + k``) are stored as a bitmask in increasing bit order; signs are
absorbed into the coefficient.

A term key is ``(lam, sym, mask)`` where ``sym`` is a packed monomial (see
:mod:`fedosov.scalars`) over ``2n`` slots.  Values are tuples of jets in
row-major order; the shape follows from ``kind`` and ``rank``:
scalar ``1x1`` (broadcast), endo ``r x r``, section ``r x 1``, row ``1 x r``.

Every element carries ``cap``: all components of total degree
``2*lam + |sym|`` up to ``cap`` are known (absent keys are zero); nothing
above it is stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import IncompatibleKinds, MissingFibreMetric, NegativeLambdaPower
from .scalars import EXACT, I, GaussianRational, Jet, key_degree, pack, unpack

KINDS = ("scalar", "endo", "section", "row")


@dataclass(frozen=True)
class TruncationPolicy:
    """Finite truncation of formal series.

    ``lambda_order`` is the highest power of lambda reported for products;
    ``total_degree_cap`` defaults to ``2 * lambda_order``; ``jet_order`` is
    the trusted order of the potential and input jets.
    """

    lambda_order: int
    jet_order: int
    total_degree_cap: int | None = None
    asym_cap: int | None = None

    def __post_init__(self):
        if self.total_degree_cap is None:
            object.__setattr__(self, "total_degree_cap", 2 * self.lambda_order)
        if self.total_degree_cap < 2:
            from .errors import ConfigError
            raise ConfigError("total degree cap must be at least 2")

    @property
    def T(self) -> int:
        return self.total_degree_cap


# -- monomial helpers --------------------------------------------------------

@lru_cache(maxsize=None)
def wedge(m1: int, m2: int) -> tuple:
    """Sign and mask of ``(m1) ^ (m2)`` for canonically ordered bitmasks."""
    if m1 & m2:
        return 0, 0
    sign = 1
    b = m2
    while b:
        low = b & -b
        # generators of m1 above this one must be passed
        if bin(m1 & ~(low - 1) & ~low).count("1") & 1:
            sign = -sign
        b ^= low
    return sign, m1 | m2


@lru_cache(maxsize=None)
def _interior(mask: int, bit: int) -> tuple:
    """Sign and remaining mask after removing generator ``bit`` from the left."""
    below = mask & ((1 << bit) - 1)
    return (-1 if bin(below).count("1") & 1 else 1), mask & ~(1 << bit)


@lru_cache(maxsize=None)
def conj_mask(mask: int, n: int) -> tuple:
    """Complex conjugation of a form monomial: swaps dz <-> dzbar, returns sign."""
    bits = [i for i in range(2 * n) if mask >> i & 1]
    images = [(i + n) % (2 * n) for i in bits]
    sign, out = 1, 0
    for im in images:
        s, out = wedge(out, 1 << im)
        sign *= s
    return sign, out


@lru_cache(maxsize=None)
def conj_sym(sym: int, n: int) -> int:
    e = unpack(sym, n)
    return pack(e[n:] + e[:n])


@lru_cache(maxsize=None)
def dfact(s: int, m: int, n: int):
    """``d^m y^s = factor * y^(s-m)``; None when it vanishes."""
    if m == 0:
        return 1, s
    es, em = unpack(s, n), unpack(m, n)
    f = 1
    for a, b in zip(es, em):
        if b > a:
            return None
        for j in range(b):
            f *= a - j
    return f, s - m


@lru_cache(maxsize=None)
def _sym_split(sym: int, n: int) -> tuple:
    e = unpack(sym, n)
    return sum(e[:n]), sum(e[n:])


def _mask_split(mask: int, n: int) -> tuple:
    lo = (1 << n) - 1
    return bin(mask & lo).count("1"), bin(mask >> n).count("1")


def unit_sym(var: int, n: int) -> int:
    e = [0] * (2 * n)
    e[var] = 1
    return pack(e)


# -- values ------------------------------------------------------------------

def shape(kind: str, rank: int) -> tuple:
    return {"scalar": (1, 1), "endo": (rank, rank), "section": (rank, 1),
            "row": (1, rank)}[kind]


_PRODUCT_KIND = {
    ("scalar", "scalar"): "scalar",
    ("endo", "endo"): "endo",
    ("endo", "section"): "section",
    ("section", "row"): "endo",
    ("row", "section"): "scalar",
    ("row", "endo"): "row",
}


def product_kind(ka: str, kb: str) -> str:
    if ka == "scalar":
        return kb
    if kb == "scalar":
        return ka
    try:
        return _PRODUCT_KIND[(ka, kb)]
    except KeyError:
        raise IncompatibleKinds(f"cannot multiply {ka} by {kb}") from None


def _vadd(u: tuple, v: tuple) -> tuple:
    return tuple(x + y for x, y in zip(u, v))


def _vscale(u: tuple, c) -> tuple:
    return tuple(x.scale(c) for x in u)


def _vjet(u: tuple, j: Jet) -> tuple:
    return tuple(j * x for x in u)


def _vzero(u: tuple) -> bool:
    """True when the value is exactly zero (zero jets of finite trust are kept)."""
    return all(x.is_zero() and x.is_exact for x in u)


def _vnull(u: tuple) -> bool:
    return all(x.is_zero() for x in u)


def vmul(u: tuple, su: tuple, v: tuple, sv: tuple) -> tuple:
    """Matrix product of jet-valued values; ``(1,1)`` scalar shapes broadcast."""
    if su == (1, 1) and len(u) == 1 and sv != (1, 1):
        a = u[0]
        return tuple(a * x for x in v)
    if sv == (1, 1) and len(v) == 1 and su != (1, 1):
        b = v[0]
        return tuple(x * b for x in u)
    r, k = su
    k2, c = sv
    if k != k2:
        raise IncompatibleKinds(f"shape mismatch {su} x {sv}")
    out = []
    for i in range(r):
        for j in range(c):
            acc = None
            for l in range(k):
                t = u[i * k + l] * v[l * c + j]
                acc = t if acc is None else acc + t
            out.append(acc)
    return tuple(out)


# -- the element type --------------------------------------------------------

class WeylElement:
    """Sparse element of W (x) Lambda (x) {C, End(E), E, E*}."""

    __slots__ = ("dim", "kind", "rank", "terms", "cap")

    def __init__(self, dim: int, terms: dict | None = None, kind: str = "scalar",
                 rank: int = 1, cap=EXACT):
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        self.dim = dim
        self.kind = kind
        self.rank = 1 if kind == "scalar" else rank
        self.cap = cap
        size = self.rows * self.cols
        clean = {}
        for key, val in (terms or {}).items():
            if isinstance(val, Jet):
                val = (val,)
            val = tuple(val)
            if len(val) != size:
                raise IncompatibleKinds(f"value of length {len(val)} for shape {self.shape}")
            if self.key_degree(key) > cap or _vzero(val):
                continue
            clean[key] = val
        self.terms = clean

    @classmethod
    def _raw(cls, dim, terms, kind, rank, cap):
        w = cls.__new__(cls)
        w.dim, w.terms, w.kind, w.rank, w.cap = dim, terms, kind, rank, cap
        return w

    def like(self, terms: dict, cap=None, kind=None) -> "WeylElement":
        return WeylElement._raw(self.dim, terms, kind or self.kind, self.rank,
                                self.cap if cap is None else cap)

    # -- constructors --------------------------------------------------------
    @classmethod
    def zero(cls, dim, kind="scalar", rank=1, cap=EXACT) -> "WeylElement":
        return cls._raw(dim, {}, kind, 1 if kind == "scalar" else rank, cap)

    @classmethod
    def from_jet(cls, jet: Jet, lam: int = 0, sym=None, mask: int = 0) -> "WeylElement":
        n = jet.dim
        s = 0 if sym is None else (sym if isinstance(sym, int) else pack(sym))
        return cls(n, {(lam, s, mask): (jet,)})

    @classmethod
    def from_value(cls, dim, value, kind, rank, lam=0, sym=0, mask=0) -> "WeylElement":
        return cls(dim, {(lam, sym, mask): tuple(value)}, kind, rank)

    @classmethod
    def constant(cls, dim, c=1, lam=0) -> "WeylElement":
        return cls.from_jet(Jet.const(dim, c), lam)

    @classmethod
    def identity(cls, dim, rank, c=1) -> "WeylElement":
        z, o = Jet.zero(dim), Jet.const(dim, c)
        val = tuple(o if i == j else z for i in range(rank) for j in range(rank))
        return cls(dim, {(0, 0, 0): val}, "endo", rank)

    @classmethod
    def sym_gen(cls, dim, k, bar=False, coeff=1) -> "WeylElement":
        """The symmetric generator ``dz^k_s`` (or ``dzbar^k_s``)."""
        return cls(dim, {(0, unit_sym(k + (dim if bar else 0), dim), 0):
                         (Jet.const(dim, coeff),)})

    @classmethod
    def form_gen(cls, dim, k, bar=False, coeff=1) -> "WeylElement":
        """The anti-symmetric generator ``dz^k_a`` (or ``dzbar^k_a``)."""
        return cls(dim, {(0, 0, 1 << (k + (dim if bar else 0))): (Jet.const(dim, coeff),)})

    @classmethod
    def lam(cls, dim, power=1) -> "WeylElement":
        return cls.constant(dim, 1, power)

    # -- degrees -------------------------------------------------------------
    @property
    def rows(self):
        return shape(self.kind, self.rank)[0]

    @property
    def cols(self):
        return shape(self.kind, self.rank)[1]

    @property
    def shape(self):
        return shape(self.kind, self.rank)

    def key_degree(self, key) -> int:
        return 2 * key[0] + key_degree(key[1], self.dim)

    @staticmethod
    def deg_s(key, n) -> int:
        return key_degree(key[1], n)

    @staticmethod
    def deg_a(key) -> int:
        return bin(key[2]).count("1")

    def low(self):
        """Lower bound for the total degree of nonzero components."""
        if not self.terms:
            return self.cap + 1
        return min(self.key_degree(k) for k in self.terms)

    def asym_degrees(self) -> set:
        return {bin(k[2]).count("1") for k in self.terms}

    def form_parity(self) -> int:
        """Common parity of anti-symmetric degree (raises if mixed)."""
        ps = {bin(k[2]).count("1") & 1 for k in self.terms}
        if len(ps) > 1:
            raise ValueError("element is not homogeneous in form parity")
        return ps.pop() if ps else 0

    def is_zero(self) -> bool:
        """No nonzero coefficient is stored (zero jets of finite trust may be)."""
        return all(_vnull(v) for v in self.terms.values())

    def jet_order(self):
        """Smallest trusted order among stored jets."""
        return min((x.trusted_order for v in self.terms.values() for x in v), default=EXACT)

    # -- linear structure ----------------------------------------------------
    def _compat(self, other):
        if self.dim != other.dim:
            raise IncompatibleKinds("dimension mismatch")
        if (self.kind, self.rank) != (other.kind, other.rank):
            raise IncompatibleKinds(f"cannot add {self.kind} and {other.kind}")

    def truncate(self, cap) -> "WeylElement":
        if cap >= self.cap:
            return self
        return self.like({k: v for k, v in self.terms.items() if self.key_degree(k) <= cap},
                         cap)

    def __add__(self, other):
        if isinstance(other, WeylElement) and other.kind == "scalar" and self.kind == "endo":
            other = other.as_endo(self.rank)
        self._compat(other)
        cap = min(self.cap, other.cap)
        a, b = self.truncate(cap), other.truncate(cap)
        terms = dict(a.terms)
        for k, v in b.terms.items():
            w = terms.get(k)
            if w is None:
                terms[k] = v
            else:
                s = _vadd(w, v)
                if _vzero(s):
                    del terms[k]
                else:
                    terms[k] = s
        return self.like(terms, cap)

    def __neg__(self):
        return self.like({k: _vscale(v, -1) for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "WeylElement":
        c = GaussianRational.coerce(c)
        if not c:
            return self.like({})
        return self.like({k: _vscale(v, c) for k, v in self.terms.items()})

    def __mul__(self, c):
        if isinstance(c, WeylElement):
            return mu_product(self, c)
        return self.scale(c)

    __rmul__ = scale

    def times_jet(self, j: Jet) -> "WeylElement":
        return self.like({k: _vjet(v, j) for k, v in self.terms.items()})

    def times_lambda(self, p: int = 1) -> "WeylElement":
        return self.like({(k[0] + p, k[1], k[2]): v for k, v in self.terms.items()},
                         self.cap + 2 * p)

    def i_over_lambda(self) -> "WeylElement":
        """Multiply by ``i/lambda``; a nonzero lambda^0 part is an error."""
        bad = [k for k, v in self.terms.items() if k[0] == 0 and not _vnull(v)]
        if bad:
            raise NegativeLambdaPower(
                f"lambda^0 remnant at key {self.describe_key(bad[0])} cannot be divided by lambda")
        return self.like({(k[0] - 1, k[1], k[2]): _vscale(v, I) for k, v in self.terms.items()
                          if k[0] > 0}, self.cap - 2)

    def as_endo(self, rank: int) -> "WeylElement":
        """Embed a scalar element as multiples of the identity."""
        if self.kind != "scalar":
            return self
        terms = {}
        for k, (j,) in self.terms.items():
            z = Jet.zero(self.dim, j.trusted_order)
            terms[k] = tuple(j if a == b else z for a in range(rank) for b in range(rank))
        return WeylElement._raw(self.dim, terms, "endo", rank, self.cap)

    def with_kind(self, kind: str) -> "WeylElement":
        if shape(kind, self.rank) != self.shape:
            raise IncompatibleKinds(f"cannot view {self.kind} as {kind}")
        return WeylElement._raw(self.dim, self.terms, kind, self.rank, self.cap)

    def filter(self, pred) -> "WeylElement":
        return self.like({k: v for k, v in self.terms.items() if pred(k)})

    def lambda_part(self, p: int) -> "WeylElement":
        return self.filter(lambda k: k[0] == p)

    def entry(self, i: int, j: int = 0) -> "WeylElement":
        """Scalar element holding one matrix entry of the value."""
        idx = i * self.cols + j
        terms = {k: (v[idx],) for k, v in self.terms.items()
                 if not (v[idx].is_zero() and v[idx].is_exact)}
        return WeylElement._raw(self.dim, terms, "scalar", 1, self.cap)

    # -- comparison ----------------------------------------------------------
    def first_difference(self, other: "WeylElement", cap=None):
        """Witness ``(key, entry, value_self, value_other)`` of the first mismatch.

        Components are compared up to the common cap; jets up to their
        common trusted order.
        """
        if other.kind == "scalar" and self.kind == "endo":
            other = other.as_endo(self.rank)
        if self.kind == "scalar" and other.kind == "endo":
            return other.first_difference(self, cap)
        c = min(self.cap, other.cap)
        if cap is not None:
            c = min(c, cap)
        size = self.rows * self.cols
        zero = Jet.zero(self.dim)
        keys = sorted(set(self.terms) | set(other.terms), key=lambda k: (self.key_degree(k), k))
        for k in keys:
            if self.key_degree(k) > c:
                break
            u = self.terms.get(k, (zero,) * size)
            v = other.terms.get(k, (zero,) * size)
            for idx, (x, y) in enumerate(zip(u, v)):
                d = x.first_difference(y)
                if d is not None:
                    return (self.describe_key(k), idx, d)
        return None

    def agrees(self, other, cap=None) -> bool:
        if not isinstance(other, WeylElement):
            other = WeylElement.constant(self.dim, other)
        return self.first_difference(other, cap) is None

    def describe_key(self, key) -> str:
        n = self.dim
        e = unpack(key[1], n)
        names = ([f"y{i + 1}" for i in range(n)] + [f"yb{i + 1}" for i in range(n)]) \
            if n > 1 else ["y", "yb"]
        sym = "*".join(nm if p == 1 else f"{nm}^{p}" for nm, p in zip(names, e) if p) or "1"
        fnames = ([f"dz{i + 1}" for i in range(n)] + [f"dzb{i + 1}" for i in range(n)]) \
            if n > 1 else ["dz", "dzb"]
        forms = "^".join(fnames[i] for i in range(2 * n) if key[2] >> i & 1) or "1"
        return f"lam^{key[0]} {sym} (x) {forms}"

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (self.key_degree(kv[0]), kv[0]))

    def __repr__(self):
        body = "; ".join(f"[{self.describe_key(k)}] {' | '.join(x.to_string() for x in v)}"
                         for k, v in self.sorted_terms())
        return f"WeylElement({self.kind}, cap={self.cap}: {body or '0'})"


# -- contraction tables ------------------------------------------------------

class ContractionTable:
    """Coefficients of ``P^a/a!`` and mixed powers for a given inverse metric.

    ``P^a / a! = sum C_{mu nu} d_y^mu (x) d_ybar^nu`` where ``C`` is read off
    the expansion of ``(g^{kl} u_k v_l)^a / a!``.  ``Pbar`` has the same
    coefficients with the roles of the two factors exchanged.
    """

    def __init__(self, ginv):
        self.n = len(ginv)
        self.ginv = ginv
        self._p = {0: [(0, 0, None)]}
        self._combo = {}

    @property
    def _one(self):
        return Jet.const(self.n, 1)

    def p_power(self, a: int) -> list:
        """List of ``(left_key, right_key, jet)`` for ``P^a / a!``."""
        if a in self._p:
            return self._p[a]
        n = self.n
        prev = {(m1, m2): (j if j is not None else self._one)
                for m1, m2, j in self.p_power(a - 1)}
        nxt: dict = {}
        for (m1, m2), j in prev.items():
            for k in range(n):
                for l in range(n):
                    g = self.ginv[k][l]
                    if g.is_zero() and g.is_exact:
                        continue
                    key = (m1 + unit_sym(k, n), m2 + unit_sym(n + l, n))
                    t = j * g
                    nxt[key] = t if key not in nxt else nxt[key] + t
        out = [(m1, m2, j.scale(Fraction(1, a))) for (m1, m2), j in nxt.items()
               if not (j.is_zero() and j.is_exact)]
        self._p[a] = out
        return out

    def combos(self, a: int, b: int) -> list:
        """``(left_key, right_key, jet)`` for ``(P^a/a!)(Pbar^b/b!)``."""
        if (a, b) in self._combo:
            return self._combo[(a, b)]
        out = []
        for m1, m2, j1 in self.p_power(a):
            for q1, q2, j2 in self.p_power(b):
                # Pbar: antiholomorphic derivatives on the left, holomorphic on the right
                if j1 is None and j2 is None:
                    j = None
                elif j1 is None:
                    j = j2
                elif j2 is None:
                    j = j1
                else:
                    j = j1 * j2
                    if j.is_zero() and j.is_exact:
                        continue
                out.append((m1 + q2, m2 + q1, j))
        self._combo[(a, b)] = out
        return out

    def laplace_terms(self) -> list:
        return [(m1 + m2, j) for m1, m2, j in self.p_power(1)]


def table_of(chart) -> ContractionTable:
    t = getattr(chart, "_contraction_table", None)
    if t is None:
        t = ContractionTable(chart.ginv)
        try:
            object.__setattr__(chart, "_contraction_table", t)
        except AttributeError:
            pass
    return t


class FlatMetric:
    """Minimal chart stand-in with ``g^{kl} = delta^{kl}`` (exact)."""

    def __init__(self, n: int):
        self.dim = n
        self.ginv = [[Jet.const(n, 1 if k == l else 0) for l in range(n)] for k in range(n)]


# -- bilinear products -------------------------------------------------------

def _bilinear(a: WeylElement, b: WeylElement, chart, weights, with_lambda: bool,
              cap=None, sigma_only: bool = False) -> WeylElement:
    """Core of all fibrewise products.

    ``weights(ia, ib)`` gives the rational weight of ``(P^ia/ia!)(Pbar^ib/ib!)``
    or ``None`` to skip; ``ia`` (``ib``) ranges up to the available symmetric
    degrees.  ``sigma_only`` keeps just the fully contracted, form-free part.
    """
    if a.dim != b.dim:
        raise IncompatibleKinds("dimension mismatch")
    n = a.dim
    kind = product_kind(a.kind, b.kind)
    rank = max(a.rank, b.rank)
    sa, sb = a.shape, b.shape
    if a.kind == "scalar" and b.kind == "scalar":
        sa = sb = (1, 1)
    rcap = min(a.cap + b.low(), b.cap + a.low())
    if cap is not None:
        rcap = min(rcap, cap)
    out_shape = shape(kind, rank)
    if not a.terms or not b.terms:
        return WeylElement._raw(n, {}, kind, rank, rcap)
    table = table_of(chart) if chart is not None else None
    at = sorted(((a.key_degree(k), k, v) for k, v in a.terms.items()), key=lambda t: t[0])
    bt = sorted(((b.key_degree(k), k, v) for k, v in b.terms.items()), key=lambda t: t[0])
    acc: dict = {}
    for da, ka, va in at:
        if da + bt[0][0] > rcap:
            break
        la, syma, maska = ka
        if sigma_only and maska:
            continue
        ha, aa = _sym_split(syma, n)
        for db, kb, vb in bt:
            if da + db > rcap:
                break
            lb, symb, maskb = kb
            sign, mask = wedge(maska, maskb)
            if not sign:
                continue
            hb, ab = _sym_split(symb, n)
            if sigma_only and (maskb or ha != ab or aa != hb):
                continue
            ab_val = None
            for ia in (range(ha, ha + 1) if sigma_only else range(min(ha, ab) + 1)):
                for ib in (range(aa, aa + 1) if sigma_only else range(min(aa, hb) + 1)):
                    w = weights(ia, ib)
                    if w is None or w == 0:
                        continue
                    combos = table.combos(ia, ib) if (ia or ib) else [(0, 0, None)]
                    lam = la + lb + ((ia + ib) if with_lambda else 0)
                    for ci, (mL, mR, _) in enumerate(combos):
                        fl = dfact(syma, mL, n)
                        if fl is None:
                            continue
                        fr = dfact(symb, mR, n)
                        if fr is None:
                            continue
                        if ab_val is None:
                            ab_val = vmul(va, sa, vb, sb)
                        c = w * fl[0] * fr[0] * sign
                        key = ((lam, fl[1] + fr[1], mask), (ia, ib, ci))
                        v = _vscale(ab_val, c)
                        prev = acc.get(key)
                        acc[key] = v if prev is None else _vadd(prev, v)
    terms: dict = {}
    for (key, (ia, ib, ci)), v in acc.items():
        if ia or ib:
            j = table.combos(ia, ib)[ci][2]
            if j is not None:
                v = _vjet(v, j)
        prev = terms.get(key)
        terms[key] = v if prev is None else _vadd(prev, v)
    terms = {k: v for k, v in terms.items() if not _vzero(v)}
    return WeylElement._raw(n, terms, kind, rank, rcap)


def mu_product(a: WeylElement, b: WeylElement, cap=None) -> WeylElement:
    """Undeformed fibrewise product ``(f x alpha)(g x beta) = fg x alpha^beta``."""
    return _bilinear(a, b, None, lambda ia, ib: 1 if ia == ib == 0 else None, False, cap)


def contraction(a: WeylElement, b: WeylElement, which: str, chart) -> WeylElement:
    """Single application of ``P`` (or ``Pbar``) followed by ``mu``."""
    target = (1, 0) if which == "P" else (0, 1)
    if which not in ("P", "Pbar"):
        raise ValueError(which)
    return _bilinear(a, b, chart, lambda ia, ib: 1 if (ia, ib) == target else None, False)


def poisson_fibre(a: WeylElement, b: WeylElement, chart) -> WeylElement:
    """The fibrewise Poisson operator through ``(2/i)(P - Pbar)``."""
    return (contraction(a, b, "P", chart) - contraction(a, b, "Pbar", chart)).scale(
        GaussianRational(0, -2))


def _kappa_weights(kappa):
    kappa = Fraction(kappa)
    wp, wq = kappa + 1, kappa - 1

    def weights(ia, ib):
        if (ia and wp == 0) or (ib and wq == 0):
            return None
        return wp ** ia * wq ** ib
    return weights


def circ(a: WeylElement, b: WeylElement, kappa, chart, cap=None) -> WeylElement:
    """Fibrewise kappa-ordered product ``mu . exp((k+1) lam P + (k-1) lam Pbar)``."""
    return _bilinear(a, b, chart, _kappa_weights(kappa), True, cap)


def sigma_circ(a: WeylElement, b: WeylElement, kappa, chart, cap=None) -> WeylElement:
    """``sigma(a o_kappa b)`` without materializing the other components."""
    return _bilinear(a, b, chart, _kappa_weights(kappa), True, cap, sigma_only=True)


def supercommutator(a: WeylElement, b: WeylElement, kappa, chart, cap=None) -> WeylElement:
    """``ad_kappa(a) b = a o b - (-1)^{|a||b|} b o a``, extended bilinearly."""
    odd_a = a.filter(lambda k: bin(k[2]).count("1") % 2)
    odd_b = b.filter(lambda k: bin(k[2]).count("1") % 2)
    ab = circ(a, b, kappa, chart, cap)
    ba = circ(b, a, kappa, chart, cap)
    if not odd_a.terms or not odd_b.terms:
        return ab - ba
    # the pair (odd, odd) gets the opposite sign: add 2 (odd_b o odd_a)
    return ab - ba + circ(odd_b, odd_a, kappa, chart, cap).scale(2)


def ad_kappa(r: WeylElement, a: WeylElement, kappa, chart, cap=None) -> WeylElement:
    return supercommutator(r, a, kappa, chart, cap)


def i_over_lambda_ad(r: WeylElement, a: WeylElement, kappa, chart, cap=None) -> WeylElement:
    """``(i/lambda) ad_kappa(r) a``; requested ``cap`` refers to the result."""
    inner = None if cap is None else cap + 2
    return ad_kappa(r, a, kappa, chart, inner).i_over_lambda()


# -- unary fibre operators ---------------------------------------------------

def _map_terms(a: WeylElement, fn, cap=None, kind=None) -> WeylElement:
    terms: dict = {}
    for k, v in a.terms.items():
        for nk, c, val in fn(k, v):
            if not c:
                continue
            nv = _vscale(val, c)
            prev = terms.get(nk)
            terms[nk] = nv if prev is None else _vadd(prev, nv)
    terms = {k: v for k, v in terms.items() if not _vzero(v)}
    out = a.like(terms, a.cap if cap is None else cap, kind)
    return out.truncate(out.cap)


def _vars(n: int, part: str):
    if part == "full":
        return range(2 * n)
    if part == "z":
        return range(n)
    if part == "zbar":
        return range(n, 2 * n)
    raise ValueError(part)


def delta(a: WeylElement, part: str = "full") -> WeylElement:
    """``delta = dx^i ^ i_s(d_i)`` (or its holomorphic / anti-holomorphic half)."""
    n = a.dim
    vs = list(_vars(n, part))

    def fn(k, v):
        lam, sym, mask = k
        for var in vs:
            d = dfact(sym, unit_sym(var, n), n)
            if d is None:
                continue
            s, m = wedge(1 << var, mask)
            if s:
                yield (lam, d[1], m), d[0] * s, v
    # lowers total degree by one
    return _map_terms(a, fn, a.cap - 1)


def delta_star(a: WeylElement, part: str = "full") -> WeylElement:
    """``delta^* = dx^i v i_a(d_i)``."""
    n = a.dim
    vs = list(_vars(n, part))

    def fn(k, v):
        lam, sym, mask = k
        for var in vs:
            if mask >> var & 1:
                s, m = _interior(mask, var)
                yield (lam, sym + unit_sym(var, n), m), s, v
    return _map_terms(a, fn, a.cap + 1)


def _split_degrees(k, n, part):
    h, ah = _sym_split(k[1], n)
    fh, fah = _mask_split(k[2], n)
    if part == "full":
        return h + ah, fh + fah
    if part == "z":
        return h, fh
    return ah, fah


def delta_inv(a: WeylElement, part: str = "full") -> WeylElement:
    """``delta^{-1} a = delta^* a / (k + l)`` on each bi-homogeneous key."""
    n = a.dim
    vs = list(_vars(n, part))

    def fn(k, v):
        kk, ll = _split_degrees(k, n, part)
        if kk + ll == 0:
            return
        lam, sym, mask = k
        for var in vs:
            if mask >> var & 1:
                s, m = _interior(mask, var)
                yield (lam, sym + unit_sym(var, n), m), Fraction(s, kk + ll), v
    return _map_terms(a, fn, a.cap + 1)


def sigma(a: WeylElement) -> WeylElement:
    """Projection onto symmetric and anti-symmetric degree zero."""
    return a.filter(lambda k: k[1] == 0 and k[2] == 0)


def proj(a: WeylElement, which: str) -> WeylElement:
    """``pi_z`` keeps purely holomorphic symmetric/form content; ``pi_zbar`` mirrors."""
    n = a.dim
    lo = (1 << n) - 1
    if which == "z":
        return a.filter(lambda k: _sym_split(k[1], n)[1] == 0 and not (k[2] >> n))
    if which == "zbar":
        return a.filter(lambda k: _sym_split(k[1], n)[0] == 0 and not (k[2] & lo))
    raise ValueError(which)


def laplace_fib(a: WeylElement, chart) -> WeylElement:
    """``Delta_fib = g^{kl} i_s(Z_k) i_s(Zbar_l)``."""
    n = a.dim
    lt = table_of(chart).laplace_terms()
    terms: dict = {}
    for k, v in a.terms.items():
        lam, sym, mask = k
        for m, j in lt:
            d = dfact(sym, m, n)
            if d is None:
                continue
            nk = (lam, d[1], mask)
            nv = _vjet(_vscale(v, d[0]), j)
            prev = terms.get(nk)
            terms[nk] = nv if prev is None else _vadd(prev, nv)
    return a.like({k: v for k, v in terms.items() if not _vzero(v)}, a.cap - 2)


def s_kappa(a: WeylElement, kappa, chart) -> WeylElement:
    """``S^kappa = exp(lambda kappa Delta_fib)``."""
    kappa = Fraction(kappa)
    out = a
    term = a
    m = 0
    while kappa and not term.is_zero():
        m += 1
        term = laplace_fib(term, chart).times_lambda(1).scale(kappa / m)
        term = term.truncate(a.cap)
        out = out + term
    return out.truncate(a.cap) if kappa else a


# -- involution --------------------------------------------------------------

def _conj_value(v: tuple, rows: int, cols: int) -> tuple:
    """Entry-wise conjugate transpose."""
    return tuple(v[i * cols + j].conj() for j in range(cols) for i in range(rows))


def conjugate(a: WeylElement) -> WeylElement:
    """Complex conjugation (scalar values); lambda is real."""
    if a.kind != "scalar":
        raise IncompatibleKinds("conjugate() expects a scalar element; use star_involution")
    n = a.dim

    def fn(k, v):
        s, m = conj_mask(k[2], n)
        yield (k[0], conj_sym(k[1], n), m), s, (v[0].conj(),)
    return _map_terms(a, fn)


def conj_transpose(a: WeylElement) -> WeylElement:
    """Conjugate everything and transpose values (section <-> row)."""
    n = a.dim
    r, c = a.shape
    kind = {"section": "row", "row": "section"}.get(a.kind, a.kind)
    terms = {}
    for k, v in a.terms.items():
        s, m = conj_mask(k[2], n)
        terms[(k[0], conj_sym(k[1], n), m)] = _vscale(_conj_value(v, r, c), s)
    return WeylElement._raw(n, terms, kind, a.rank, a.cap)


def star_involution(a: WeylElement, h=None) -> WeylElement:
    """Super-*-involution: conjugation on forms/symmetric part, ``A* = H^-1 A^dagger H``.

    ``h`` is a fibre-metric object providing ``H`` and ``Hinv`` jet matrices
    (e.g. a :class:`~fedosov.geometry.BundleChart`) or a pair of matrices.
    """
    if a.kind == "scalar":
        return conjugate(a)
    if a.kind != "endo":
        raise IncompatibleKinds("star involution acts on scalar or endomorphism values")
    if h is None:
        raise MissingFibreMetric("endomorphism involution needs a fibre metric")
    H, Hinv = (h.H, h.Hinv) if hasattr(h, "H") else h
    r = a.rank
    flatH = tuple(x for row in H for x in row)
    flatHi = tuple(x for row in Hinv for x in row)
    ct = conj_transpose(a)
    terms = {k: vmul(vmul(flatHi, (r, r), v, (r, r)), (r, r), flatH, (r, r))
             for k, v in ct.terms.items()}
    return ct.like({k: v for k, v in terms.items() if not _vzero(v)})


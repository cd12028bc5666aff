"""Exact scalars and truncated Taylor series (jets) at a chart basepoint.

A :class:`Jet` is a polynomial in the 2n real-analytic generators
``z^1..z^n, zbar^1..zbar^n`` whose coefficients are Gaussian rationals,
together with a *trusted order*: coefficients of total degree above that
order are unknown, not zero.  Exact inputs (polynomials, constants) carry
``EXACT`` as trusted order and are never truncated.

Monomials are packed into Python ints: exponent slot ``i`` lives at bits
``8*i`` (holomorphic exponents first, then anti-holomorphic ones) and the
total degree sits above all slots, so multiplying monomials is integer
addition and the degree of a key is a single shift.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from gmpy2 import mpq

from .errors import DimensionMismatch, JetOrderExhausted, NotInvertible

EXACT = math.inf

_BITS = 8
_MASK = (1 << _BITS) - 1
_Q0 = mpq(0)
_Q1 = mpq(1)


def _to_mpq(x) -> mpq:
    if isinstance(x, str):
        return mpq(x.strip())
    return mpq(x)


class GaussianRational:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            re, im = re.re, re.im
        object.__setattr__(self, "re", _to_mpq(re))
        object.__setattr__(self, "im", _to_mpq(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, tuple):
            return cls(*x)
        return cls(x)

    @property
    def pair(self) -> tuple:
        return (self.re, self.im)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return NotImplemented
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * GaussianRational(o.re / n, -o.im / n)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}*i"

    def to_json(self) -> dict:
        return {"re": str(self.re), "im": str(self.im)}

    @classmethod
    def from_json(cls, obj) -> "GaussianRational":
        if isinstance(obj, dict):
            return cls(obj.get("re", 0), obj.get("im", 0))
        return cls(obj)


I = GaussianRational(0, 1)


# -- packed monomials -------------------------------------------------------

@lru_cache(maxsize=None)
def unpack(key: int, n: int) -> tuple:
    return tuple((key >> (_BITS * i)) & _MASK for i in range(2 * n))


@lru_cache(maxsize=None)
def _pack_cached(exps: tuple) -> int:
    key = 0
    for i, e in enumerate(exps):
        if not 0 <= e <= _MASK:
            raise ValueError(f"exponent {e} out of range")
        key |= e << (_BITS * i)
    return key | (sum(exps) << (_BITS * len(exps)))


def pack(exps) -> int:
    return _pack_cached(tuple(exps))


def key_degree(key: int, n: int) -> int:
    return key >> (_BITS * 2 * n)


@lru_cache(maxsize=None)
def _conj_key(key: int, n: int) -> int:
    e = unpack(key, n)
    return pack(e[n:] + e[:n])


@lru_cache(maxsize=None)
def _unit_key(var: int, n: int) -> int:
    e = [0] * (2 * n)
    e[var] = 1
    return pack(e)


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _pair(c) -> tuple:
    if isinstance(c, tuple):
        return (_to_mpq(c[0]), _to_mpq(c[1]))
    return GaussianRational.coerce(c).pair


class Jet:
    """Truncated Taylor series in ``z, zbar`` with Gaussian-rational coefficients.

    ``trusted_order`` is the largest total degree to which the series is
    known; ``EXACT`` (infinity) marks exact polynomials.
    """

    __slots__ = ("dim", "_c", "trusted_order")

    def __init__(self, dim: int, coeffs: Mapping | None = None, trusted_order=EXACT):
        self.dim = dim
        self.trusted_order = trusted_order
        c = {}
        if coeffs:
            for k, v in coeffs.items():
                if isinstance(k, tuple):
                    if len(k) == 2 and isinstance(k[0], tuple):
                        k = pack(tuple(k[0]) + tuple(k[1]))
                    else:
                        k = pack(k)
                if key_degree(k, dim) > trusted_order:
                    continue
                v = _pair(v)
                if v[0] or v[1]:
                    c[k] = v
        self._c = c

    @classmethod
    def _raw(cls, dim, c, trusted_order):
        j = cls.__new__(cls)
        j.dim = dim
        j._c = c
        j.trusted_order = trusted_order
        return j

    # -- constructors --------------------------------------------------------
    @classmethod
    def zero(cls, dim: int, trusted_order=EXACT) -> "Jet":
        return cls._raw(dim, {}, trusted_order)

    @classmethod
    def const(cls, dim: int, value=1, trusted_order=EXACT) -> "Jet":
        v = _pair(value)
        return cls._raw(dim, {0: v} if (v[0] or v[1]) else {}, trusted_order)

    @classmethod
    def variable(cls, dim: int, k: int, bar: bool = False, trusted_order=EXACT) -> "Jet":
        return cls._raw(dim, {_unit_key(k + (dim if bar else 0), dim): (_Q1, _Q0)},
                        trusted_order)

    @classmethod
    def monomial(cls, dim: int, alpha, beta, coeff=1, trusted_order=EXACT) -> "Jet":
        return cls(dim, {pack(tuple(alpha) + tuple(beta)): coeff}, trusted_order)

    # -- inspection ----------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.trusted_order == EXACT

    def is_zero(self) -> bool:
        return not self._c

    def is_constant(self) -> bool:
        return not self._c or (len(self._c) == 1 and 0 in self._c)

    def terms(self):
        """Yield ``(alpha, beta, GaussianRational)`` sorted by degree."""
        n = self.dim
        for k in sorted(self._c):
            e = unpack(k, n)
            yield e[:n], e[n:], GaussianRational(*self._c[k])

    def coefficient(self, alpha, beta) -> GaussianRational:
        k = pack(tuple(alpha) + tuple(beta))
        if key_degree(k, self.dim) > self.trusted_order:
            raise JetOrderExhausted(
                f"coefficient of degree {key_degree(k, self.dim)} beyond trusted order "
                f"{self.trusted_order}")
        return GaussianRational(*self._c.get(k, (_Q0, _Q0)))

    def value(self) -> GaussianRational:
        """Value at the basepoint."""
        if self.trusted_order < 0:
            raise JetOrderExhausted("jet carries no trusted coefficients")
        return GaussianRational(*self._c.get(0, (_Q0, _Q0)))

    def max_degree(self) -> int:
        return max((key_degree(k, self.dim) for k in self._c), default=-1)

    def min_degree(self) -> int:
        return min((key_degree(k, self.dim) for k in self._c), default=-1)

    # -- arithmetic ----------------------------------------------------------
    def _check(self, other: "Jet"):
        if self.dim != other.dim:
            raise DimensionMismatch(f"jet dims {self.dim} != {other.dim}")

    def truncate(self, order) -> "Jet":
        if order >= self.trusted_order:
            return self
        n = self.dim
        return Jet._raw(n, {k: v for k, v in self._c.items() if key_degree(k, n) <= order},
                        order)

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.const(self.dim, other)
        self._check(other)
        t = min(self.trusted_order, other.trusted_order)
        a = self if self.trusted_order == t else self.truncate(t)
        b = other if other.trusted_order == t else other.truncate(t)
        if len(a._c) < len(b._c):
            a, b = b, a
        c = dict(a._c)
        for k, v in b._c.items():
            w = c.get(k)
            if w is None:
                c[k] = v
            else:
                s = (w[0] + v[0], w[1] + v[1])
                if s[0] or s[1]:
                    c[k] = s
                else:
                    del c[k]
        return Jet._raw(self.dim, c, t)

    __radd__ = __add__

    def __neg__(self):
        return Jet._raw(self.dim, {k: (-v[0], -v[1]) for k, v in self._c.items()},
                        self.trusted_order)

    def __sub__(self, other):
        if not isinstance(other, Jet):
            other = Jet.const(self.dim, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Jet":
        c = _pair(c)
        if not (c[0] or c[1]):
            return Jet._raw(self.dim, {}, self.trusted_order)
        if c[1] == 0:
            r = c[0]
            if r == 1:
                return self
            return Jet._raw(self.dim, {k: (v[0] * r, v[1] * r) for k, v in self._c.items()},
                            self.trusted_order)
        return Jet._raw(self.dim, {k: _cmul(v, c) for k, v in self._c.items()},
                        self.trusted_order)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        t = min(self.trusted_order, other.trusted_order)
        a, b = self, other
        if a.is_constant() or b.is_constant():
            if b.is_constant():
                a, b = b, a
            c0 = a._c.get(0)
            if c0 is None:
                return Jet._raw(self.dim, {}, t)
            return b.scale(c0).truncate(t)
        n = self.dim
        shift = _BITS * 2 * n
        out: dict = {}
        bl = sorted(b._c.items())
        if t == EXACT:
            for ka, va in a._c.items():
                ar, ai = va
                for kb, vb in bl:
                    k = ka + kb
                    br, bi = vb
                    w = out.get(k)
                    if w is None:
                        out[k] = (ar * br - ai * bi, ar * bi + ai * br)
                    else:
                        out[k] = (w[0] + ar * br - ai * bi, w[1] + ar * bi + ai * br)
        else:
            for ka, va in a._c.items():
                room = t - (ka >> shift)
                if room < 0:
                    continue
                ar, ai = va
                for kb, vb in bl:
                    if (kb >> shift) > room:
                        break
                    k = ka + kb
                    br, bi = vb
                    w = out.get(k)
                    if w is None:
                        out[k] = (ar * br - ai * bi, ar * bi + ai * br)
                    else:
                        out[k] = (w[0] + ar * br - ai * bi, w[1] + ar * bi + ai * br)
        return Jet._raw(n, {k: v for k, v in out.items() if v[0] or v[1]}, t)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, m: int) -> "Jet":
        if m < 0:
            return self.invert() ** (-m)
        out = Jet.const(self.dim, 1, self.trusted_order)
        base = self
        while m:
            if m & 1:
                out = out * base
            m >>= 1
            if m:
                base = base * base
        return out

    def derive(self, k: int, bar: bool = False) -> "Jet":
        """Formal partial derivative along ``z^k`` (or ``zbar^k``)."""
        if self.trusted_order <= 0:
            raise JetOrderExhausted(
                f"cannot differentiate a jet with trusted order {self.trusted_order}")
        n = self.dim
        var = k + (n if bar else 0)
        unit = _unit_key(var, n)
        sh = _BITS * var
        out = {}
        for key, v in self._c.items():
            e = (key >> sh) & _MASK
            if e:
                out[key - unit] = (v[0] * e, v[1] * e) if e != 1 else v
        return Jet._raw(n, out, self.trusted_order - 1)

    def conj(self) -> "Jet":
        n = self.dim
        return Jet._raw(n, {_conj_key(k, n): (v[0], -v[1]) for k, v in self._c.items()},
                        self.trusted_order)

    def invert(self, order=None) -> "Jet":
        """Multiplicative inverse; exact non-constant input needs ``order``."""
        c0 = self._c.get(0)
        if c0 is None:
            raise NotInvertible("jet vanishes at the basepoint")
        t = self.trusted_order if order is None else min(order, self.trusted_order)
        n = self.dim
        d0 = c0[0] * c0[0] + c0[1] * c0[1]
        inv0 = (c0[0] / d0, -c0[1] / d0)
        if self.is_constant():
            return Jet._raw(n, {0: inv0}, t)
        if t == EXACT:
            raise NotInvertible("inverse of a non-constant exact jet needs a truncation order")
        by_deg: dict = {}
        for k, v in self._c.items():
            d = key_degree(k, n)
            if 0 < d <= t:
                by_deg.setdefault(d, []).append((k, v))
        res = {0: inv0}
        res_by_deg = {0: [(0, inv0)]}
        minus_inv0 = (-inv0[0], -inv0[1])
        for d in range(1, int(t) + 1):
            acc: dict = {}
            for j in range(1, d + 1):
                aj = by_deg.get(j)
                bd = res_by_deg.get(d - j)
                if not aj or not bd:
                    continue
                for ka, va in aj:
                    for kb, vb in bd:
                        k = ka + kb
                        p = _cmul(va, vb)
                        w = acc.get(k)
                        acc[k] = p if w is None else (w[0] + p[0], w[1] + p[1])
            lst = []
            for k, v in acc.items():
                val = _cmul(v, minus_inv0)
                if val[0] or val[1]:
                    res[k] = val
                    lst.append((k, val))
            res_by_deg[d] = lst
        return Jet._raw(n, res, t)

    # -- comparison ----------------------------------------------------------
    def agrees(self, other, order=None) -> bool:
        """Coefficients equal up to the common trusted order (and ``order``)."""
        if not isinstance(other, Jet):
            other = Jet.const(self.dim, other)
        return self.first_difference(other, order) is None

    def first_difference(self, other: "Jet", order=None):
        """Lowest-degree key where the jets differ within the common trusted order."""
        self._check(other)
        t = min(self.trusted_order, other.trusted_order)
        if order is not None:
            t = min(t, order)
        if t < 0:
            raise JetOrderExhausted("no common trusted order to compare")
        n = self.dim
        zero = (_Q0, _Q0)
        for k in sorted(set(self._c) | set(other._c)):
            if key_degree(k, n) > t:
                break
            if self._c.get(k, zero) != other._c.get(k, zero):
                e = unpack(k, n)
                return (e[:n], e[n:], GaussianRational(*self._c.get(k, zero)),
                        GaussianRational(*other._c.get(k, zero)))
        return None

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.dim == other.dim and self.trusted_order == other.trusted_order
                and self._c == other._c)

    __hash__ = None

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.trusted_order}, {self.to_string()})"

    def to_string(self, names=None) -> str:
        n = self.dim
        if names is None:
            if n == 1:
                names = ["z", "zbar"]
            else:
                names = [f"z{i + 1}" for i in range(n)] + [f"zbar{i + 1}" for i in range(n)]
        parts = []
        for alpha, beta, c in self.terms():
            mono = "*".join(
                (nm if e == 1 else f"{nm}^{e}") for nm, e in zip(names, alpha + beta) if e)
            cs = str(c)
            if c.im and c.re:
                cs = f"({cs})"
            parts.append(cs if not mono else (mono if cs == "1" else f"{cs}*{mono}"))
        return " + ".join(parts) if parts else "0"

    def to_records(self) -> list:
        return [{"alpha": list(a), "beta": list(b), "coeff": c.to_json()}
                for a, b, c in self.terms()]


def series_compose(coeffs: Iterable, t: Jet, order) -> Jet:
    """Evaluate ``sum_m coeffs[m] * t**m`` for ``t`` with zero constant term."""
    if t._c.get(0):
        raise ValueError("series composition needs t(0) = 0")
    t = t.truncate(order)
    out = Jet.zero(t.dim, order)
    power = Jet.const(t.dim, 1, order)
    for m, c in enumerate(coeffs):
        if m and power.is_zero():
            break
        if c:
            out = out + power.scale(c)
        power = power * t
    return out

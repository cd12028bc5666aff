"""Command line front end: ``fedosov star | verify | dump-r --spec problem.json``.

A problem file is a single JSON object (schema ``fedosov-problem/1``); see the
README for the full field list.  Exact values are written as ``"p/q"``
strings (real) or ``{"re": "p/q", "im": "p/q"}``; polynomials are lists of
``{"z": [...], "zbar": [...], "c": value}`` terms.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import FedosovError
from .fedosov import (FedosovSolution, MoritaBimodule, lambda_coefficients, omega_11,
                      required_jet_order)
from .geometry import (BundleChart, KaehlerChart, bundle_from_metric, chart_from_potential,
                       two_form)
from .scalars import EXACT, GaussianRational, Jet, unpack
from .verification import SUITES, SuiteConfig, run_suite
from .weyl import TruncationPolicy

SCHEMA = "fedosov-problem/1"
BUILTINS = ("flat", "fubini_study", "hyperbolic_disc")
KINDS = ("holomorphic", "antiholomorphic")
TASK_FIELDS = {
    "star": {"f": "poly", "g": "poly"},
    "star_prime": {"A": "matrix", "B": "matrix"},
    "right_mult": {"s": "vector", "f": "poly"},
    "left_mult": {"A": "matrix", "s": "vector"},
    "metric": {"s": "vector", "s2": "vector"},
    "morita_left": {"f": "poly", "s": "poly"},
    "morita_right": {"s": "poly", "g": "poly"},
}
_NEEDS_BUNDLE = {"star_prime", "right_mult", "left_mult", "metric"}


class SpecError(Exception):
    """Problem file rejected; ``diagnostics`` is a list of ``(field path, reason)``."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(f"{p}: {r}" for p, r in self.diagnostics))


# -- exact values -------------------------------------------------------------------------

def parse_scalar(x, path, diags):
    """Canonical form of an exact value: ``"p/q"`` or ``{"re", "im"}``."""
    try:
        if isinstance(x, bool):
            raise ValueError("booleans are not numbers")
        if isinstance(x, dict):
            extra = set(x) - {"re", "im"}
            if extra:
                raise ValueError(f"unexpected keys {sorted(extra)}")
            c = GaussianRational(_frac(x.get("re", 0)), _frac(x.get("im", 0)))
        else:
            c = GaussianRational(_frac(x))
    except (ValueError, ZeroDivisionError, TypeError) as e:
        diags.append((path, f"not an exact number ({e})"))
        return "0"
    return format_scalar(c)


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise ValueError("floats are not exact; write \"p/q\"")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise ValueError(f"unsupported value {x!r}")


def format_scalar(c: GaussianRational):
    if c.im == 0:
        return str(Fraction(int(c.re.numerator), int(c.re.denominator)))
    return {"re": str(Fraction(int(c.re.numerator), int(c.re.denominator))),
            "im": str(Fraction(int(c.im.numerator), int(c.im.denominator)))}


def scalar_value(c) -> GaussianRational:
    if isinstance(c, dict):
        return GaussianRational(Fraction(c["re"]), Fraction(c["im"]))
    return GaussianRational(Fraction(c))


def _variable_term(name: str, dim: int):
    """Shorthand monomials ``"1"``, ``"z"``, ``"zbar"``, ``"z2"``, ``"zbar1"``."""
    if name == "1":
        return [0] * dim, [0] * dim
    bar = name.startswith("zbar")
    rest = name[4:] if bar else name[1:] if name.startswith("z") else None
    if rest is None:
        raise ValueError(f"unknown monomial {name!r}")
    if rest == "":
        if dim != 1:
            raise ValueError(f"{name!r} is ambiguous for dim {dim}; use {name}1")
        k = 0
    else:
        k = int(rest) - 1
        if not 0 <= k < dim:
            raise ValueError(f"variable index out of range in {name!r}")
    e = [0] * dim
    e[k] = 1
    return ([0] * dim, e) if bar else (e, [0] * dim)


def parse_poly(x, dim, path, diags):
    """Canonical sorted term list of a polynomial in ``z_k, zbar_k``."""
    if isinstance(x, (int, str, dict)) and not (isinstance(x, dict) and "c" in x):
        if isinstance(x, str) and not _is_number(x):
            try:
                a, b = _variable_term(x, dim)
            except ValueError as e:
                diags.append((path, str(e)))
                return []
            return [{"z": a, "zbar": b, "c": "1"}]
        c = parse_scalar(x, path, diags)
        return [] if c == "0" else [{"z": [0] * dim, "zbar": [0] * dim, "c": c}]
    if isinstance(x, dict):
        x = [x]
    if not isinstance(x, list):
        diags.append((path, "expected a polynomial (list of terms)"))
        return []
    acc: dict = {}
    for i, t in enumerate(x):
        p = f"{path}[{i}]"
        if not isinstance(t, dict):
            diags.append((p, "expected a term object {z, zbar, c}"))
            continue
        extra = set(t) - {"z", "zbar", "c"}
        if extra:
            diags.append((p, f"unexpected keys {sorted(extra)}"))
        a, b = t.get("z", [0] * dim), t.get("zbar", [0] * dim)
        ok = True
        for nm, e in (("z", a), ("zbar", b)):
            if not (isinstance(e, list) and len(e) == dim
                    and all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in e)):
                diags.append((f"{p}.{nm}", f"expected {dim} nonnegative integer exponents"))
                ok = False
        c = parse_scalar(t.get("c", 1), f"{p}.c", diags)
        if not ok:
            continue
        key = (tuple(a), tuple(b))
        acc[key] = scalar_value(c) + acc.get(key, GaussianRational(0))
    return [{"z": list(a), "zbar": list(b), "c": format_scalar(c)}
            for (a, b), c in sorted(acc.items()) if c.re or c.im]


def _is_number(s: str) -> bool:
    try:
        Fraction(s.strip())
        return True
    except ValueError:
        return False


def poly_jet(terms, dim) -> Jet:
    return Jet(dim, {(tuple(t["z"]), tuple(t["zbar"])): scalar_value(t["c"]) for t in terms})


def jet_records(j: Jet) -> dict:
    rec = {"terms": [{"z": list(a), "zbar": list(b), "c": format_scalar(c)}
                     for a, b, c in j.terms()]}
    rec["trusted_order"] = "exact" if j.trusted_order == EXACT else int(j.trusted_order)
    return rec


# -- the problem spec ----------------------------------------------------------------------

@dataclass
class ProblemSpec:
    """Validated, canonical problem description (round-trips through ``to_dict``)."""

    chart: dict
    truncation: dict
    kappa: str = "1"
    omega: list = field(default_factory=list)
    bundle: dict | None = None
    tasks: list = field(default_factory=list)
    seed: int = 0
    schema: str = SCHEMA

    def to_dict(self) -> dict:
        out = {"schema": self.schema, "chart": self.chart, "truncation": self.truncation,
               "kappa": self.kappa, "omega": self.omega, "tasks": self.tasks, "seed": self.seed}
        if self.bundle is not None:
            out["bundle"] = self.bundle
        return json.loads(json.dumps(out))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    # engine objects
    @property
    def dim(self) -> int:
        return self.chart["dim"]

    def policy(self) -> TruncationPolicy:
        t = self.truncation
        return TruncationPolicy(t["lambda_order"], t["jet_order"], t.get("total_degree_cap"))

    def kappa_value(self) -> Fraction:
        return Fraction(self.kappa)

    def build_chart(self, sabotage: bool = False) -> KaehlerChart:
        pot = self.chart["potential"]
        J = self.truncation["jet_order"]
        if isinstance(pot, str):
            return chart_from_potential(pot, self.dim, J, Fraction(self.chart.get("scale", "1")),
                                        sabotage=sabotage)
        return KaehlerChart(poly_jet(pot, self.dim), "custom", sabotage, J)

    def build_omega(self):
        if not self.omega:
            return None
        n = self.dim
        out = None
        for e in self.omega:
            w = two_form(n, {(e["u"], e["v"]): poly_jet(e["coeff"], n)}, lam=e["lambda"])
            out = w if out is None else out + w
        return out

    def build_bundle(self) -> BundleChart | None:
        b = self.bundle
        if b is None:
            return None
        n, r = self.dim, b["rank"]
        J = self.truncation["jet_order"]
        trans = None
        if b.get("transition") is not None:
            trans = [[poly_jet(x, n) for x in row] for row in b["transition"]]
        H = None
        if b.get("fibre_metric") is not None:
            H = [[poly_jet(x, n) for x in row] for row in b["fibre_metric"]]
        if b.get("connection") is None:
            return bundle_from_metric(H, b["kind"], "bundle", trans, order=J)
        i = GaussianRational(0, 1)
        theta = [[[poly_jet(x, n).scale(-i) for x in row] for row in M] for M in b["connection"]]
        return BundleChart(n, r, b["kind"], theta, H, "bundle", trans)


def _int(x, path, diags, lo=None):
    if not isinstance(x, int) or isinstance(x, bool):
        diags.append((path, "expected an integer"))
        return lo or 0
    if lo is not None and x < lo:
        diags.append((path, f"must be >= {lo}"))
    return x


def _matrix(x, dim, rank, path, diags):
    if not isinstance(x, list) or len(x) != rank or any(
            not isinstance(row, list) or len(row) != rank for row in x):
        diags.append((path, f"expected a {rank}x{rank} matrix of polynomials"))
        return [[[] for _ in range(rank)] for _ in range(rank)]
    return [[parse_poly(e, dim, f"{path}[{i}][{j}]", diags) for j, e in enumerate(row)]
            for i, row in enumerate(x)]


def _vector(x, dim, rank, path, diags):
    if not isinstance(x, list) or len(x) != rank:
        diags.append((path, f"expected a list of {rank} polynomials"))
        return [[] for _ in range(rank)]
    return [parse_poly(e, dim, f"{path}[{i}]", diags) for i, e in enumerate(x)]


def spec_from_dict(obj) -> ProblemSpec:
    """Validate a decoded problem object; raises :class:`SpecError`."""
    diags: list = []
    if not isinstance(obj, dict):
        raise SpecError([("$", "expected a JSON object")])
    known = {"schema", "chart", "truncation", "kappa", "omega", "bundle", "tasks", "seed"}
    for k in sorted(set(obj) - known):
        diags.append((k, "unknown field"))
    schema = obj.get("schema", SCHEMA)
    if schema != SCHEMA:
        diags.append(("schema", f"unsupported schema {schema!r}; expected {SCHEMA!r}"))

    # chart
    ch = obj.get("chart")
    chart = {"dim": 1, "potential": "flat"}
    if not isinstance(ch, dict):
        diags.append(("chart", "required object"))
    else:
        for k in sorted(set(ch) - {"dim", "potential", "scale"}):
            diags.append((f"chart.{k}", "unknown field"))
        chart["dim"] = _int(ch.get("dim"), "chart.dim", diags, 1)
        pot = ch.get("potential")
        if isinstance(pot, str):
            if pot not in BUILTINS:
                diags.append(("chart.potential", f"unknown built-in {pot!r}; one of {BUILTINS}"))
            chart["potential"] = pot
            if "scale" in ch:
                s = parse_scalar(ch["scale"], "chart.scale", diags)
                if isinstance(s, dict):
                    diags.append(("chart.scale", "must be real"))
                chart["scale"] = s
        elif isinstance(pot, dict) and set(pot) == {"coefficients"}:
            chart["potential"] = parse_poly(pot["coefficients"], chart["dim"],
                                            "chart.potential.coefficients", diags)
        else:
            diags.append(("chart.potential", "expected a built-in name or {coefficients: [...]}"))
    n = chart["dim"] if isinstance(chart["dim"], int) and chart["dim"] >= 1 else 1

    # truncation
    tr = obj.get("truncation")
    trunc = {"lambda_order": 1, "jet_order": 4}
    if not isinstance(tr, dict):
        diags.append(("truncation", "required object"))
    else:
        for k in sorted(set(tr) - {"lambda_order", "jet_order", "total_degree_cap"}):
            diags.append((f"truncation.{k}", "unknown field"))
        trunc["lambda_order"] = _int(tr.get("lambda_order"), "truncation.lambda_order", diags, 1)
        trunc["jet_order"] = _int(tr.get("jet_order"), "truncation.jet_order", diags, 0)
        if tr.get("total_degree_cap") is not None:
            trunc["total_degree_cap"] = _int(tr["total_degree_cap"], "truncation.total_degree_cap",
                                             diags, 3)

    kappa = parse_scalar(obj.get("kappa", 1), "kappa", diags)
    if isinstance(kappa, dict):
        diags.append(("kappa", "must be real"))
        kappa = "1"

    # omega
    omega = []
    om = obj.get("omega", [])
    if not isinstance(om, list):
        diags.append(("omega", "expected a list"))
        om = []
    for i, e in enumerate(om):
        p = f"omega[{i}]"
        if not isinstance(e, dict):
            diags.append((p, "expected {lambda, u, v, coeff}"))
            continue
        for k in sorted(set(e) - {"lambda", "u", "v", "coeff"}):
            diags.append((f"{p}.{k}", "unknown field"))
        lam = _int(e.get("lambda"), f"{p}.lambda", diags, 1)
        u = _int(e.get("u"), f"{p}.u", diags, 0)
        v = _int(e.get("v"), f"{p}.v", diags, 0)
        if isinstance(u, int) and isinstance(v, int) and not (0 <= u < v < 2 * n):
            diags.append((p, f"need 0 <= u < v < {2 * n} (index v >= dim is dzbar)"))
        omega.append({"lambda": lam, "u": u, "v": v,
                      "coeff": parse_poly(e.get("coeff", 0), n, f"{p}.coeff", diags)})

    # bundle
    bundle = None
    b = obj.get("bundle")
    if b is not None:
        if not isinstance(b, dict):
            diags.append(("bundle", "expected an object"))
        else:
            for k in sorted(set(b) - {"rank", "kind", "fibre_metric", "connection", "transition"}):
                diags.append((f"bundle.{k}", "unknown field"))
            r = _int(b.get("rank"), "bundle.rank", diags, 1)
            r = r if isinstance(r, int) and r >= 1 else 1
            kind = b.get("kind", "holomorphic")
            if kind not in KINDS:
                diags.append(("bundle.kind", f"expected one of {KINDS}"))
            bundle = {"rank": r, "kind": kind}
            if b.get("fibre_metric") is not None:
                bundle["fibre_metric"] = _matrix(b["fibre_metric"], n, r, "bundle.fibre_metric",
                                                 diags)
            if b.get("connection") is not None:
                c = b["connection"]
                if not isinstance(c, list) or len(c) != 2 * n:
                    diags.append(("bundle.connection",
                                  f"expected {2 * n} matrices (dz then dzbar)"))
                else:
                    bundle["connection"] = [_matrix(M, n, r, f"bundle.connection[{v}]", diags)
                                            for v, M in enumerate(c)]
            if "fibre_metric" not in bundle and "connection" not in bundle:
                diags.append(("bundle", "needs fibre_metric or connection"))
            if b.get("transition") is not None:
                bundle["transition"] = _matrix(b["transition"], n, r, "bundle.transition", diags)

    # tasks
    tasks = []
    tl = obj.get("tasks", [])
    if not isinstance(tl, list):
        diags.append(("tasks", "expected a list"))
        tl = []
    r = bundle["rank"] if bundle else 1
    for i, t in enumerate(tl):
        p = f"tasks[{i}]"
        if not isinstance(t, dict) or t.get("op") not in TASK_FIELDS:
            diags.append((f"{p}.op", f"expected one of {sorted(TASK_FIELDS)}"))
            continue
        op = t["op"]
        if op in _NEEDS_BUNDLE and bundle is None:
            diags.append((p, f"task {op!r} needs a bundle"))
        spec = TASK_FIELDS[op]
        for k in sorted(set(t) - set(spec) - {"op"}):
            diags.append((f"{p}.{k}", "unknown field"))
        rec = {"op": op}
        for k, typ in spec.items():
            if k not in t:
                diags.append((f"{p}.{k}", "required"))
                continue
            if typ == "poly":
                rec[k] = parse_poly(t[k], n, f"{p}.{k}", diags)
            elif typ == "vector":
                rec[k] = _vector(t[k], n, r, f"{p}.{k}", diags)
            else:
                rec[k] = _matrix(t[k], n, r, f"{p}.{k}", diags)
        tasks.append(rec)

    seed = _int(obj.get("seed", 0), "seed", diags, 0)
    if diags:
        raise SpecError(diags)
    spec = ProblemSpec(chart, trunc, kappa, omega, bundle, tasks, seed)
    validate(spec)
    return spec


def validate(spec: ProblemSpec, sabotage: bool = False) -> None:
    """Module preconditions: jet depth, Omega closed and of type (1,1), Hermitian H."""
    from .fedosov import validate_omega
    from .errors import ConfigError
    diags = []
    try:
        pol = spec.policy()
    except ConfigError as e:
        raise SpecError([("truncation.total_degree_cap", str(e))])
    need = required_jet_order(pol)
    if spec.truncation["jet_order"] < need:
        raise SpecError([("truncation.jet_order",
                          f"JetOrderExhausted: jet_order {spec.truncation['jet_order']} is below "
                          f"the required minimum {need} for total degree cap {pol.T}")])
    try:
        spec.build_chart(sabotage)
    except (FedosovError, ValueError) as e:
        diags.append(("chart", f"{type(e).__name__}: {e}"))
    try:
        validate_omega(spec.build_omega(), spec.dim, spec.kappa_value())
    except FedosovError as e:
        diags.append(("omega", f"{type(e).__name__}: {e}"))
    if spec.bundle is not None:
        try:
            spec.build_bundle()
        except FedosovError as e:
            diags.append(("bundle", f"{type(e).__name__}: {e}"))
    if diags:
        raise SpecError(diags)


def parse_spec(path) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise SpecError([("$", f"cannot read {path}: {e.strerror}")])
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError([("$", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")])
    return spec_from_dict(obj)


# -- commands ---------------------------------------------------------------------------------

class Session:
    """Engine objects for one spec, built on demand."""

    def __init__(self, spec: ProblemSpec, sabotage: bool = False):
        self.spec = spec
        self.sabotage = sabotage
        self.chart = spec.build_chart(sabotage)
        self.policy = spec.policy()
        self.omega = spec.build_omega()
        self.bundle = spec.build_bundle()
        self._sol = None
        self._morita = None

    def sol(self) -> FedosovSolution:
        if self._sol is None:
            self._sol = FedosovSolution(self.chart, self.spec.kappa_value(), self.omega,
                                        self.policy, self.bundle)
        return self._sol

    def morita(self) -> MoritaBimodule:
        if self._morita is None:
            self._morita = MoritaBimodule(self.chart, self.omega, self.policy)
        return self._morita


def _series_table(a, N) -> dict:
    """``lambda^p`` coefficients; ``None`` above the cap, absent keys are exact zeros."""
    coeffs = lambda_coefficients(a)
    zero = Jet.zero(a.dim)
    out = {}
    for p in range(N + 1):
        v = coeffs.get(p)
        if 2 * p > a.cap:
            out[str(p)] = None
            continue
        if v is None:
            v = zero if a.kind == "scalar" else (zero,) * (a.rows * a.cols)
        if isinstance(v, Jet):
            out[str(p)] = jet_records(v)
        else:
            out[str(p)] = [jet_records(x) for x in v]
    return out


def run_task(session: Session, index: int, task: dict) -> dict:
    n = session.spec.dim
    P = lambda t: poly_jet(t, n)  # noqa: E731
    V = lambda v: [P(x) for x in v]  # noqa: E731
    M = lambda m: [[P(x) for x in row] for row in m]  # noqa: E731
    op = task["op"]
    if op == "star":
        res = session.sol().star(P(task["f"]), P(task["g"]))
    elif op == "star_prime":
        res = session.sol().star_prime(M(task["A"]), M(task["B"]))
    elif op == "right_mult":
        res = session.sol().right_mult(V(task["s"]), P(task["f"]))
    elif op == "left_mult":
        res = session.sol().left_mult(M(task["A"]), V(task["s"]))
    elif op == "metric":
        res = session.sol().deformed_metric(V(task["s"]), V(task["s2"]))
    elif op == "morita_left":
        res = session.morita().left(P(task["f"]), P(task["s"]))
    else:
        res = session.morita().right(P(task["s"]), P(task["g"]))
    return {"task": index, "op": op, "kind": res.kind,
            "lambda": _series_table(res, session.policy.lambda_order)}


def cmd_star(session: Session) -> list:
    return [run_task(session, i, t) for i, t in enumerate(session.spec.tasks)]


def dump_records(name: str, a) -> list:
    n = a.dim
    rows = []
    for k, v in a.terms.items():
        e = unpack(k[1], n)
        rows.append((a.key_degree(k), k, {
            "object": name, "lambda": k[0], "y": list(e[:n]), "ybar": list(e[n:]),
            "forms": [i for i in range(2 * n) if k[2] >> i & 1],
            "total_degree": a.key_degree(k), "key": a.describe_key(k),
            "entries": [jet_records(x) for x in v]}))
    rows.sort(key=lambda t: (t[0], t[1]))
    return [r for _, _, r in rows]


def cmd_dump_r(session: Session) -> list:
    sol = session.sol()
    out = dump_records("r", sol.r)
    if sol.r_prime is not None:
        out += dump_records("r_prime", sol.r_prime)
        out += dump_records("r_E", sol.r_E)
    return out


def suite_config(spec: ProblemSpec, sabotage: bool = False, seed=None) -> SuiteConfig:
    return SuiteConfig(
        chart_factory=lambda: spec.build_chart(sabotage),
        policy=spec.policy(),
        kappa=spec.kappa_value(),
        omega_factory=lambda chart: spec.build_omega(),
        bundle_factory=(lambda chart: spec.build_bundle()) if spec.bundle else None,
        seed=spec.seed if seed is None else seed,
        name="spec")


def cmd_verify(spec: ProblemSpec, suites, sabotage=False, seed=None):
    """Reports for the selected suites and the exit status (0 pass, 1 fail, 2 setup)."""
    cfg = suite_config(spec, sabotage, seed)
    reports = []
    for name in suites:
        reports += run_suite(name, cfg)
    if any(r.check_id == "setup" and not r.passed for r in reports):
        status = 2
    elif all(r.passed for r in reports):
        status = 0
    else:
        status = 1
    return reports, status


# -- entry point ------------------------------------------------------------------------------

def _emit(records, out):
    for rec in records:
        out.write(json.dumps(rec, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedosov", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("star", "verify", "dump-r"):
        s = sub.add_parser(name)
        s.add_argument("--spec", required=True, help="problem file (JSON)")
        s.add_argument("--output", default="-", help="output path, '-' for stdout")
        s.add_argument("--seed", type=int, default=None, help="override the spec seed")
        s.add_argument("--debug-sabotage-christoffel", action="store_true",
                       dest="sabotage", help=argparse.SUPPRESS)
        if name == "verify":
            s.add_argument("--suite", default=",".join(SUITES),
                           help=f"comma-separated suites from {', '.join(SUITES)}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8")
    try:
        try:
            spec = parse_spec(args.spec)
            if args.seed is not None:
                if args.seed < 0 or args.seed >= 2 ** 64:
                    raise SpecError([("--seed", "expected an unsigned 64-bit integer")])
                spec.seed = args.seed
        except SpecError as e:
            _emit([{"error": "spec", "path": p, "reason": r} for p, r in e.diagnostics],
                  sys.stderr)
            return 2
        if args.command == "verify":
            names = [s.strip() for s in args.suite.split(",") if s.strip()]
            bad = [s for s in names if s not in SUITES]
            if bad:
                _emit([{"error": "spec", "path": "--suite", "reason": f"unknown suite {s!r}"}
                       for s in bad], sys.stderr)
                return 2
            reports, status = cmd_verify(spec, names, args.sabotage)
            _emit([r.to_record() for r in reports], out)
            return status
        try:
            session = Session(spec, args.sabotage)
            records = cmd_star(session) if args.command == "star" else cmd_dump_r(session)
        except FedosovError as e:
            _emit([{"error": type(e).__name__, "reason": str(e)}], sys.stderr)
            return 2
        _emit(records, out)
        return 0
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())

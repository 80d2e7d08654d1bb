"""Command line: parse phase-space expressions, run scenario batteries.

``startrace run <scenario>`` exercises one named identity battery and
prints a deterministic report (JSON or text); ``startrace parse``
round-trips a single expression; ``startrace list-scenarios`` shows what
can run.  The process exit status is 0 exactly when every case passes.

Expression grammar, loosest to tightest binding: sums ``a + b - c``,
bidifferential pairing ``left | right``, products ``a*b`` (composition
for operators), powers ``a^k``.  Atoms are rationals ``3/4``, variables
``q1 p2``, partials ``dq1 dp2``, the squared radius ``|x|^2``, ``exp``
of a polynomial whose quadratic part is a multiple of ``|x|^2``, and
parenthesized subexpressions.  A leading minus is allowed on any term.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import re
import sys
from fractions import Fraction

import mpmath
import numpy as np

from startrace.diffop import BiDiffOp, DiffOp
from startrace.equiv import (
    Equivalence,
    density_from_equivalence,
    equiv_adjoint,
    random_equivalence,
    symplectic_automorphism_check,
    transport_euler,
    transport_star,
)
from startrace.formal import FormalScalar
from startrace.gaussfn import GaussFn, IntegralValue
from startrace.gsdecomp import (
    GridFn,
    MarginError,
    NonzeroIntegralError,
    bracket_decompose,
    bracket_residual,
    brw_residual,
    bump_generate,
    decomposition_residual,
    grid_diff,
    grid_integrate,
    grid_translate,
    gs_decompose,
    plateau_generate,
    tapered_generate,
)
from startrace.poly import PhaseSpace, Poly, mat_identity, mat_inverse, mat_mul
from startrace.star import canonical_euler, closedness_integral, moyal_construct
from startrace.trace import (
    InconsistentTracesError,
    TraceFunctional,
    default_probe_battery,
    moyal_trace,
    normalization_residual,
    proportionality_factor,
    trace_eval,
    trace_residual,
    trk_residual,
)


# -- expression parsing -----------------------------------------------


class ParseError(ValueError):
    """Bad expression text; carries the offending position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (position {position})")
        self.position = position


_TOKEN_RE = re.compile(
    r"(?P<axnorm>\|x\|\^2)"
    r"|(?P<number>\d+(?:/\d+)?)"
    r"|(?P<exp>exp\b)"
    r"|(?P<deriv>d[qp]\d+)"
    r"|(?P<var>[qp]\d+)"
    r"|(?P<op>[-+*^()|])"
    r"|(?P<ws>\s+)"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    """Recursive descent over the token list; ``|`` binds between ``+``
    and ``*`` so a pairing's sides are products, not sums."""

    def __init__(self, text, space):
        self.text = text
        self.space = space
        self.tokens = _tokenize(text)
        self.index = 0
        self.last_pos = 0

    # -- token plumbing ----------------------------------------------

    def _peek(self):
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def _take(self):
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of expression", len(self.text))
        self.index += 1
        self.last_pos = tok[2]
        return tok

    def _accept_op(self, *symbols):
        tok = self._peek()
        if tok is not None and tok[0] == "op" and tok[1] in symbols:
            self._take()
            return tok[1]
        return None

    def _expect_op(self, symbol):
        tok = self._peek()
        if tok is None or tok[0] != "op" or tok[1] != symbol:
            pos = tok[2] if tok is not None else len(self.text)
            raise ParseError(f"expected {symbol!r}", pos)
        self._take()

    def parse(self):
        value = self._sum()
        tok = self._peek()
        if tok is not None:
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return value

    # -- grammar ------------------------------------------------------

    def _sum(self):
        value = self._bidterm()
        while True:
            op = self._accept_op("+", "-")
            if op is None:
                return value
            rhs = self._bidterm()
            if op == "-":
                rhs = rhs * Fraction(-1)
            value = self._add(value, rhs)

    def _bidterm(self):
        left = self._term()
        if self._accept_op("|") is None:
            return left
        return self._pair(left, self._term())

    def _term(self):
        negate = False
        while self._accept_op("-"):
            negate = not negate
        value = self._factor()
        while self._accept_op("*"):
            value = self._mul(value, self._factor())
        return value * Fraction(-1) if negate else value

    def _factor(self):
        value = self._atom()
        if self._accept_op("^"):
            tok = self._take()
            if tok[0] != "number" or "/" in tok[1]:
                raise ParseError("exponent must be a natural number", tok[2])
            value = self._power(value, int(tok[1]))
        return value

    def _atom(self):
        kind, text, pos = self._take()
        if kind == "number":
            return Fraction(text)
        if kind == "var":
            self._check_index(text, pos)
            return Poly.variable(self.space, text)
        if kind == "deriv":
            self._check_index(text[1:], pos)
            return DiffOp.partial(self.space, text[1:])
        if kind == "axnorm":
            out = Poly.zero(self.space)
            for name in self.space.variables:
                v = Poly.variable(self.space, name)
                out = out + v * v
            return out
        if kind == "exp":
            self._expect_op("(")
            inner = self._sum()
            self._expect_op(")")
            return self._gauss(inner, pos)
        if kind == "op" and text == "(":
            inner = self._sum()
            self._expect_op(")")
            return inner
        raise ParseError(f"unexpected {text!r}", pos)

    def _check_index(self, name, pos):
        if not 1 <= int(name[1:]) <= self.space.n:
            raise ParseError(f"unknown axis {name!r} for n={self.space.n}", pos)

    # -- combination rules -------------------------------------------
    #
    # Values are Fraction, Poly, GaussFn, DiffOp, or BiDiffOp.  Scalars
    # lift to polynomials, polynomials lift to functions or to
    # multiplication operators, whichever side demands it.

    def _lift_poly(self, value):
        if isinstance(value, Fraction):
            return Poly.constant(self.space, value)
        return value

    def _as_op(self, value):
        if isinstance(value, DiffOp):
            return value
        value = self._lift_poly(value)
        if isinstance(value, Poly):
            return DiffOp.mult(value)
        raise ParseError("cannot mix operators with functions", self.last_pos)

    def _as_gauss(self, value):
        if isinstance(value, GaussFn):
            return value
        value = self._lift_poly(value)
        if isinstance(value, Poly):
            return GaussFn.from_poly(value)
        raise ParseError("cannot mix operators with functions", self.last_pos)

    def _add(self, a, b):
        if isinstance(a, Fraction) and isinstance(b, Fraction):
            return a + b
        if isinstance(a, BiDiffOp) or isinstance(b, BiDiffOp):
            if isinstance(a, BiDiffOp) and isinstance(b, BiDiffOp):
                return a + b
            raise ParseError(
                "cannot add a bidifferential pairing to anything else", self.last_pos
            )
        if isinstance(a, DiffOp) or isinstance(b, DiffOp):
            return self._as_op(a) + self._as_op(b)
        if isinstance(a, GaussFn) or isinstance(b, GaussFn):
            return self._as_gauss(a) + self._as_gauss(b)
        return self._lift_poly(a) + self._lift_poly(b)

    def _mul(self, a, b):
        if isinstance(a, Fraction) and not isinstance(b, Fraction):
            return b * a
        if isinstance(b, Fraction):
            return a * b
        if isinstance(a, BiDiffOp) or isinstance(b, BiDiffOp):
            raise ParseError(
                "bidifferential pairings only scale by rationals", self.last_pos
            )
        if isinstance(a, DiffOp) or isinstance(b, DiffOp):
            return self._as_op(a).compose(self._as_op(b))
        if isinstance(a, GaussFn) or isinstance(b, GaussFn):
            return self._as_gauss(a) * self._as_gauss(b)
        return a * b

    def _power(self, value, k):
        if isinstance(value, (Fraction, Poly)):
            return value**k
        if isinstance(value, GaussFn):
            out = GaussFn.from_poly(Poly.constant(self.space, 1))
            for _ in range(k):
                out = out * value
            return out
        if isinstance(value, DiffOp):
            out = DiffOp.identity(self.space)
            for _ in range(k):
                out = out.compose(value)
            return out
        raise ParseError("cannot raise a pairing to a power", self.last_pos)

    def _pair(self, left, right):
        left, right = self._as_op(left), self._as_op(right)
        coeffs = {}
        for alpha, pa in left.coeffs.items():
            for beta, pb in right.coeffs.items():
                key = (alpha, beta)
                term = pa * pb
                coeffs[key] = coeffs[key] + term if key in coeffs else term
        return BiDiffOp(self.space, coeffs)

    def _gauss(self, inner, pos):
        inner = self._lift_poly(inner)
        if not isinstance(inner, Poly):
            raise ParseError("exp expects a polynomial argument", pos)
        b = [Fraction(0)] * self.space.dim
        c = Fraction(0)
        squares = {}
        for exps, coeff in inner.terms.items():
            deg = sum(exps)
            if deg == 0:
                c = coeff
            elif deg == 1:
                b[exps.index(1)] = coeff
            elif deg == 2 and max(exps) == 2:
                squares[exps.index(2)] = coeff
            elif deg == 2:
                raise ParseError(
                    "exp quadratic part must be a multiple of |x|^2", pos
                )
            else:
                raise ParseError("exp argument must be at most quadratic", pos)
        t = Fraction(0)
        if squares:
            vals = set(squares.values())
            if len(squares) != self.space.dim or len(vals) != 1:
                raise ParseError(
                    "exp quadratic part must be a multiple of |x|^2", pos
                )
            t = -2 * vals.pop()
        if t < 0:
            raise ParseError("exp argument must not grow at infinity", pos)
        return GaussFn.gaussian(self.space, t, tuple(b), c)


def parse_expression(text, n=1):
    """Parse expression text over ``n`` canonical pairs.

    Returns a Fraction, Poly, GaussFn, DiffOp, or BiDiffOp; raises
    :class:`ParseError` with a position on malformed input.
    """
    return _Parser(text, PhaseSpace(n)).parse()


def _kind_name(value):
    if isinstance(value, Fraction):
        return "rational"
    if isinstance(value, Poly):
        return "polynomial"
    if isinstance(value, GaussFn):
        return "gaussian"
    if isinstance(value, DiffOp):
        return "operator"
    return "bidifferential"


# -- input files ------------------------------------------------------


def load_equivalence(path, space, trunc_order):
    """Equivalence from JSON: a list of ``{"order": k, "expression": s}``
    entries, or an object with such a list under ``"operators"``."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("operators", [])
    ops = {}
    for entry in data:
        k = int(entry["order"])
        value = parse_expression(entry["expression"], space.n)
        if isinstance(value, Fraction):
            value = Poly.constant(space, value)
        if isinstance(value, Poly):
            value = DiffOp.mult(value)
        if not isinstance(value, DiffOp):
            raise ValueError(f"order-{k} entry is not an operator expression")
        ops[k] = ops[k] + value if k in ops else value
    return Equivalence(space, trunc_order, ops)


def load_grid(path):
    """GridFn from its JSON dictionary form."""
    with open(path, "r", encoding="utf-8") as fh:
        return GridFn.from_dict(json.load(fh))


# -- reports ----------------------------------------------------------


class Case:
    """One checked identity: a residual map and a verdict."""

    __slots__ = ("case_id", "residuals", "passed", "note")

    def __init__(self, case_id, residuals, passed, note=""):
        self.case_id = case_id
        self.residuals = dict(residuals)
        self.passed = bool(passed)
        self.note = note

    def to_dict(self):
        out = {
            "id": self.case_id,
            "residuals_by_order": dict(self.residuals),
            "pass": self.passed,
        }
        if self.note:
            out["note"] = self.note
        return out


class Report:
    __slots__ = ("scenario", "params", "cases")

    def __init__(self, scenario, params, cases):
        self.scenario = scenario
        self.params = dict(params)
        self.cases = list(cases)

    def all_pass(self):
        return all(c.passed for c in self.cases)

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "params": dict(self.params),
            "cases": [c.to_dict() for c in self.cases],
            "summary": {
                "total": len(self.cases),
                "passed": sum(1 for c in self.cases if c.passed),
                "pass": self.all_pass(),
            },
        }


def emit_report(report, fmt="json"):
    """Render a report as bytes; identical runs give identical bytes."""
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
        return (text + "\n").encode("utf-8")
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"scenario: {report.scenario}"]
    for key, val in report.params.items():
        lines.append(f"  {key} = {val}")
    for case in report.cases:
        status = "pass" if case.passed else "FAIL"
        lines.append(f"[{status}] {case.case_id}")
        for key in sorted(case.residuals):
            lines.append(f"    {key}: {case.residuals[key]}")
        if case.note:
            lines.append(f"    note: {case.note}")
    passed = sum(1 for c in report.cases if c.passed)
    lines.append(f"summary: {passed}/{len(report.cases)} passed")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _series_residuals(s):
    """Exact series rendered order by order; a vanished series is ``0``."""
    if s.is_zero():
        return {"all": "0"}
    return {str(k): str(v) for k, v in sorted(s.items())}


def _num_str(x):
    if x == 0:
        return "0"
    if not isinstance(x, mpmath.mpf):
        x = mpmath.mpf(float(x))
    return mpmath.nstr(x, 8)


# -- scenarios --------------------------------------------------------


SCENARIOS = {}


def _scenario(name, summary):
    def register(fn):
        SCENARIOS[name] = (fn, summary)
        return fn

    return register


class Scenario:
    """Knobs for one named run: sizes, seed, optional input files."""

    __slots__ = ("name", "n", "trunc_order", "seed", "equiv_path", "grid_path")

    def __init__(self, name, n=1, trunc_order=4, seed=0, equiv_path=None, grid_path=None):
        if name not in SCENARIOS:
            raise ValueError(f"unknown scenario {name!r}")
        if n < 1:
            raise ValueError("need at least one canonical pair")
        if trunc_order < 1:
            raise ValueError("truncation order must be at least 1")
        self.name = name
        self.n = n
        self.trunc_order = trunc_order
        self.seed = seed
        self.equiv_path = equiv_path
        self.grid_path = grid_path


def run_scenario(sc):
    builder, _ = SCENARIOS[sc.name]
    return builder(sc)


def _base_params(sc):
    return {"n": sc.n, "order": sc.trunc_order, "seed": sc.seed}


def _random_gauss(rng, space, max_degree=3):
    """Seeded integrable probe: small polynomial times a centered width."""
    t = Fraction(rng.choice([1, 1, 2]))
    b = tuple(Fraction(rng.randint(-1, 1)) for _ in range(space.dim))
    poly = Poly.constant(space, Fraction(rng.choice([1, 2]), rng.choice([1, 2])))
    for _ in range(2):
        exps = [0] * space.dim
        for _ in range(rng.randint(0, max_degree)):
            exps[rng.randrange(space.dim)] += 1
        poly = poly + Poly.monomial(
            space, tuple(exps), Fraction(rng.choice([-2, -1, 1, 2]))
        )
    return GaussFn.term(space, poly, t, b, 0)


def _scenario_equivalence(sc, space):
    if sc.equiv_path:
        return load_equivalence(sc.equiv_path, space, sc.trunc_order)
    return random_equivalence(space, sc.trunc_order, sc.seed)


def _plane_matrix(space, a, b, c, d, plane=0):
    """Identity outside ``plane``; ``[[a, b], [c, d]]`` on its (q, p) pair."""
    m = mat_identity(space.dim)
    qi, pi = plane, space.n + plane
    m[qi][qi], m[qi][pi] = Fraction(a), Fraction(b)
    m[pi][qi], m[pi][pi] = Fraction(c), Fraction(d)
    return m


def _rational_rotation(space, plane=0):
    return _plane_matrix(
        space, Fraction(3, 5), Fraction(4, 5), Fraction(-4, 5), Fraction(3, 5), plane
    )


@_scenario("moyal-trace", "standard trace kills star commutators order by order")
def _run_moyal_trace(sc):
    space = PhaseSpace(sc.n)
    product = moyal_construct(space, sc.trunc_order)
    tau = moyal_trace(space, sc.trunc_order)
    rng = random.Random(sc.seed)
    cases = []
    for i in range(3):
        u, v = _random_gauss(rng, space), _random_gauss(rng, space)
        res = trace_residual(tau, product, u, v)
        cases.append(Case(f"gaussian-pair-{i}", _series_residuals(res), res.is_zero()))
    return Report(sc.name, _base_params(sc), cases)


@_scenario("homogeneity", "trace normalization against the canonical nu-Euler derivation")
def _run_homogeneity(sc):
    space = PhaseSpace(sc.n)
    tau = moyal_trace(space, sc.trunc_order)
    d = canonical_euler(space)
    cases = []
    for i, probe in enumerate(default_probe_battery(space)):
        res = normalization_residual(tau, d, probe)
        cases.append(Case(f"probe-{i}", _series_residuals(res), res.is_zero()))
    # worked value: the width-one Gaussian integrates to (2 pi)^n / nu^n
    val = trace_eval(tau, GaussFn.gaussian(space, 1))
    expected = FormalScalar(
        {-space.n: IntegralValue(space.n, {Fraction(0): Fraction(2) ** space.n})},
        val.trunc_order,
    )
    diff = val - expected
    cases.append(
        Case(
            "worked-width-one",
            _series_residuals(diff),
            diff.is_zero(),
            note=f"trace value {val}",
        )
    )
    deriv = val.nu_scale_derivative()
    expected_d = expected.scale(Fraction(-space.n))
    diff_d = deriv - expected_d
    cases.append(
        Case(
            "worked-width-one-nu-scaling",
            _series_residuals(diff_d),
            diff_d.is_zero(),
            note=f"nu-scaling {deriv}",
        )
    )
    return Report(sc.name, _base_params(sc), cases)


@_scenario("transport-trace", "transported product against its transported trace density")
def _run_transport_trace(sc):
    space = PhaseSpace(sc.n)
    t = _scenario_equivalence(sc, space)
    product = transport_star(t, moyal_construct(space, sc.trunc_order))
    tau = density_from_equivalence(t)
    rng = random.Random(sc.seed)
    cases = []
    for i in range(3):
        u, v = _random_gauss(rng, space), _random_gauss(rng, space)
        res = trace_residual(tau, product, u, v)
        cases.append(Case(f"gaussian-pair-{i}", _series_residuals(res), res.is_zero()))
    params = _base_params(sc)
    if sc.equiv_path:
        params["equivalence"] = sc.equiv_path
    params["density"] = str(tau.density)
    return Report(sc.name, params, cases)


@_scenario(
    "normalized-uniqueness",
    "transported Euler normalization and the rotated-density factor",
)
def _run_normalized_uniqueness(sc):
    space = PhaseSpace(sc.n)
    t = _scenario_equivalence(sc, space)
    tau = density_from_equivalence(t)
    d = transport_euler(t, canonical_euler(space))
    cases = []
    for i, probe in enumerate(default_probe_battery(space)):
        res = normalization_residual(tau, d, probe)
        cases.append(Case(f"probe-{i}", _series_residuals(res), res.is_zero()))
    # Following T with an orthogonal symplectic pullback rebuilds the
    # same product; the two densities must agree up to factor exactly 1.
    minv = mat_inverse(_rational_rotation(space))
    pulled_one = Poly.constant(space, 1).pullback_linear(minv)
    coeffs = {0: pulled_one}
    for k, op in equiv_adjoint(t).ops.items():
        val = op.apply(pulled_one)
        if not val.is_zero():
            coeffs[k] = val
    tau2 = TraceFunctional(space, FormalScalar(coeffs, sc.trunc_order), -space.n)
    factor = proportionality_factor(tau, tau2, GaussFn.gaussian(space, 1))
    diff = factor - FormalScalar.constant(Fraction(1), sc.trunc_order)
    cases.append(
        Case(
            "rotated-density-factor",
            _series_residuals(diff),
            diff.is_zero(),
            note=f"factor {factor}",
        )
    )
    params = _base_params(sc)
    if sc.equiv_path:
        params["equivalence"] = sc.equiv_path
    return Report(sc.name, params, cases)


@_scenario("proportionality", "recover a trace ratio series and flag inconsistent pairs")
def _run_proportionality(sc):
    space = PhaseSpace(sc.n)
    trunc = max(sc.trunc_order, 4)
    tau1 = moyal_trace(space, trunc)
    target = FormalScalar(
        {0: Fraction(1), 1: Fraction(3), 3: Fraction(-1, 2)}, trunc
    )
    tau2 = tau1.scale_by_series(target)
    probe = GaussFn.gaussian(space, 1)
    got = proportionality_factor(tau1, tau2, probe)
    diff = got - target
    cases = [
        Case(
            "constructed-factor",
            _series_residuals(diff),
            diff.is_zero(),
            note=f"recovered {got}",
        )
    ]
    # a density with a genuinely different shape is not proportional
    rho = FormalScalar(
        {0: Poly.constant(space, 1), 1: Poly.variable(space, "q1") ** 2}, trunc
    )
    tau3 = TraceFunctional(space, rho, -space.n)
    try:
        proportionality_factor(tau1, tau3, probe)
        fired = False
    except InconsistentTracesError:
        fired = True
    cases.append(
        Case(
            "inconsistent-pair-detected",
            {"detector": "fired" if fired else "silent"},
            fired,
        )
    )
    params = _base_params(sc)
    params["order"] = trunc
    return Report(sc.name, params, cases)


@_scenario("strongly-closed", "commutator cochains integrate to zero at every order")
def _run_strongly_closed(sc):
    space = PhaseSpace(sc.n)
    product = moyal_construct(space, sc.trunc_order)
    rng = random.Random(sc.seed)
    cases = []
    for i in range(3):
        u, v = _random_gauss(rng, space), _random_gauss(rng, space)
        residuals = {}
        ok = True
        for r in range(1, sc.trunc_order + 1):
            val = closedness_integral(product, r, u, v)
            residuals[str(r)] = str(val)
            ok = ok and val.is_zero()
        cases.append(Case(f"gaussian-pair-{i}", residuals, ok))
    return Report(sc.name, _base_params(sc), cases)


@_scenario("trk-conditions", "partial traces satisfy the order-k closedness conditions")
def _run_trk_conditions(sc):
    space = PhaseSpace(sc.n)
    # the order-k condition consumes cochains up to order k + 1
    trunc = sc.trunc_order + 1
    base = moyal_construct(space, trunc)
    t = random_equivalence(space, trunc, sc.seed)
    setups = [
        ("moyal", moyal_trace(space, trunc), base),
        ("transported", density_from_equivalence(t), transport_star(t, base)),
    ]
    rng = random.Random(sc.seed + 1)
    u, v = _random_gauss(rng, space), _random_gauss(rng, space)
    cases = []
    for label, tau, product in setups:
        residuals = {}
        ok = True
        for k in range(sc.trunc_order):
            val = trk_residual(tau, product, k, u, v)
            residuals[str(k)] = str(val)
            ok = ok and val.is_zero()
        cases.append(Case(label, residuals, ok))
    return Report(sc.name, _base_params(sc), cases)


def _gs_case(case_id, u, tol):
    try:
        parts = gs_decompose(u)
    except (MarginError, NonzeroIntegralError) as err:
        return Case(case_id, {"error": str(err)}, False)
    r = decomposition_residual(u, parts)
    return Case(case_id, {"sup": _num_str(r)}, r <= tol)


@_scenario("gs-decompose", "divergence-form decomposition of zero-integral grid data")
def _run_gs_decompose(sc):
    params = _base_params(sc)
    if sc.grid_path:
        params["grid"] = sc.grid_path
        return Report(sc.name, params, [_gs_case("input-grid", load_grid(sc.grid_path), 1e-5)])
    cases = [
        _gs_case("gentle-1d-512", grid_diff(tapered_generate(1, 3.0, 512, 2.2, 14), 0), 1e-6)
    ]
    b = bump_generate(1, 3.0, 512, 2.5, margin_cells=10)
    (g,) = gs_decompose(grid_diff(b, 0))
    known = (g - b).sup_norm()
    cases.append(Case("known-answer-1d-512", {"sup": _num_str(known)}, known <= 1e-6))
    b2 = tapered_generate(2, 3.0, 256, 2.2, 14)
    u2 = grid_diff(grid_translate(b2, (3, -2)), 0) + grid_diff(
        grid_translate(b2, (-4, 5)), 1
    )
    cases.append(_gs_case("two-dimensional-256", u2, 1e-5))
    residuals = {}
    values = []
    for points in (128, 256, 512):
        w = grid_diff(tapered_generate(1, 3.0, points, 2.2, 14), 0)
        values.append(decomposition_residual(w, gs_decompose(w)))
        residuals[str(points)] = _num_str(values[-1])
    orders = [math.log2(values[i] / values[i + 1]) for i in range(2)]
    residuals["order-128-256"] = f"{orders[0]:.2f}"
    residuals["order-256-512"] = f"{orders[1]:.2f}"
    ok = values[1] <= 1e-5 and all(o >= 3.0 for o in orders)
    cases.append(Case("convergence-battery", residuals, ok))
    return Report(sc.name, params, cases)


@_scenario("brw-bracket", "bracket-pair decomposition and the averaging functional")
def _run_brw_bracket(sc):
    params = _base_params(sc)
    cases = []
    phi = tapered_generate(2, 3.0, 256, 1.8, 14)
    if sc.grid_path:
        params["grid"] = sc.grid_path
        u0 = load_grid(sc.grid_path)
    else:
        rng = random.Random(sc.seed)
        u0 = GridFn(phi.half_widths, phi.points, np.zeros_like(phi.values), 10)
        for _ in range(3):
            shift = (rng.randint(-5, 5), rng.randint(-5, 5))
            u0 = u0 + rng.choice([-2, -1, 1, 2]) * grid_translate(phi, shift)
        u0 = u0 - (grid_integrate(u0) / grid_integrate(phi)) * phi
    try:
        pairs = bracket_decompose(u0)
        r = bracket_residual(u0, pairs)
        cases.append(
            Case(
                "bracket-reconstruction",
                {"sup": _num_str(r), "pairs": str(len(pairs))},
                r <= 1e-5,
            )
        )
    except ValueError as err:
        cases.append(Case("bracket-reconstruction", {"error": str(err)}, False))
    u = 2 * grid_translate(phi, (4, -3)) + 0.5 * grid_translate(phi, (-5, 2))
    flat = plateau_generate(2, 3.0, 256, 2.3, margin_cells=8)
    res_flat = brw_residual(u, phi, flat)
    cases.append(
        Case("constant-density", {"residual": _num_str(res_flat)}, res_flat <= 1e-8)
    )
    coords = flat.axis_coordinates(0)
    weighted = GridFn(
        flat.half_widths, flat.points, flat.values * (coords**2)[:, np.newaxis], 8
    )
    res_w = brw_residual(u, phi, weighted)
    cases.append(
        Case(
            "nonconstant-density-detected",
            {"residual": _num_str(res_w)},
            res_w >= 1e-3,
        )
    )
    return Report(sc.name, params, cases)


@_scenario("automorphism-invariance", "Gaussian integrals survive symplectic pullback")
def _run_automorphism_invariance(sc):
    space = PhaseSpace(sc.n)
    q1 = Poly.variable(space, "q1")
    poly = Poly.constant(space, 1) + q1 * q1
    b = tuple([Fraction(1)] + [Fraction(0)] * (space.dim - 1))
    u = GaussFn.term(space, poly, 1, b, 0)
    exact = [
        ("identity", mat_identity(space.dim)),
        ("quarter-turn", _plane_matrix(space, 0, 1, -1, 0)),
        ("rational-rotation", _rational_rotation(space)),
    ]
    numeric = [
        ("squeeze-2", _plane_matrix(space, 2, 0, 0, Fraction(1, 2))),
        ("shear-q", _plane_matrix(space, 1, 1, 0, 1)),
        ("shear-p", _plane_matrix(space, 1, 0, 1, 1)),
        ("squeeze-3", _plane_matrix(space, 3, 0, 0, Fraction(1, 3))),
        (
            "rotate-squeeze",
            mat_mul(_rational_rotation(space), _plane_matrix(space, 2, 0, 0, Fraction(1, 2))),
        ),
    ]
    cases = []
    for name, m in exact:
        res = symplectic_automorphism_check(m, u)
        cases.append(Case(f"orthogonal-{name}", {"residual": _num_str(res)}, res == 0))
    bound = mpmath.mpf("1e-40")
    for name, m in numeric:
        res = symplectic_automorphism_check(m, u, precision=50)
        cases.append(Case(f"symplectic-{name}", {"residual": _num_str(res)}, res <= bound))
    return Report(sc.name, _base_params(sc), cases)


# -- entry point ------------------------------------------------------


def _build_arg_parser():
    ap = argparse.ArgumentParser(
        prog="startrace",
        description="check star-product trace identities and grid decompositions",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario and print its report")
    run.add_argument("scenario", choices=list(SCENARIOS))
    run.add_argument("--n", type=int, default=1, help="number of canonical pairs")
    run.add_argument("--order", type=int, default=4, help="truncation order")
    run.add_argument("--seed", type=int, default=0, help="seed for random batteries")
    run.add_argument("--equiv", default=None, help="equivalence JSON file")
    run.add_argument("--grid", default=None, help="grid JSON file")
    run.add_argument("--format", choices=("json", "text"), default="json")
    run.add_argument("--out", default=None, help="write the report here instead of stdout")
    pp = sub.add_parser("parse", help="parse one expression and echo its canonical form")
    pp.add_argument("expression")
    pp.add_argument("--n", type=int, default=1, help="number of canonical pairs")
    sub.add_parser("list-scenarios", help="list runnable scenario names")
    return ap


def main(argv=None):
    args = _build_arg_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, (_, summary) in SCENARIOS.items():
            print(f"{name}: {summary}")
        return 0
    if args.command == "parse":
        try:
            value = parse_expression(args.expression, args.n)
        except (ParseError, ValueError) as err:
            print(f"parse error: {err}", file=sys.stderr)
            return 2
        print(f"{_kind_name(value)}: {value}")
        return 0
    sc = Scenario(
        args.scenario,
        n=args.n,
        trunc_order=args.order,
        seed=args.seed,
        equiv_path=args.equiv,
        grid_path=args.grid,
    )
    try:
        report = run_scenario(sc)
    except (OSError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    payload = emit_report(report, args.format)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload.decode("utf-8"))
    return 0 if report.all_pass() else 1


if __name__ == "__main__":
    sys.exit(main())

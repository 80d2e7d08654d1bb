"""Gaussian-polynomial integrands with exact integration over R^{2n}.

Functions here stand in for compactly supported test functions: they
are closed under products, derivatives and linear pullbacks,
they integrate to exactly representable values, and integration by parts
never produces boundary terms.  A :class:`GaussFn` is a finite sum of
terms ``P(x) * exp(-t|x|^2/2 + b.x + c)`` with rational data; linear
pullbacks that break the isotropy of the quadratic part yield a
:class:`GeneralGaussFn`, which only the arbitrary-precision backend
consumes.

Exact integrals land in :class:`IntegralValue`, the ring of values
``pi^k * sum_j r_j e^{s_j}`` with rational ``r_j, s_j``.  Its zero test
relies on ``{e^s : s rational}`` being linearly independent over the
rationals, so distinct exponentials never falsely cancel.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath

from startrace.poly import (
    Poly,
    _as_fraction,
    mat_inverse,
    mat_det,
    mat_mul,
    mat_transpose,
    mat_vec,
)


class NonIntegrableError(ValueError):
    """Raised when an integrand has no convergent Gaussian integral."""


class IntegralValue:
    """Exact value ``pi^pi_power * sum_j r_j * e^{s_j}``.

    ``terms`` maps rational exponents ``s`` to nonzero rational
    coefficients ``r``.  The zero value stores an empty map and pi power 0.
    """

    __slots__ = ("pi_power", "terms")

    def __init__(self, pi_power, terms):
        clean = {}
        for s, r in terms.items():
            s, r = _as_fraction(s), _as_fraction(r)
            if r:
                clean[s] = clean.get(s, Fraction(0)) + r
        clean = {s: r for s, r in clean.items() if r}
        if pi_power < 0:
            raise ValueError("pi_power must be nonnegative")
        self.pi_power = pi_power if clean else 0
        self.terms = clean

    @classmethod
    def zero(cls):
        return cls(0, {})

    @classmethod
    def from_rational(cls, r):
        return cls(0, {Fraction(0): _as_fraction(r)})

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        if not isinstance(other, IntegralValue):
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.pi_power != other.pi_power:
            raise ValueError(
                f"cannot add values with pi powers {self.pi_power} and {other.pi_power}"
            )
        out = dict(self.terms)
        for s, r in other.terms.items():
            out[s] = out.get(s, Fraction(0)) + r
        return IntegralValue(self.pi_power, out)

    def __neg__(self):
        return IntegralValue(self.pi_power, {s: -r for s, r in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            return IntegralValue(self.pi_power, {s: r * c for s, r in self.terms.items()})
        if not isinstance(other, IntegralValue):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return IntegralValue.zero()
        out = {}
        for s1, r1 in self.terms.items():
            for s2, r2 in other.terms.items():
                s = s1 + s2
                out[s] = out.get(s, Fraction(0)) + r1 * r2
        return IntegralValue(self.pi_power + other.pi_power, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def _single(self):
        if len(self.terms) != 1:
            raise ValueError("value is not a single exponential term")
        return next(iter(self.terms.items()))

    def invert(self):
        """Reciprocal of a single-term value with pi power zero."""
        s, r = self._single()
        if self.pi_power:
            raise ValueError("cannot invert a value carrying a pi power")
        return IntegralValue(0, {-s: Fraction(1) / r})

    def divide_by(self, other):
        """Exact ratio; the divisor must be a single term with no larger pi power."""
        if not isinstance(other, IntegralValue):
            raise TypeError("divide_by expects an IntegralValue")
        s, r = other._single()
        if self.is_zero():
            return IntegralValue.zero()
        if self.pi_power < other.pi_power:
            raise ValueError("ratio would carry a negative pi power")
        return IntegralValue(
            self.pi_power - other.pi_power,
            {s1 - s: r1 / r for s1, r1 in self.terms.items()},
        )

    def __eq__(self, other):
        if not isinstance(other, IntegralValue):
            return NotImplemented
        return self.pi_power == other.pi_power and self.terms == other.terms

    def __hash__(self):
        return hash((self.pi_power, tuple(sorted(self.terms.items()))))

    def as_mpf(self, precision=50):
        """Evaluate to an mpmath float carrying ``precision`` decimal digits."""
        with mpmath.workdps(precision + 10):
            total = mpmath.mpf(0)
            for s, r in self.terms.items():
                rs = mpmath.mpf(r.numerator) / mpmath.mpf(r.denominator)
                es = mpmath.mpf(s.numerator) / mpmath.mpf(s.denominator)
                total += rs * mpmath.e**es
            val = total * mpmath.pi**self.pi_power
            return +val

    def __float__(self):
        return float(self.as_mpf(30))

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for s, r in sorted(self.terms.items()):
            parts.append(str(r) if s == 0 else f"{r}*exp({s})")
        body = " + ".join(parts)
        if not self.pi_power:
            return body
        pi = "pi" if self.pi_power == 1 else f"pi^{self.pi_power}"
        if len(parts) == 1 and "+" not in body:
            return f"{body}*{pi}"
        return f"({body})*{pi}"

    def __repr__(self):
        return f"IntegralValue({self})"


def _as_vector(space, b):
    if b is None:
        return (Fraction(0),) * space.dim
    vec = tuple(_as_fraction(v) for v in b)
    if len(vec) != space.dim:
        raise ValueError("linear-part vector has wrong length")
    return vec


class GaussFn:
    """Finite sum of terms ``P(x) * exp(-t|x|^2/2 + b.x + c)``.

    Terms sharing an exponent ``(t, b, c)`` are merged; a term is
    integrable iff ``t > 0``.  Purely polynomial terms (``t = 0``) are
    allowed so the class absorbs products with coefficient functions.
    """

    __slots__ = ("space", "terms")

    def __init__(self, space, terms):
        clean = {}
        for (t, b, c), poly in terms.items():
            t = _as_fraction(t)
            if t < 0:
                raise ValueError("quadratic decay rate t must be nonnegative")
            key = (t, _as_vector(space, b), _as_fraction(c))
            if key in clean:
                poly = clean[key] + poly
            if poly.is_zero():
                clean.pop(key, None)
            else:
                clean[key] = poly
        self.space = space
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, space):
        return cls(space, {})

    @classmethod
    def term(cls, space, poly, t, b=None, c=0):
        return cls(space, {(t, _as_vector(space, b), c): poly})

    @classmethod
    def gaussian(cls, space, t, b=None, c=0):
        """``exp(-t|x|^2/2 + b.x + c)`` with polynomial part 1."""
        return cls.term(space, Poly.constant(space, 1), t, b, c)

    @classmethod
    def from_poly(cls, poly):
        return cls.term(poly.space, poly, 0)

    # -- inspection ---------------------------------------------------

    def is_zero(self):
        return not self.terms

    def integrable(self):
        return all(t > 0 for (t, _, _) in self.terms)

    def _check_space(self, other):
        if self.space != other.space:
            raise ValueError("operands live on different phase spaces")

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, GaussFn):
            return NotImplemented
        self._check_space(other)
        out = dict(self.terms)
        for key, poly in other.terms.items():
            out[key] = out[key] + poly if key in out else poly
        return GaussFn(self.space, out)

    def __neg__(self):
        return GaussFn(self.space, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return GaussFn.zero(self.space)
            return GaussFn(self.space, {k: p * other for k, p in self.terms.items()})
        if isinstance(other, Poly):
            return GaussFn(self.space, {k: p * other for k, p in self.terms.items()})
        if not isinstance(other, GaussFn):
            return NotImplemented
        self._check_space(other)
        out = {}
        for (t1, b1, c1), p1 in self.terms.items():
            for (t2, b2, c2), p2 in other.terms.items():
                key = (
                    t1 + t2,
                    tuple(x + y for x, y in zip(b1, b2)),
                    c1 + c2,
                )
                prod = p1 * p2
                out[key] = out[key] + prod if key in out else prod
        return GaussFn(self.space, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            return self * other
        return NotImplemented

    # -- calculus -----------------------------------------------------

    def diff(self, axis):
        """Partial derivative; the exponent contributes ``(b_a - t x_a)``."""
        if isinstance(axis, str):
            axis = self.space.axis(axis)
        out = GaussFn.zero(self.space)
        for (t, b, c), poly in self.terms.items():
            shape = poly.diff(axis)
            if t:
                shape = shape - poly * Poly.variable(
                    self.space, self.space.variables[axis]
                ) * t
            if b[axis]:
                shape = shape + poly * b[axis]
            if not shape.is_zero():
                out = out + GaussFn(self.space, {(t, b, c): shape})
        return out

    def diff_multi(self, alpha):
        out = self
        for axis, k in enumerate(alpha):
            for _ in range(k):
                out = out.diff(axis)
        return out

    def translate(self, shifts):
        """Pull back along ``x -> x + a``; the exponent re-completes exactly."""
        a = _as_vector(self.space, shifts)
        out = {}
        for (t, b, c), poly in self.terms.items():
            b2 = tuple(bi - t * ai for bi, ai in zip(b, a))
            c2 = (
                c
                + sum(bi * ai for bi, ai in zip(b, a))
                - t * sum(ai * ai for ai in a) / 2
            )
            key = (t, b2, c2)
            moved = poly.translate(a)
            out[key] = out[key] + moved if key in out else moved
        return GaussFn(self.space, out)

    def evaluate_float(self, point):
        """Pointwise value as a float (grid sampling helper)."""
        import math

        total = 0.0
        pt = [float(x) for x in point]
        for (t, b, c), poly in self.terms.items():
            expo = (
                float(c)
                + sum(float(bi) * xi for bi, xi in zip(b, pt))
                - float(t) * sum(xi * xi for xi in pt) / 2
            )
            total += float(poly.evaluate(pt)) * math.exp(expo)
        return total

    # -- comparison / rendering ---------------------------------------

    def __eq__(self, other):
        if not isinstance(other, GaussFn):
            return NotImplemented
        return self.space == other.space and self.terms == other.terms

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.terms.items(), key=lambda kv: kv[0]))))

    @staticmethod
    def _render_exponent(space, t, b, c):
        parts = []
        if t:
            parts.append((-Fraction(t, 2), "|x|^2"))
        for name, bi in zip(space.variables, b):
            if bi:
                parts.append((bi, name))
        if c:
            parts.append((c, ""))
        if not parts:
            return None
        chunks = []
        for coeff, sym in parts:
            sign = "-" if coeff < 0 else "+"
            mag = abs(coeff)
            if not sym:
                body = str(mag)
            elif mag == 1:
                body = sym
            else:
                body = f"{mag}*{sym}"
            if not chunks:
                chunks.append(body if sign == "+" else f"-{body}")
            else:
                chunks.append(f" {sign} {body}")
        return "".join(chunks)

    def __str__(self):
        if self.is_zero():
            return "0"
        rendered = []
        for (t, b, c), poly in sorted(self.terms.items(), key=lambda kv: kv[0]):
            expo = self._render_exponent(self.space, t, b, c)
            ptext = str(poly)
            if expo is None:
                rendered.append(ptext)
            elif ptext == "1":
                rendered.append(f"exp({expo})")
            else:
                body = f"({ptext})" if (" " in ptext) else ptext
                rendered.append(f"{body}*exp({expo})")
        return " + ".join(rendered)

    def __repr__(self):
        return f"GaussFn({self})"


class GeneralGaussFn:
    """Sum of terms ``P(x) * exp(x^T A x / 2 + b.x + c)`` with full symmetric A.

    Produced by linear pullbacks that break isotropy.  Only the
    arbitrary-precision backend integrates these.
    """

    __slots__ = ("space", "terms")

    def __init__(self, space, terms):
        self.space = space
        packed = []
        for poly, a, b, c in terms:
            mat = tuple(tuple(_as_fraction(v) for v in row) for row in a)
            if len(mat) != space.dim or any(len(r) != space.dim for r in mat):
                raise ValueError("quadratic form has wrong shape")
            if mat != tuple(zip(*mat)):
                raise ValueError("quadratic form must be symmetric")
            if not poly.is_zero():
                packed.append((poly, mat, _as_vector(space, b), _as_fraction(c)))
        self.terms = tuple(packed)

    def pullback_linear(self, m):
        rows = [[_as_fraction(v) for v in row] for row in m]
        mt = mat_transpose(rows)
        out = []
        for poly, a, b, c in self.terms:
            a2 = mat_mul(mt, mat_mul([list(r) for r in a], rows))
            b2 = mat_vec(mt, list(b))
            out.append((poly.pullback_linear(rows), a2, b2, c))
        return GeneralGaussFn(self.space, out)

    def __repr__(self):
        return f"GeneralGaussFn({len(self.terms)} terms, n={self.space.n})"


def gauss_diff(a, var):
    return a.diff(var)


def _double_factorial(k):
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def gauss_integrate_exact(a):
    """Exact integral of a GaussFn over R^{2n} as an :class:`IntegralValue`.

    Completes the square (shift ``b/t``, constant ``c + |b|^2/(2t)``) and
    applies the even-moment formula with isotropic covariance ``1/t``.
    """
    if not isinstance(a, GaussFn):
        raise TypeError("gauss_integrate_exact expects a GaussFn")
    n = a.space.n
    total = IntegralValue.zero()
    for (t, b, c), poly in a.terms.items():
        if t <= 0:
            raise NonIntegrableError("term with t = 0 has no convergent integral")
        mu = tuple(bi / t for bi in b)
        s = c + sum(bi * bi for bi in b) / (2 * t)
        centered = poly.translate(mu)
        acc = Fraction(0)
        for exps, r in centered.terms.items():
            if any(e % 2 for e in exps):
                continue
            m = Fraction(1)
            for e in exps:
                m *= Fraction(_double_factorial(e - 1)) / t ** (e // 2)
            acc += r * m
        if acc:
            total = total + IntegralValue(n, {s: acc * Fraction(2, 1) ** n / t**n})
    return total


@lru_cache(maxsize=None)
def _wick_moment(cov, counts):
    """E[prod_i y_i^{counts_i}] for centered Gaussian y with covariance cov."""
    first = next((i for i, k in enumerate(counts) if k), None)
    if first is None:
        return Fraction(1)
    rest = list(counts)
    rest[first] -= 1
    total = Fraction(0)
    for j, k in enumerate(rest):
        if not k or not cov[first][j]:
            continue
        sub = list(rest)
        sub[j] -= 1
        total += k * cov[first][j] * _wick_moment(cov, tuple(sub))
    return total


def _integrate_general_term(space, poly, a, b, c, precision):
    n = space.n
    neg_a = [[-v for v in row] for row in a]
    det = mat_det(neg_a)
    if det <= 0:
        raise NonIntegrableError("quadratic form is not negative definite")
    cov = mat_inverse(neg_a)
    # Leading principal minors of -A must all be positive, not just the
    # full determinant; a Cholesky attempt checks this at working precision.
    with mpmath.workdps(precision + 10):
        entries = [
            [mpmath.mpf(v.numerator) / mpmath.mpf(v.denominator) for v in row]
            for row in neg_a
        ]
        try:
            mpmath.cholesky(mpmath.matrix(entries))
        except ValueError as exc:
            raise NonIntegrableError("quadratic form is not negative definite") from exc
    mu = mat_vec(cov, list(b))
    s = c + sum(bi * mi for bi, mi in zip(b, mu)) / 2
    centered = poly.translate(mu)
    cov_key = tuple(tuple(row) for row in cov)
    moment = Fraction(0)
    for exps, r in centered.terms.items():
        if sum(exps) % 2:
            continue
        moment += r * _wick_moment(cov_key, exps)
    with mpmath.workdps(precision + 10):
        base = (2 * mpmath.pi) ** n / mpmath.sqrt(
            mpmath.mpf(det.numerator) / mpmath.mpf(det.denominator)
        )
        expo = mpmath.exp(mpmath.mpf(s.numerator) / mpmath.mpf(s.denominator))
        mom = mpmath.mpf(moment.numerator) / mpmath.mpf(moment.denominator)
        return base * expo * mom


def gauss_integrate_bigfloat(a, precision=50, general_quadratic=None):
    """Arbitrary-precision integral over R^{2n}.

    Accepts a :class:`GaussFn` (optionally with per-term quadratic-form
    overrides in ``general_quadratic``, listed in term-key order) or a
    :class:`GeneralGaussFn`.  Returns an mpmath float computed with
    ``precision`` decimal digits plus guard digits.
    """
    with mpmath.workdps(precision + 10):
        total = mpmath.mpf(0)
        if isinstance(a, GeneralGaussFn):
            if general_quadratic is not None:
                raise ValueError("GeneralGaussFn terms already carry quadratic forms")
            for poly, mat, b, c in a.terms:
                total += _integrate_general_term(a.space, poly, mat, b, c, precision)
            return +total
        if not isinstance(a, GaussFn):
            raise TypeError("gauss_integrate_bigfloat expects a Gaussian integrand")
        keys = sorted(a.terms)
        if general_quadratic is not None and len(general_quadratic) != len(keys):
            raise ValueError("need one quadratic form per term")
        for idx, key in enumerate(keys):
            t, b, c = key
            poly = a.terms[key]
            if general_quadratic is not None:
                mat = general_quadratic[idx]
            else:
                if t <= 0:
                    raise NonIntegrableError(
                        "term with t = 0 has no convergent integral"
                    )
                mat = [
                    [(-t if i == j else Fraction(0)) for j in range(a.space.dim)]
                    for i in range(a.space.dim)
                ]
            total += _integrate_general_term(a.space, poly, mat, b, c, precision)
        return +total


def gauss_pullback_linear(a, m):
    """Pull back along ``x -> m x``.

    Returns a plain :class:`GaussFn` when ``m^T m`` is a positive multiple
    of the identity (every isotropic exponent stays isotropic); otherwise
    a :class:`GeneralGaussFn` for the bigfloat backend.
    """
    rows = [[_as_fraction(v) for v in row] for row in m]
    if mat_det(rows) == 0:
        raise ValueError("pullback matrix is singular")
    mt = mat_transpose(rows)
    gram = mat_mul(mt, rows)
    d = a.space.dim
    lam = gram[0][0]
    isotropic = all(
        gram[i][j] == (lam if i == j else 0) for i in range(d) for j in range(d)
    )
    if isotropic:
        out = {}
        for (t, b, c), poly in a.terms.items():
            key = (t * lam, tuple(mat_vec(mt, list(b))), c)
            moved = poly.pullback_linear(rows)
            out[key] = out[key] + moved if key in out else moved
        return GaussFn(a.space, out)
    terms = []
    for (t, b, c), poly in a.terms.items():
        mat = [[-t * v for v in row] for row in gram]
        terms.append((poly.pullback_linear(rows), mat, mat_vec(mt, list(b)), c))
    return GeneralGaussFn(a.space, terms)

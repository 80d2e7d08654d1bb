"""Exact polynomial coefficient functions on flat phase space.

Coordinates on R^{2n} are ordered ``q1..qn, p1..pn`` and coefficients are
``fractions.Fraction``, so every operation here is exact.  The Poisson
bracket follows the convention

    {f, g} = sum_i  df/dp_i dg/dq_i - df/dq_i dg/dp_i

which makes ``{v, q_i} = dv/dp_i`` hold literally and gives ``{q, p} = -1``.
"""

from __future__ import annotations

from fractions import Fraction


class PhaseSpace:
    """Flat symplectic R^{2n} with named canonical coordinates."""

    __slots__ = ("n", "dim", "variables")

    def __init__(self, n):
        if n < 1:
            raise ValueError("need at least one canonical pair")
        self.n = n
        self.dim = 2 * n
        self.variables = tuple(f"q{i+1}" for i in range(n)) + tuple(
            f"p{i+1}" for i in range(n)
        )

    def axis(self, name):
        try:
            return self.variables.index(name)
        except ValueError:
            raise KeyError(f"unknown coordinate {name!r}") from None

    def __eq__(self, other):
        return isinstance(other, PhaseSpace) and other.n == self.n

    def __hash__(self):
        return hash(("PhaseSpace", self.n))

    def __repr__(self):
        return f"PhaseSpace(n={self.n})"


def _as_fraction(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"polynomial coefficients must be rational, got {type(c).__name__}")


class Poly:
    """Polynomial in the phase-space coordinates with rational coefficients.

    ``terms`` maps exponent tuples (length ``2n``, axis order ``q1..qn p1..pn``)
    to nonzero Fractions.
    """

    __slots__ = ("space", "terms")

    def __init__(self, space, terms):
        clean = {}
        for exps, c in terms.items():
            c = _as_fraction(c)
            if c:
                if len(exps) != space.dim or any(e < 0 for e in exps):
                    raise ValueError(f"bad exponent tuple {exps!r}")
                clean[tuple(exps)] = c
        self.space = space
        self.terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, space):
        return cls(space, {})

    @classmethod
    def constant(cls, space, c):
        return cls(space, {(0,) * space.dim: _as_fraction(c)})

    @classmethod
    def variable(cls, space, name):
        exps = [0] * space.dim
        exps[space.axis(name)] = 1
        return cls(space, {tuple(exps): Fraction(1)})

    @classmethod
    def monomial(cls, space, exps, c=Fraction(1)):
        return cls(space, {tuple(exps): _as_fraction(c)})

    # -- inspection ---------------------------------------------------

    def is_zero(self):
        return not self.terms

    def degree(self):
        """Total degree, or -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def constant_term(self):
        return self.terms.get((0,) * self.space.dim, Fraction(0))

    def _check_space(self, other):
        if self.space != other.space:
            raise ValueError("polynomials live on different phase spaces")

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_space(other)
        out = dict(self.terms)
        for exps, c in other.terms.items():
            out[exps] = out.get(exps, Fraction(0)) + c
        return Poly(self.space, out)

    def __neg__(self):
        return Poly(self.space, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            return Poly(self.space, {e: v * c for e, v in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_space(other)
        out = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                out[key] = out.get(key, Fraction(0)) + ca * cb
        return Poly(self.space, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.constant(self.space, 1)
        for _ in range(k):
            out = out * self
        return out

    # -- calculus -----------------------------------------------------

    def diff(self, axis):
        """Partial derivative along an axis index or coordinate name."""
        if isinstance(axis, str):
            axis = self.space.axis(axis)
        out = {}
        for exps, c in self.terms.items():
            e = exps[axis]
            if e:
                key = exps[:axis] + (e - 1,) + exps[axis + 1 :]
                out[key] = out.get(key, Fraction(0)) + c * e
        return Poly(self.space, out)

    def diff_multi(self, alpha):
        out = self
        for axis, k in enumerate(alpha):
            for _ in range(k):
                out = out.diff(axis)
        return out

    def evaluate(self, point):
        """Evaluate at a point; exact for rational input, duck-typed otherwise."""
        total = None
        for exps, c in self.terms.items():
            val = c
            for x, e in zip(point, exps):
                if e:
                    val = val * x**e
            total = val if total is None else total + val
        return Fraction(0) if total is None else total

    def translate(self, shifts):
        """Pull back along ``x -> x + a``: returns ``f(x + a)``."""
        out = Poly.zero(self.space)
        subs = [
            Poly.variable(self.space, name) + Poly.constant(self.space, _as_fraction(a))
            for name, a in zip(self.space.variables, shifts)
        ]
        for exps, c in self.terms.items():
            term = Poly.constant(self.space, c)
            for sub, e in zip(subs, exps):
                if e:
                    term = term * sub**e
            out = out + term
        return out

    def pullback_linear(self, matrix):
        """Pull back along ``x -> M x``: returns ``f(M x)``."""
        rows = [[_as_fraction(v) for v in row] for row in matrix]
        if len(rows) != self.space.dim or any(len(r) != self.space.dim for r in rows):
            raise ValueError("matrix shape must match the phase-space dimension")
        subs = []
        for j in range(self.space.dim):
            acc = Poly.zero(self.space)
            for k, name in enumerate(self.space.variables):
                if rows[j][k]:
                    acc = acc + Poly.variable(self.space, name) * rows[j][k]
            subs.append(acc)
        out = Poly.zero(self.space)
        for exps, c in self.terms.items():
            term = Poly.constant(self.space, c)
            for sub, e in zip(subs, exps):
                if e:
                    term = term * sub**e
            out = out + term
        return out

    # -- comparison / rendering ---------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.space == other.space and self.terms == other.terms

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.terms.items()))))

    def _sorted_terms(self):
        return sorted(
            self.terms.items(),
            key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])),
        )

    def _render_monomial(self, exps):
        parts = []
        for name, e in zip(self.space.variables, exps):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exps, c in self._sorted_terms():
            sign = "-" if c < 0 else "+"
            mono = self._render_monomial(exps)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if not parts:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __repr__(self):
        return f"Poly({self})"


def poisson_bracket(f, g):
    """{f, g} with the sign convention fixed in the module docstring."""
    if not isinstance(f, Poly) or not isinstance(g, Poly):
        raise TypeError("poisson_bracket expects two Poly operands")
    f._check_space(g)
    n = f.space.n
    out = Poly.zero(f.space)
    for i in range(n):
        qi, pi = i, n + i
        out = out + f.diff(pi) * g.diff(qi) - f.diff(qi) * g.diff(pi)
    return out


# -- exact dense matrices over Fraction --------------------------------

def mat_identity(d):
    return [
        [Fraction(1) if i == j else Fraction(0) for j in range(d)] for i in range(d)
    ]


def mat_transpose(m):
    return [list(col) for col in zip(*m)]


def mat_mul(a, b):
    bt = mat_transpose(b)
    return [
        [sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt]
        for row in a
    ]


def mat_vec(m, v):
    return [sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in m]


def mat_scale(m, c):
    return [[v * c for v in row] for row in m]


def mat_det(m):
    """Exact determinant by fraction-free Gaussian elimination."""
    a = [[_as_fraction(v) for v in row] for row in m]
    d = len(a)
    det = Fraction(1)
    for col in range(d):
        pivot = next((r for r in range(col, d) if a[r][col]), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        inv = Fraction(1) / a[col][col]
        for r in range(col + 1, d):
            if a[r][col]:
                factor = a[r][col] * inv
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return det


def mat_inverse(m):
    """Exact inverse by Gauss-Jordan elimination; raises on singular input."""
    d = len(m)
    a = [[_as_fraction(v) for v in row] + ident for row, ident in zip(m, mat_identity(d))]
    for col in range(d):
        pivot = next((r for r in range(col, d) if a[r][col]), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        a[col], a[pivot] = a[pivot], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(d):
            if r != col and a[r][col]:
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [row[d:] for row in a]

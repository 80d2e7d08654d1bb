"""Differential and bidifferential operators with polynomial coefficients.

Operators are kept in normal form with every derivative to the right of
its coefficient, so equality is a dictionary comparison.  Composition and
adjoints are single Leibniz passes; all arithmetic is exact.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from startrace.poly import Poly, _as_fraction


def _zero_alpha(space):
    return (0,) * space.dim


def _check_alpha(space, alpha):
    if len(alpha) != space.dim or any(a < 0 for a in alpha):
        raise ValueError(f"bad derivative multi-index {alpha!r}")
    return tuple(alpha)


def _leq(gamma, alpha):
    return all(g <= a for g, a in zip(gamma, alpha))


def _sub(alpha, gamma):
    return tuple(a - g for a, g in zip(alpha, gamma))


def _add(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def _binom(alpha, gamma):
    out = 1
    for a, g in zip(alpha, gamma):
        out *= comb(a, g)
    return out


def _sub_indices(alpha):
    """All gamma with 0 <= gamma <= alpha componentwise."""
    out = [()]
    for a in alpha:
        out = [g + (i,) for g in out for i in range(a + 1)]
    return out


class DiffOp:
    """``sum_alpha a_alpha(x) d^alpha`` acting on Poly or GaussFn inputs."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        clean = {}
        for alpha, poly in coeffs.items():
            alpha = _check_alpha(space, alpha)
            if alpha in clean:
                poly = clean[alpha] + poly
            if poly.is_zero():
                clean.pop(alpha, None)
            else:
                clean[alpha] = poly
        self.space = space
        self.coeffs = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, space):
        return cls(space, {})

    @classmethod
    def identity(cls, space):
        return cls(space, {_zero_alpha(space): Poly.constant(space, 1)})

    @classmethod
    def partial(cls, space, axis, k=1):
        if isinstance(axis, str):
            axis = space.axis(axis)
        alpha = [0] * space.dim
        alpha[axis] = k
        return cls(space, {tuple(alpha): Poly.constant(space, 1)})

    @classmethod
    def mult(cls, poly):
        """Multiplication operator ``f -> poly * f``."""
        return cls(poly.space, {_zero_alpha(poly.space): poly})

    # -- inspection ---------------------------------------------------

    def is_zero(self):
        return not self.coeffs

    def order(self):
        return max((sum(a) for a in self.coeffs), default=-1)

    def _check_space(self, other):
        if self.space != other.space:
            raise ValueError("operators live on different phase spaces")

    # -- linear structure ---------------------------------------------

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        self._check_space(other)
        out = dict(self.coeffs)
        for alpha, poly in other.coeffs.items():
            out[alpha] = out[alpha] + poly if alpha in out else poly
        return DiffOp(self.space, out)

    def __neg__(self):
        return DiffOp(self.space, {a: -p for a, p in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            return DiffOp(self.space, {a: p * c for a, p in self.coeffs.items()})
        return NotImplemented

    __rmul__ = __mul__

    # -- action -------------------------------------------------------

    def apply(self, f):
        out = None
        for alpha, poly in self.coeffs.items():
            term = poly * f.diff_multi(alpha)
            out = term if out is None else out + term
        if out is not None:
            return out
        if isinstance(f, Poly):
            return Poly.zero(self.space)
        return type(f).zero(self.space)

    def compose(self, other):
        """Normal form of ``self o other`` via the generalized Leibniz rule.

        ``d^alpha o b = sum_{gamma <= alpha} binom(alpha, gamma)
        (d^{alpha-gamma} b) d^gamma``.
        """
        if not isinstance(other, DiffOp):
            raise TypeError("compose expects a DiffOp")
        self._check_space(other)
        out = {}
        for alpha, a in self.coeffs.items():
            for beta, b in other.coeffs.items():
                for gamma in _sub_indices(alpha):
                    db = b.diff_multi(_sub(alpha, gamma))
                    if db.is_zero():
                        continue
                    key = _add(gamma, beta)
                    term = a * db * _binom(alpha, gamma)
                    out[key] = out[key] + term if key in out else term
        return DiffOp(self.space, out)

    def adjoint(self):
        """Formal adjoint: ``(a d^alpha)* = (-1)^{|alpha|} d^alpha o a``."""
        out = DiffOp.zero(self.space)
        for alpha, a in self.coeffs.items():
            sign = -1 if sum(alpha) % 2 else 1
            part = DiffOp(self.space, {alpha: Poly.constant(self.space, sign)})
            out = out + part.compose(DiffOp.mult(a))
        return out

    # -- comparison / rendering ---------------------------------------

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.space == other.space and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.coeffs.items()))))

    def _render_alpha(self, alpha):
        parts = []
        for name, k in zip(self.space.variables, alpha):
            if k == 1:
                parts.append(f"d{name}")
            elif k > 1:
                parts.append(f"d{name}^{k}")
        return "*".join(parts)

    def __str__(self):
        if self.is_zero():
            return "0"
        chunks = []
        for alpha in sorted(self.coeffs, key=lambda a: (sum(a), a)):
            poly = self.coeffs[alpha]
            deriv = self._render_alpha(alpha)
            ptext = str(poly)
            if not deriv:
                chunks.append(ptext)
            elif ptext == "1":
                chunks.append(deriv)
            else:
                body = f"({ptext})" if " " in ptext else ptext
                chunks.append(f"{body}*{deriv}")
        return " + ".join(chunks)

    def __repr__(self):
        return f"DiffOp({self})"


def _three_way_splits(delta):
    """Yield ``(d1, d2, d3, multinomial)`` with ``d1+d2+d3 = delta``."""
    splits = [((), (), (), 1)]
    for k in delta:
        nxt = []
        for d1, d2, d3, m in splits:
            for i in range(k + 1):
                for j in range(k - i + 1):
                    nxt.append(
                        (
                            d1 + (i,),
                            d2 + (j,),
                            d3 + (k - i - j,),
                            m * comb(k, i) * comb(k - i, j),
                        )
                    )
        splits = nxt
    return splits


class BiDiffOp:
    """``sum a_{alpha,beta}(x) (d^alpha tensor d^beta)`` on pairs of inputs."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        clean = {}
        for (alpha, beta), poly in coeffs.items():
            key = (_check_alpha(space, alpha), _check_alpha(space, beta))
            if key in clean:
                poly = clean[key] + poly
            if poly.is_zero():
                clean.pop(key, None)
            else:
                clean[key] = poly
        self.space = space
        self.coeffs = clean

    @classmethod
    def zero(cls, space):
        return cls(space, {})

    @classmethod
    def product_cochain(cls, space):
        """C_0: the pointwise product ``(u, v) -> u v``."""
        z = _zero_alpha(space)
        return cls(space, {(z, z): Poly.constant(space, 1)})

    def is_zero(self):
        return not self.coeffs

    def _check_space(self, other):
        if self.space != other.space:
            raise ValueError("operators live on different phase spaces")

    def __add__(self, other):
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        self._check_space(other)
        out = dict(self.coeffs)
        for key, poly in other.coeffs.items():
            out[key] = out[key] + poly if key in out else poly
        return BiDiffOp(self.space, out)

    def __neg__(self):
        return BiDiffOp(self.space, {k: -p for k, p in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_fraction(other)
            return BiDiffOp(self.space, {k: p * c for k, p in self.coeffs.items()})
        return NotImplemented

    __rmul__ = __mul__

    def apply(self, u, v):
        out = None
        for (alpha, beta), poly in self.coeffs.items():
            term = poly * (u.diff_multi(alpha) * v.diff_multi(beta))
            out = term if out is None else out + term
        if out is not None:
            return out
        if isinstance(u, Poly):
            return Poly.zero(self.space)
        return type(u).zero(self.space)

    def antisym(self):
        """``B^-(u,v) = B(u,v) - B(v,u)`` as a slot swap in normal form."""
        out = dict(self.coeffs)
        for (alpha, beta), poly in self.coeffs.items():
            key = (beta, alpha)
            out[key] = out.get(key, Poly.zero(self.space)) - poly
        return BiDiffOp(self.space, out)

    def conjugate(self, s_out, s_left, s_right):
        """Normal form of ``(u,v) -> S_out(B(S_left u, S_right v))``."""
        for s in (s_out, s_left, s_right):
            if not isinstance(s, DiffOp):
                raise TypeError("conjugate expects DiffOp transports")
            self._check_space(s)
        inner = {}
        for (alpha, beta), c in self.coeffs.items():
            left = DiffOp(self.space, {alpha: Poly.constant(self.space, 1)}).compose(
                s_left
            )
            right = DiffOp(self.space, {beta: Poly.constant(self.space, 1)}).compose(
                s_right
            )
            for gamma, dl in left.coeffs.items():
                for eps, dr in right.coeffs.items():
                    key = (gamma, eps)
                    term = c * dl * dr
                    inner[key] = inner[key] + term if key in inner else term
        out = {}
        for delta, s in s_out.coeffs.items():
            for (gamma, eps), c in inner.items():
                for d1, d2, d3, mult in _three_way_splits(delta):
                    dc = c.diff_multi(d1)
                    if dc.is_zero():
                        continue
                    key = (_add(gamma, d2), _add(eps, d3))
                    term = s * dc * mult
                    out[key] = out[key] + term if key in out else term
        return BiDiffOp(self.space, out)

    def __eq__(self, other):
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        return self.space == other.space and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.coeffs.items()))))

    def __str__(self):
        if self.is_zero():
            return "0"
        helper = DiffOp.zero(self.space)
        chunks = []
        for alpha, beta in sorted(self.coeffs, key=lambda k: (sum(k[0]) + sum(k[1]), k)):
            poly = self.coeffs[(alpha, beta)]
            lhs = helper._render_alpha(alpha) or "1"
            rhs = helper._render_alpha(beta) or "1"
            ptext = str(poly)
            body = f"({ptext})" if " " in ptext else ptext
            prefix = "" if ptext == "1" else f"{body}*"
            chunks.append(f"{prefix}({lhs} | {rhs})")
        return " + ".join(chunks)

    def __repr__(self):
        return f"BiDiffOp({self})"


def op_apply(a, f):
    return a.apply(f)


def op_compose(a, b):
    return a.compose(b)


def op_adjoint(a):
    return a.adjoint()


def bidiff_apply(b, u, v):
    return b.apply(u, v)


def bidiff_antisym(b):
    return b.antisym()


def bidiff_conjugate(s_out, b, s_left, s_right):
    return b.conjugate(s_out, s_left, s_right)

"""Truncated Laurent series in the formal deformation parameter ``nu``.

A :class:`FormalScalar` stores finitely many coefficients ``c_k`` for
``nu^k`` with ``min_degree <= k <= trunc_order``.  Coefficients live in a
pluggable exact ring: ``fractions.Fraction``, :class:`~startrace.gaussfn.IntegralValue`,
:class:`~startrace.poly.Poly` or :class:`~startrace.gaussfn.GaussFn` all work,
because the series layer only needs ``+``, ``*``, ``==`` and an exact zero
test.  Every arithmetic result is truncated; the truncation window of a
product is chosen so that every stored coefficient is exact.
"""

from __future__ import annotations

from fractions import Fraction

#: Hard floor on negative powers: ``min_degree >= -(trunc_order + margin)``.
#: Trace functionals contribute a single ``nu^-n`` prefactor, so at desk
#: scale the honest margin is the half-dimension n; 8 leaves plenty of room.
LAURENT_FLOOR_MARGIN = 8


def _is_zero(c):
    probe = getattr(c, "is_zero", None)
    if callable(probe):
        return probe()
    return c == 0


def _coeff_invert(c):
    probe = getattr(c, "invert", None)
    if callable(probe):
        return probe()
    return Fraction(1) / c


def _coeff_div(a, b):
    probe = getattr(a, "divide_by", None)
    if callable(probe):
        return probe(b)
    return a / b


class FormalScalar:
    """Laurent polynomial in ``nu``, exact up to ``trunc_order``.

    The coefficient mapping never stores zeros, so ``min_degree`` is the
    lowest genuinely nonzero power (``None`` for the zero series).
    """

    __slots__ = ("coeffs", "trunc_order")

    def __init__(self, coeffs, trunc_order):
        clean = {}
        for k, c in coeffs.items():
            if isinstance(c, int):
                c = Fraction(c)
            if k <= trunc_order and not _is_zero(c):
                clean[k] = c
        if clean:
            lowest = min(clean)
            floor = -(max(trunc_order, 0) + LAURENT_FLOOR_MARGIN)
            if lowest < floor:
                raise ValueError(f"nu-degree {lowest} below Laurent floor {floor}")
        self.coeffs = clean
        self.trunc_order = trunc_order

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, trunc_order):
        return cls({}, trunc_order)

    @classmethod
    def constant(cls, c, trunc_order):
        return cls({0: c}, trunc_order)

    @classmethod
    def monomial(cls, degree, c, trunc_order):
        return cls({degree: c}, trunc_order)

    # -- inspection ---------------------------------------------------

    def is_zero(self):
        return not self.coeffs

    @property
    def min_degree(self):
        return min(self.coeffs) if self.coeffs else None

    def get(self, degree):
        """Stored coefficient at ``degree`` or ``None``."""
        return self.coeffs.get(degree)

    def items(self):
        return sorted(self.coeffs.items())

    def _ring_witness(self):
        for c in self.coeffs.values():
            return c
        return None

    def _check_ring(self, other):
        a, b = self._ring_witness(), other._ring_witness()
        if a is not None and b is not None and type(a) is not type(b):
            raise ValueError(
                f"mismatched coefficient rings: {type(a).__name__} vs {type(b).__name__}"
            )

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        if not isinstance(other, FormalScalar):
            return NotImplemented
        self._check_ring(other)
        trunc = min(self.trunc_order, other.trunc_order)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return FormalScalar(out, trunc)

    def __neg__(self):
        return FormalScalar({k: -c for k, c in self.coeffs.items()}, self.trunc_order)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, FormalScalar):
            return NotImplemented
        self._check_ring(other)
        if self.is_zero() or other.is_zero():
            return FormalScalar.zero(min(self.trunc_order, other.trunc_order))
        # Degrees above K1+min2 (resp. K2+min1) would need coefficients the
        # operands no longer store, so the product window shrinks to match.
        trunc = min(
            self.trunc_order + other.min_degree,
            other.trunc_order + self.min_degree,
        )
        out = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                k = i + j
                if k > trunc:
                    continue
                prod = a * b
                out[k] = out[k] + prod if k in out else prod
        return FormalScalar(out, trunc)

    def scale(self, c):
        """Multiply every coefficient by a ring element or rational ``c``."""
        if isinstance(c, int):
            c = Fraction(c)
        return FormalScalar({k: v * c for k, v in self.coeffs.items()}, self.trunc_order)

    def shift(self, m):
        """Multiply by ``nu^m``; the truncation window shifts along."""
        return FormalScalar(
            {k + m: c for k, c in self.coeffs.items()}, self.trunc_order + m
        )

    def truncate(self, trunc_order):
        return FormalScalar(
            {k: c for k, c in self.coeffs.items() if k <= trunc_order}, trunc_order
        )

    # -- division -----------------------------------------------------

    def invert(self):
        """Multiplicative inverse, solved order by order.

        Requires an invertible lowest coefficient.  The result window is
        ``[-m, K - 2m]`` for input window ``[m, K]``: beyond that the
        product against the input would involve dropped coefficients.
        """
        if self.is_zero():
            raise ZeroDivisionError("cannot invert the zero series")
        m = self.min_degree
        span = self.trunc_order - m  # relative orders 0..span are known
        lead = self.coeffs[m]
        lead_inv = _coeff_invert(lead)
        rel = {0: lead_inv}
        for j in range(1, span + 1):
            acc = None
            for i in range(1, j + 1):
                a = self.coeffs.get(m + i)
                prev = rel.get(j - i)
                if a is None or prev is None:
                    continue
                term = a * prev
                acc = term if acc is None else acc + term
            if acc is None:
                continue
            rel[j] = -(_coeff_div(acc, lead))
        return FormalScalar(
            {-m + j: c for j, c in rel.items() if not _is_zero(c)},
            self.trunc_order - 2 * m,
        )

    def divide(self, other):
        """Solve ``c * other == self`` for ``c`` order by order.

        Long division only ever divides ring elements by the leading
        coefficient of ``other``, so it works in rings where general
        inversion is unavailable (values carrying a fixed pi power, say).
        """
        if not isinstance(other, FormalScalar):
            raise TypeError("divide expects a FormalScalar divisor")
        self._check_ring(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero series")
        mb = other.min_degree
        if self.is_zero():
            return FormalScalar.zero(self.trunc_order - mb)
        ma = self.min_degree
        span = min(self.trunc_order - ma, other.trunc_order - mb)
        lead = other.coeffs[mb]
        rel = {}
        for j in range(span + 1):
            acc = self.coeffs.get(ma + j)
            for i in range(1, j + 1):
                b = other.coeffs.get(mb + i)
                prev = rel.get(j - i)
                if b is None or prev is None:
                    continue
                term = b * prev
                acc = -term if acc is None else acc - term
            if acc is None or _is_zero(acc):
                continue
            rel[j] = _coeff_div(acc, lead)
        return FormalScalar(
            {ma - mb + j: c for j, c in rel.items()}, ma - mb + span
        )

    # -- derivations --------------------------------------------------

    def nu_scale_derivative(self):
        """Apply ``nu * d/d nu``: the coefficient at degree k picks up a factor k."""
        return FormalScalar(
            {k: c * k for k, c in self.coeffs.items()}, self.trunc_order
        )

    # -- comparison / rendering ---------------------------------------

    def __eq__(self, other):
        if not isinstance(other, FormalScalar):
            return NotImplemented
        if not self.coeffs and not other.coeffs:
            return True
        return self.trunc_order == other.trunc_order and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.trunc_order, tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0]))))

    @staticmethod
    def _render_term(k, c):
        if isinstance(c, Fraction):
            body = None if (c == 1 and k != 0) else str(c)
        else:
            text = str(c)
            body = f"({text})" if (" " in text or "+" in text) else text
        if k == 0:
            return body
        power = "nu" if k == 1 else f"nu^{k}"
        return power if body is None else f"{body}*{power}"

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        for k, c in self.items():
            sign = "+"
            if isinstance(c, Fraction) and c < 0:
                sign, c = "-", -c
            term = self._render_term(k, c)
            if not parts:
                parts.append(term if sign == "+" else f"-{term}")
            else:
                parts.append(f" {sign} {term}")
        return "".join(parts)

    def __repr__(self):
        return f"FormalScalar({self}, K={self.trunc_order})"

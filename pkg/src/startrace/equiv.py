"""Equivalence operators ``T = Id + sum_k nu^k T_k`` and what they carry.

Transport of star products, formal adjoints, trace densities
``rho = T'(1)``, transported nu-Euler derivations, and linear symplectic
automorphism checks all live here.  Operator series are composed order by
order, so every transported identity holds exactly through the truncation
order.
"""

from __future__ import annotations

import random
from fractions import Fraction

import mpmath

from startrace.diffop import DiffOp
from startrace.formal import FormalScalar
from startrace.gaussfn import (
    GaussFn,
    gauss_integrate_bigfloat,
    gauss_integrate_exact,
    gauss_pullback_linear,
)
from startrace.poly import Poly, _as_fraction, mat_mul, mat_transpose
from startrace.star import EulerDerivation, StarProduct
from startrace.trace import TraceFunctional


class Equivalence:
    """Formal series ``Id + sum_{k>=1} nu^k T_k`` of differential operators."""

    __slots__ = ("space", "trunc_order", "ops")

    def __init__(self, space, trunc_order, ops):
        if trunc_order < 1:
            raise ValueError("truncation order must be at least 1")
        clean = {}
        for k, op in ops.items():
            if not 1 <= k <= trunc_order:
                raise ValueError(f"operator order {k} outside 1..{trunc_order}")
            if op.space != space:
                raise ValueError("operator lives on the wrong phase space")
            if not op.is_zero():
                clean[k] = op
        self.space = space
        self.trunc_order = trunc_order
        self.ops = clean

    @classmethod
    def identity(cls, space, trunc_order):
        return cls(space, trunc_order, {})

    def series(self):
        out = {0: DiffOp.identity(self.space)}
        out.update(self.ops)
        return out

    def is_unital(self):
        """True iff every ``T_k`` kills constants, so ``T(1) = 1``."""
        zero_alpha = (0,) * self.space.dim
        return all(zero_alpha not in op.coeffs for op in self.ops.values())

    def apply(self, w):
        """Apply to a formal function (or a plain Poly/GaussFn, coerced)."""
        if not isinstance(w, FormalScalar):
            w = FormalScalar.constant(w, self.trunc_order)
        out = w
        for k, op in self.ops.items():
            piece = {}
            for j, c in w.coeffs.items():
                val = op.apply(c)
                if not val.is_zero():
                    piece[j + k] = val
            out = out + FormalScalar(
                {m: v for m, v in piece.items() if m <= w.trunc_order}, w.trunc_order
            )
        return out

    def compose(self, other):
        """``self o other`` as an equivalence, truncated at the common order."""
        if self.space != other.space:
            raise ValueError("equivalences live on different phase spaces")
        trunc = min(self.trunc_order, other.trunc_order)
        combined = _series_compose(self.series(), other.series(), trunc)
        combined.pop(0, None)
        return Equivalence(self.space, trunc, combined)

    def __eq__(self, other):
        if not isinstance(other, Equivalence):
            return NotImplemented
        return (
            self.space == other.space
            and self.trunc_order == other.trunc_order
            and self.ops == other.ops
        )

    def __repr__(self):
        return f"Equivalence(K={self.trunc_order}, orders={sorted(self.ops)})"


def _series_compose(a, b, trunc_order):
    out = {}
    for i, ai in a.items():
        for j, bj in b.items():
            k = i + j
            if k > trunc_order:
                continue
            term = ai.compose(bj)
            out[k] = out[k] + term if k in out else term
    return {k: op for k, op in out.items() if not op.is_zero()}


def equiv_invert(t):
    """Neumann-series inverse: ``S_k = -sum_{j=1}^{k} T_j o S_{k-j}``."""
    space = t.space
    s = {0: DiffOp.identity(space)}
    for k in range(1, t.trunc_order + 1):
        acc = DiffOp.zero(space)
        for j in range(1, k + 1):
            tj = t.ops.get(j)
            prev = s.get(k - j)
            if tj is None or prev is None or prev.is_zero():
                continue
            acc = acc + tj.compose(prev)
        if not acc.is_zero():
            s[k] = -1 * acc
    return Equivalence(space, t.trunc_order, {k: op for k, op in s.items() if k})


def equiv_adjoint(t):
    """Termwise formal adjoint ``T' = Id + sum nu^k T_k*``."""
    return Equivalence(
        t.space, t.trunc_order, {k: op.adjoint() for k, op in t.ops.items()}
    )


def transport_star(t, s):
    """The star product ``u *' v = T^{-1}(Tu * Tv)`` with explicit cochains.

    Requires a unital ``T`` (every ``T_k(1) = 0``); otherwise the unit of
    the transported product would be ``T^{-1}(1)`` rather than 1, which
    the cochain representation cannot express.
    """
    if not isinstance(s, StarProduct):
        raise TypeError("transport_star expects a StarProduct")
    if t.space != s.space:
        raise ValueError("equivalence and star product live on different spaces")
    if t.trunc_order != s.trunc_order:
        raise ValueError("equivalence and star product must share a truncation order")
    if not t.is_unital():
        raise ValueError("transport requires T_k(1) = 0 for every k")
    trunc = s.trunc_order
    inv = equiv_invert(t).series()
    fwd = t.series()
    cochains = {}
    for m in range(1, trunc + 1):
        acc = None
        for a, s_a in inv.items():
            for r in range(0, m - a + 1):
                base = s.cochain(r)
                if base.is_zero():
                    continue
                for b, t_b in fwd.items():
                    c = m - a - r - b
                    t_c = fwd.get(c)
                    if t_c is None:
                        continue
                    term = base.conjugate(s_a, t_b, t_c)
                    acc = term if acc is None else acc + term
        if acc is not None and not acc.is_zero():
            cochains[m] = acc
    return StarProduct(s.space, trunc, cochains)


def density_from_equivalence(t):
    """Standard trace with density ``rho = T'(1) = 1 + sum nu^k T_k*(1)``."""
    adj = equiv_adjoint(t)
    one = Poly.constant(t.space, 1)
    coeffs = {0: one}
    for k, op in adj.ops.items():
        val = op.apply(one)
        if not val.is_zero():
            coeffs[k] = val
    rho = FormalScalar(coeffs, t.trunc_order)
    return TraceFunctional(t.space, rho, -t.space.n)


def transport_euler(t, d):
    """``T^{-1} o D o T`` decomposed back into nu-Euler form.

    ``nu d/dnu`` differentiates T's own coefficients, contributing
    ``T^{-1} o (sum_k k nu^k T_k)`` on top of the conjugated
    ``X + sum nu^r D'_r`` part; the order-0 piece stays ``X``.
    """
    if t.space != d.space:
        raise ValueError("equivalence and derivation live on different spaces")
    trunc = t.trunc_order
    inv = equiv_invert(t).series()
    fwd = t.series()
    core = {0: d.x}
    for r, op in d.corrections.items():
        if r <= trunc:
            core[r] = core[r] + op if r in core else op
    total = _series_compose(_series_compose(inv, core, trunc), fwd, trunc)
    if d.has_nu_scaling:
        tdot = {k: k * op for k, op in t.ops.items()}
        for k, op in _series_compose(inv, tdot, trunc).items():
            total[k] = total[k] + op if k in total else op
    x_new = total.pop(0, DiffOp.zero(t.space))
    corrections = {k: op for k, op in total.items() if not op.is_zero()}
    return EulerDerivation(t.space, x_new, corrections, d.has_nu_scaling)


def random_equivalence(space, trunc_order, seed, op_order=2, coeff_degree=2):
    """Reproducible unital equivalence with small random ``T_k``.

    Each ``T_k`` has derivative order 1..op_order and polynomial
    coefficients of degree <= coeff_degree; no multiplication part, so
    ``T(1) = 1`` and transported products keep the unit.
    """
    rng = random.Random(seed)
    ops = {}
    for k in range(1, trunc_order + 1):
        coeffs = {}
        for _ in range(rng.randint(1, 2)):
            alpha = [0] * space.dim
            for _ in range(rng.randint(1, op_order)):
                alpha[rng.randrange(space.dim)] += 1
            exps = [0] * space.dim
            for _ in range(rng.randint(0, coeff_degree)):
                exps[rng.randrange(space.dim)] += 1
            c = Fraction(rng.choice([-2, -1, 1, 2]), rng.choice([1, 2]))
            poly = Poly.monomial(space, exps, c)
            key = tuple(alpha)
            coeffs[key] = coeffs.get(key, Poly.zero(space)) + poly
        op = DiffOp(space, coeffs)
        if not op.is_zero():
            ops[k] = op
    return Equivalence(space, trunc_order, ops)


def symplectic_form_matrix(space):
    """Matrix of Omega in the (q_1..q_n, p_1..p_n) ordering."""
    n = space.n
    j = [[Fraction(0)] * space.dim for _ in range(space.dim)]
    for i in range(n):
        j[i][n + i] = Fraction(1)
        j[n + i][i] = Fraction(-1)
    return j


def is_symplectic(space, m):
    rows = [[_as_fraction(v) for v in row] for row in m]
    j = symplectic_form_matrix(space)
    return mat_mul(mat_transpose(rows), mat_mul(j, rows)) == j


def symplectic_automorphism_check(m, u, precision=50):
    """Residual ``|tau_M(u o m) - tau_M(u)|`` at the leading trace order.

    Exact (returns 0.0) when the pullback stays isotropic; otherwise the
    anisotropic integral is evaluated at the requested precision.  Raises
    on non-symplectic input.
    """
    if not isinstance(u, GaussFn):
        raise TypeError("symplectic_automorphism_check expects a GaussFn")
    space = u.space
    if not is_symplectic(space, m):
        raise ValueError("matrix is not symplectic for the fixed form")
    base = gauss_integrate_exact(u)
    pulled = gauss_pullback_linear(u, m)
    if isinstance(pulled, GaussFn):
        diff = gauss_integrate_exact(pulled) - base
        return abs(diff.as_mpf(precision))
    with mpmath.workdps(precision + 10):
        numeric = gauss_integrate_bigfloat(pulled, precision)
        return abs(numeric - base.as_mpf(precision))

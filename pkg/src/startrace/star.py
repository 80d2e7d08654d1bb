"""Star products as truncated cochain sequences, plus nu-Euler derivations.

A :class:`StarProduct` stores bidifferential cochains ``C_1..C_K`` for

    u * v = u v + sum_{r>=1} nu^r C_r(u, v),

with ``C_0`` the pointwise product.  The Moyal product is built from the
bidifferential Poisson symbol ``P = sum_i (dp_i (x) dq_i - dq_i (x) dp_i)``
as ``C_k = P^k / (2^k k!)``, so ``C_1 = (1/2){.,.}`` and the antisymmetric
part ``C_1^-(u,v) = C_1(u,v) - C_1(v,u)`` is exactly the Poisson bracket.

An :class:`EulerDerivation` is ``D = nu d/dnu + X + sum_r nu^r D'_r`` with
``X`` a conformal vector field (``L_X Omega = Omega``); the conformality
check is exact on the 2-form level.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from startrace.diffop import BiDiffOp, DiffOp
from startrace.formal import FormalScalar
from startrace.gaussfn import GaussFn, gauss_integrate_exact
from startrace.poly import PhaseSpace, Poly


def poisson_cochain(space):
    """The Poisson bracket as a bidifferential operator."""
    one = Poly.constant(space, 1)
    coeffs = {}
    n = space.n
    for i in range(n):
        e_q = tuple(1 if a == i else 0 for a in range(space.dim))
        e_p = tuple(1 if a == n + i else 0 for a in range(space.dim))
        coeffs[(e_p, e_q)] = one
        coeffs[(e_q, e_p)] = -one
    return BiDiffOp(space, coeffs)


class StarProduct:
    """Truncated star product on a phase space.

    ``cochains`` maps orders ``1..trunc_order`` to :class:`BiDiffOp`;
    missing orders mean a zero cochain.  Construction verifies that
    ``C_1^-`` is the Poisson cochain (pass ``validate=False`` to build
    deliberately broken products in tests).
    """

    __slots__ = ("space", "trunc_order", "cochains")

    def __init__(self, space, trunc_order, cochains, validate=True):
        if trunc_order < 1:
            raise ValueError("truncation order must be at least 1")
        clean = {}
        for r, op in cochains.items():
            if not 1 <= r <= trunc_order:
                raise ValueError(f"cochain order {r} outside 1..{trunc_order}")
            if op.space != space:
                raise ValueError("cochain lives on the wrong phase space")
            if not op.is_zero():
                clean[r] = op
        if validate:
            c1 = clean.get(1, BiDiffOp.zero(space))
            if c1.antisym() != poisson_cochain(space):
                raise ValueError("first cochain does not antisymmetrize to the Poisson bracket")
        self.space = space
        self.trunc_order = trunc_order
        self.cochains = clean

    def cochain(self, r):
        if r == 0:
            return BiDiffOp.product_cochain(self.space)
        if not 1 <= r <= self.trunc_order:
            raise ValueError(f"cochain order {r} outside 0..{self.trunc_order}")
        return self.cochains.get(r, BiDiffOp.zero(self.space))

    def __eq__(self, other):
        if not isinstance(other, StarProduct):
            return NotImplemented
        return (
            self.space == other.space
            and self.trunc_order == other.trunc_order
            and self.cochains == other.cochains
        )

    def __repr__(self):
        return f"StarProduct(n={self.space.n}, K={self.trunc_order}, orders={sorted(self.cochains)})"


def moyal_construct(space, trunc_order):
    """Moyal star product truncated at ``trunc_order``."""
    if trunc_order < 1:
        raise ValueError("truncation order must be at least 1")
    n = space.n
    generators = []
    for i in range(n):
        e_q = tuple(1 if a == i else 0 for a in range(space.dim))
        e_p = tuple(1 if a == n + i else 0 for a in range(space.dim))
        generators.append((e_p, e_q, 1))
        generators.append((e_q, e_p, -1))
    cochains = {}
    power = {((0,) * space.dim, (0,) * space.dim): Fraction(1)}
    for k in range(1, trunc_order + 1):
        nxt = {}
        for (alpha, beta), c in power.items():
            for a, b, sign in generators:
                key = (
                    tuple(x + y for x, y in zip(alpha, a)),
                    tuple(x + y for x, y in zip(beta, b)),
                )
                nxt[key] = nxt.get(key, Fraction(0)) + c * sign
        power = {key: c for key, c in nxt.items() if c}
        scale = Fraction(1, 2**k * factorial(k))
        cochains[k] = BiDiffOp(
            space,
            {key: Poly.constant(space, c * scale) for key, c in power.items()},
        )
    return StarProduct(space, trunc_order, cochains)


def _coerce_formal(space, u, trunc_order):
    if isinstance(u, FormalScalar):
        return u
    if isinstance(u, Poly) or isinstance(u, GaussFn):
        return FormalScalar.constant(u, trunc_order)
    raise TypeError(f"cannot interpret {type(u).__name__} as a formal function")


def _map_coeffs(w, fn):
    """Apply ``fn`` to every nu-coefficient, dropping exact zeros."""
    out = {}
    for k, c in w.coeffs.items():
        val = fn(c)
        if not val.is_zero():
            out[k] = val
    return FormalScalar(out, w.trunc_order)


def star_multiply(s, u, v):
    """``u * v`` under ``s``, Cauchy-combined and truncated.

    The window of the result accounts both for the operands' truncations
    and for cochains being known only up to ``s.trunc_order``.
    """
    u = _coerce_formal(s.space, u, s.trunc_order)
    v = _coerce_formal(s.space, v, s.trunc_order)
    if u.is_zero() or v.is_zero():
        return FormalScalar.zero(min(u.trunc_order, v.trunc_order))
    mu, mv = u.min_degree, v.min_degree
    trunc = min(
        u.trunc_order + mv,
        v.trunc_order + mu,
        s.trunc_order + mu + mv,
    )
    out = {}
    for r in range(0, s.trunc_order + 1):
        cochain = s.cochain(r)
        if cochain.is_zero():
            continue
        for i, ci in u.coeffs.items():
            for j, cj in v.coeffs.items():
                m = r + i + j
                if m > trunc:
                    continue
                val = cochain.apply(ci, cj)
                if val.is_zero():
                    continue
                out[m] = out[m] + val if m in out else val
    return FormalScalar(out, trunc)


def star_commutator(s, u, v):
    """``u * v - v * u``; the order-r coefficient is ``C_r^-(u, v)``."""
    return star_multiply(s, u, v) - star_multiply(s, v, u)


def associativity_residual(s, u, v, w):
    """``(u*v)*w - u*(v*w)``; identically zero for genuine star products."""
    left = star_multiply(s, star_multiply(s, u, v), w)
    right = star_multiply(s, u, star_multiply(s, v, w))
    return left - right


def closedness_integral(s, r, u, v):
    """``integral of C_r^-(u, v)`` over R^{2n} with the Liouville volume.

    ``Omega^n/n!`` is the Lebesgue measure of the chart, so this is an
    exact Gaussian integral.  Vanishes for all r iff ``s`` is strongly
    closed on the tested pairs.
    """
    if not isinstance(u, GaussFn) or not isinstance(v, GaussFn):
        raise TypeError("closedness_integral expects GaussFn operands")
    minus = s.cochain(r).antisym()
    return gauss_integrate_exact(minus.apply(u, v))


class EulerDerivation:
    """``D = nu d/dnu + X + sum_{r>=1} nu^r D'_r`` with conformal ``X``.

    ``X`` must be a pure vector field (first order, no multiplication
    part) satisfying ``L_X Omega = Omega`` exactly; this pins the
    normalization that makes nu-homogeneity arguments work.
    """

    __slots__ = ("space", "x", "corrections", "has_nu_scaling")

    def __init__(self, space, x, corrections=None, has_nu_scaling=True):
        if x.space != space:
            raise ValueError("vector field lives on the wrong phase space")
        defect = conformality_defect(x)
        if any(not p.is_zero() for p in defect.values()):
            raise ValueError("X does not satisfy L_X Omega = Omega")
        clean = {}
        for r, op in (corrections or {}).items():
            if r < 1:
                raise ValueError("correction orders start at 1")
            if op.space != space:
                raise ValueError("correction lives on the wrong phase space")
            if not op.is_zero():
                clean[r] = op
        self.space = space
        self.x = x
        self.corrections = clean
        self.has_nu_scaling = has_nu_scaling

    def apply(self, w):
        """Apply to a formal function (FormalScalar over Poly/GaussFn)."""
        out = (
            w.nu_scale_derivative()
            if self.has_nu_scaling
            else FormalScalar.zero(w.trunc_order)
        )
        out = out + _map_coeffs(w, self.x.apply)
        for r, op in self.corrections.items():
            out = out + _map_coeffs(w, op.apply).shift(r).truncate(w.trunc_order)
        return out

    def __eq__(self, other):
        if not isinstance(other, EulerDerivation):
            return NotImplemented
        return (
            self.space == other.space
            and self.x == other.x
            and self.corrections == other.corrections
            and self.has_nu_scaling == other.has_nu_scaling
        )

    def __repr__(self):
        return (
            f"EulerDerivation(X={self.x}, corrections at {sorted(self.corrections)})"
        )


def vector_field_components(x):
    """Split a first-order DiffOp with no multiplication part into components."""
    space = x.space
    comps = [Poly.zero(space) for _ in range(space.dim)]
    for alpha, poly in x.coeffs.items():
        if sum(alpha) != 1:
            raise ValueError("X must be a vector field (pure first order)")
        comps[alpha.index(1)] = comps[alpha.index(1)] + poly
    return comps


def conformality_defect(x):
    """Coefficients of ``L_X Omega - Omega`` as a 2-form, keyed (a, b), a < b.

    ``L_X Omega = d(i_X Omega)`` since ``Omega`` is closed; everything is
    polynomial so the defect is computed exactly.
    """
    space = x.space
    n = space.n
    comps = vector_field_components(x)
    defect = {}

    def bump(a, b, poly):
        if a == b or poly.is_zero():
            return
        if a > b:
            a, b, poly = b, a, -poly
        key = (a, b)
        cur = defect.get(key, Poly.zero(space))
        defect[key] = cur + poly

    for i in range(n):
        qi, pi = i, n + i
        # d(X^{q_i}) wedge dp_i  and  -d(X^{p_i}) wedge dq_i
        for a in range(space.dim):
            bump(a, pi, comps[qi].diff(a))
            bump(a, qi, -comps[pi].diff(a))
        bump(qi, pi, Poly.constant(space, -1))
    return {k: p for k, p in defect.items() if not p.is_zero()}


def canonical_euler(space, corrections=None):
    """The minimal nu-Euler derivation with ``X = (1/2) sum (q dq + p dp)``."""
    half = Fraction(1, 2)
    x = DiffOp.zero(space)
    for name in space.variables:
        x = x + DiffOp.mult(Poly.variable(space, name) * half).compose(
            DiffOp.partial(space, name)
        )
    return EulerDerivation(space, x, corrections)


def derivation_residual(s, d, u, v):
    """``D(u*v) - D(u)*v - u*D(v)``; zero iff D is a derivation of ``s``
    on the tested pair."""
    u = _coerce_formal(s.space, u, s.trunc_order)
    v = _coerce_formal(s.space, v, s.trunc_order)
    lhs = d.apply(star_multiply(s, u, v))
    rhs = star_multiply(s, d.apply(u), v) + star_multiply(s, u, d.apply(v))
    return lhs - rhs

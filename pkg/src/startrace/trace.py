"""Trace functionals for star products, given by densities.

A :class:`TraceFunctional` represents

    tau(u) = nu^e * integral of u(x) rho(x; nu) dV,   dV = Omega^n / n!,

where ``rho`` is a formal series with polynomial coefficients and ``e`` is
the prefactor exponent (``-n`` in standard form).  On the flat chart
``Omega^n/n!`` is exactly the Lebesgue measure, so every evaluation is an
exact Gaussian integral.  The order-k functionals ``tau_k(u) = integral of
u rho_k dV`` drive the order-by-order trace conditions.
"""

from __future__ import annotations

from fractions import Fraction

from startrace.formal import FormalScalar
from startrace.gaussfn import GaussFn, IntegralValue, gauss_integrate_exact
from startrace.poly import Poly
from startrace.star import star_commutator, star_multiply


class InconsistentTracesError(ValueError):
    """Two functionals fail to be proportional on the probe battery."""


class TraceFunctional:
    """Density-defined linear functional ``nu^e * integral(u rho dV)``."""

    __slots__ = ("space", "density", "prefactor_exponent")

    def __init__(self, space, density, prefactor_exponent):
        if not isinstance(density, FormalScalar):
            raise TypeError("density must be a FormalScalar over Poly coefficients")
        for c in density.coeffs.values():
            if not isinstance(c, Poly):
                raise TypeError("density coefficients must be polynomials")
            if c.space != space:
                raise ValueError("density lives on the wrong phase space")
        self.space = space
        self.density = density
        self.prefactor_exponent = prefactor_exponent

    def is_standard(self):
        return (
            self.prefactor_exponent == -self.space.n
            and self.density.get(0) == Poly.constant(self.space, 1)
            and (self.density.min_degree in (0, None))
        )

    def order_functional(self, k, w):
        """``tau_k(w)``: integrate ``w`` against the order-k density slice."""
        rho_k = self.density.get(k)
        if rho_k is None:
            return IntegralValue.zero()
        return gauss_integrate_exact(w * rho_k)

    def scale_by_series(self, c):
        """The functional ``u -> c(nu) * tau(u)`` for rational-coefficient c."""
        as_poly = FormalScalar(
            {k: Poly.constant(self.space, v) for k, v in c.coeffs.items()},
            c.trunc_order,
        )
        return TraceFunctional(self.space, self.density * as_poly, self.prefactor_exponent)

    def __eq__(self, other):
        if not isinstance(other, TraceFunctional):
            return NotImplemented
        return (
            self.space == other.space
            and self.density == other.density
            and self.prefactor_exponent == other.prefactor_exponent
        )

    def __repr__(self):
        return (
            f"TraceFunctional(nu^{self.prefactor_exponent} * int(u * ({self.density})))"
        )


def moyal_trace(space, trunc_order):
    """The standard trace with density 1 and prefactor ``nu^-n``."""
    rho = FormalScalar.constant(Poly.constant(space, 1), trunc_order)
    return TraceFunctional(space, rho, -space.n)


def _coerce_gauss_formal(space, u, trunc_order):
    if isinstance(u, FormalScalar):
        return u
    if isinstance(u, GaussFn):
        return FormalScalar.constant(u, trunc_order)
    if isinstance(u, Poly):
        return FormalScalar.constant(GaussFn.from_poly(u), trunc_order)
    raise TypeError(f"cannot interpret {type(u).__name__} as an integrand series")


def _density_product(u, rho):
    """Mixed-ring Cauchy product of a GaussFn series with a Poly series."""
    if u.is_zero() or rho.is_zero():
        return FormalScalar.zero(min(u.trunc_order, rho.trunc_order))
    trunc = min(u.trunc_order + rho.min_degree, rho.trunc_order + u.min_degree)
    out = {}
    for i, g in u.coeffs.items():
        for j, poly in rho.coeffs.items():
            m = i + j
            if m > trunc:
                continue
            term = g * poly
            out[m] = out[m] + term if m in out else term
    return FormalScalar(out, trunc)


def trace_eval(t, u):
    """Evaluate the trace coefficientwise; exact at every order.

    Returns a FormalScalar over :class:`IntegralValue`.  Raises
    ``NonIntegrableError`` if any order of ``u * rho`` fails to decay.
    """
    u = _coerce_gauss_formal(t.space, u, t.density.trunc_order)
    prod = _density_product(u, t.density)
    vals = {}
    for m, g in prod.coeffs.items():
        val = gauss_integrate_exact(g)
        if not val.is_zero():
            vals[m] = val
    return FormalScalar(vals, prod.trunc_order).shift(t.prefactor_exponent)


def trace_residual(t, s, u, v):
    """``tau(u*v) - tau(v*u)``; identically zero iff tau is a trace on the pair."""
    lhs = trace_eval(t, star_multiply(s, u, v))
    rhs = trace_eval(t, star_multiply(s, v, u))
    return lhs - rhs


def trk_residual(t, s, k, u, v):
    """Order-k trace condition ``sum_{r=1}^{k+1} tau_{k+1-r}(C_r^-(u, v))``.

    Equals the ``nu^{k+1+e}`` coefficient of ``trace_residual`` (``e`` the
    prefactor exponent), because the commutator expands into the ``C_r^-``.
    """
    if not 0 <= k <= s.trunc_order - 1:
        raise ValueError(f"order {k} outside 0..{s.trunc_order - 1}")
    if not isinstance(u, GaussFn) or not isinstance(v, GaussFn):
        raise TypeError("trk_residual expects GaussFn operands")
    total = IntegralValue.zero()
    for r in range(1, k + 2):
        minus = s.cochain(r).antisym()
        total = total + t.order_functional(k + 1 - r, minus.apply(u, v))
    return total


def standardize(t):
    """Standard representative: prefactor ``nu^-n``, density ``1 + O(nu)``.

    Divides out the leading scalar ``a`` and shifts the monomial
    ``nu^{m}``; idempotent.  The discarded factor is ``a nu^{m+e+n}``.
    """
    rho = t.density
    if rho.is_zero():
        raise ValueError("cannot standardize the zero functional")
    m = rho.min_degree
    lead = rho.get(m)
    a = lead.constant_term()
    if lead != Poly.constant(t.space, a) or not a:
        raise ValueError("leading density coefficient is not a nonzero scalar")
    density = rho.shift(-m).scale(Fraction(1) / a)
    return TraceFunctional(t.space, density, -t.space.n)


def default_probe_battery(space):
    """Eight deterministic integrable probes spanning widths, moments,
    shifts and mixed-width sums."""
    one = Poly.constant(space, 1)
    q1 = Poly.variable(space, "q1")
    p1 = Poly.variable(space, "p1")
    r_sq = Poly.zero(space)
    for name in space.variables:
        v = Poly.variable(space, name)
        r_sq = r_sq + v * v
    shift_b = [Fraction(0)] * space.dim
    shift_b[0] = Fraction(1)
    return [
        GaussFn.gaussian(space, 1),
        GaussFn.gaussian(space, 2),
        GaussFn.gaussian(space, Fraction(1, 2)),
        (q1 * q1) * GaussFn.gaussian(space, 1),
        (q1 * p1) * GaussFn.gaussian(space, 1),
        r_sq * GaussFn.gaussian(space, 2),
        GaussFn.gaussian(space, 1, b=shift_b, c=Fraction(-1, 2)),
        GaussFn.gaussian(space, 1) + GaussFn.gaussian(space, 3) * Fraction(1, 2),
    ]


def _try_rational_series(c):
    """Convert an IntegralValue-coefficient series to Fractions when possible."""
    out = {}
    for k, v in c.coeffs.items():
        if v.pi_power != 0 or set(v.terms) != {Fraction(0)}:
            return c
        out[k] = v.terms[Fraction(0)]
    return FormalScalar(out, c.trunc_order)


def proportionality_factor(t1, t2, probe, battery=None):
    """Solve ``trace_eval(t2, .) = c(nu) * trace_eval(t1, .)`` for ``c``.

    ``c`` is computed order by order from ``probe`` (whose leading value
    must be a single exponential term, hence invertible) and then verified
    against every battery probe; disagreement raises
    :class:`InconsistentTracesError`.  Returns rational coefficients when
    the ratio is rational.
    """
    s1 = trace_eval(t1, probe)
    s2 = trace_eval(t2, probe)
    if s1.is_zero():
        raise ValueError("probe evaluates to zero under the reference functional")
    factor = s2.divide(s1)
    if battery is None:
        battery = default_probe_battery(t1.space)
    for idx, fn in enumerate(battery):
        lhs = trace_eval(t2, fn)
        rhs = factor * trace_eval(t1, fn)
        trunc = min(lhs.trunc_order, rhs.trunc_order)
        if lhs.truncate(trunc) != rhs.truncate(trunc):
            raise InconsistentTracesError(
                f"probe {idx} breaks proportionality: {lhs} != {rhs}"
            )
    return _try_rational_series(factor)


def normalization_residual(t, d, u):
    """``tau(D u) - nu d/dnu tau(u)``; zero iff tau is normalized for D on u."""
    u = _coerce_gauss_formal(t.space, u, t.density.trunc_order)
    lhs = trace_eval(t, d.apply(u))
    rhs = trace_eval(t, u).nu_scale_derivative()
    return lhs - rhs

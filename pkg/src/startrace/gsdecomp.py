"""Grid-sampled decompositions into derivatives and Poisson brackets.

Compactly supported functions live on uniform symmetric boxes as
:class:`GridFn` samples.  ``gs_decompose`` splits a zero-integral
function into a divergence ``sum_i d_i g_i`` by the marginalize /
subtract-bump / cumulate recursion; ``bracket_decompose`` converts that
into Poisson-bracket pairs with cutoff coordinate functions.  Everything
is double precision: derivatives are 4th-order central differences and
integrals are composite Simpson rules.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_simpson, simpson


class MarginError(ValueError):
    """A grid function failed the compact-support margin contract."""


class NonzeroIntegralError(ValueError):
    """Decomposition input has a total integral beyond tolerance."""


MIN_MARGIN = 5
# margin samples below this magnitude are snapped to exact zero; above it
# the compact-support contract is considered violated
MARGIN_SNAP_TOL = 1e-7
# decomposition pairs whose left entry stays below this (relative) size
# are dropped as numerically zero
DROP_TOL = 1e-9


class GridFn:
    """Samples of a compactly supported function on a symmetric box.

    The box is ``[-L_1, L_1] x ... x [-L_N, L_N]`` with the same number
    of points on every axis; values must vanish on a band of at least
    ``MIN_MARGIN`` cells at every boundary.
    """

    __slots__ = ("dimension", "half_widths", "points", "margin_cells", "values", "h")

    def __init__(self, half_widths, points, values, margin_cells):
        half_widths = tuple(float(w) for w in half_widths)
        if not half_widths or any(w <= 0 for w in half_widths):
            raise ValueError("half widths must be positive")
        dimension = len(half_widths)
        if margin_cells < MIN_MARGIN:
            raise MarginError(f"margin must be at least {MIN_MARGIN} cells")
        if points <= 2 * margin_cells + 4:
            raise ValueError("grid too small for its margins")
        values = np.asarray(values, dtype=float)
        if values.shape != (points,) * dimension:
            raise ValueError("value array shape does not match the grid")
        values = values.copy()
        for axis in range(dimension):
            for band in (
                np.moveaxis(values, axis, 0)[:margin_cells],
                np.moveaxis(values, axis, 0)[points - margin_cells :],
            ):
                worst = float(np.max(np.abs(band))) if band.size else 0.0
                if worst > MARGIN_SNAP_TOL:
                    raise MarginError(
                        f"values reach {worst:.3e} on the declared margin"
                    )
                band[...] = 0.0
        self.dimension = dimension
        self.half_widths = half_widths
        self.points = points
        self.margin_cells = margin_cells
        self.values = values
        self.h = tuple(2 * w / (points - 1) for w in half_widths)

    # -- inspection ---------------------------------------------------

    def axis_coordinates(self, axis):
        return np.linspace(-self.half_widths[axis], self.half_widths[axis], self.points)

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def _check_compat(self, other):
        if (
            self.dimension != other.dimension
            or self.half_widths != other.half_widths
            or self.points != other.points
        ):
            raise ValueError("grid functions live on different grids")

    # -- pointwise algebra --------------------------------------------

    def __add__(self, other):
        self._check_compat(other)
        margin = min(self.margin_cells, other.margin_cells)
        return GridFn(self.half_widths, self.points, self.values + other.values, margin)

    def __sub__(self, other):
        self._check_compat(other)
        margin = min(self.margin_cells, other.margin_cells)
        return GridFn(self.half_widths, self.points, self.values - other.values, margin)

    def __neg__(self):
        return GridFn(self.half_widths, self.points, -self.values, self.margin_cells)

    def __mul__(self, other):
        if isinstance(other, GridFn):
            self._check_compat(other)
            margin = max(self.margin_cells, other.margin_cells)
            return GridFn(
                self.half_widths, self.points, self.values * other.values, margin
            )
        return GridFn(
            self.half_widths, self.points, self.values * float(other), self.margin_cells
        )

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, GridFn):
            return NotImplemented
        return (
            self.half_widths == other.half_widths
            and self.points == other.points
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return (
            f"GridFn(dim={self.dimension}, points={self.points}, "
            f"margin={self.margin_cells})"
        )

    # -- serialization ------------------------------------------------

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "half_widths": list(self.half_widths),
            "points_per_axis": self.points,
            "margin_cells": self.margin_cells,
            "values": [float(v) for v in self.values.ravel()],
        }

    @classmethod
    def from_dict(cls, data):
        dimension = data["dimension"]
        points = data["points_per_axis"]
        values = np.asarray(data["values"], dtype=float).reshape((points,) * dimension)
        return cls(data["half_widths"], points, values, data["margin_cells"])


# -- calculus ---------------------------------------------------------


def grid_diff(f, axis):
    """4th-order central difference along an axis; costs two margin cells."""
    if not 0 <= axis < f.dimension:
        raise ValueError("axis out of range")
    if f.margin_cells - 2 < MIN_MARGIN:
        raise MarginError("margin too thin to differentiate")
    v = f.values
    d = (
        -np.roll(v, -2, axis)
        + 8 * np.roll(v, -1, axis)
        - 8 * np.roll(v, 1, axis)
        + np.roll(v, 2, axis)
    ) / (12 * f.h[axis])
    return GridFn(f.half_widths, f.points, d, f.margin_cells - 2)


def grid_integrate(f):
    """Composite Simpson integral over the whole box."""
    v = f.values
    for axis in reversed(range(f.dimension)):
        v = simpson(v, dx=f.h[axis], axis=axis)
    return float(v)


def grid_cumulative(f, axis):
    """Running Simpson integral from the lower box edge along an axis.

    Only meaningful when the result decays again: a nonzero integral
    along the axis leaves the far margin nonzero and raises.
    """
    if not 0 <= axis < f.dimension:
        raise ValueError("axis out of range")
    c = cumulative_simpson(f.values, dx=f.h[axis], axis=axis, initial=0)
    return GridFn(f.half_widths, f.points, c, f.margin_cells)


def grid_calculus(f, op, axis=None):
    """Dispatch helper: ``diff``/``cumulative`` need an axis, ``integrate`` none."""
    if op == "diff":
        return grid_diff(f, axis)
    if op == "integrate":
        return grid_integrate(f)
    if op == "cumulative":
        return grid_cumulative(f, axis)
    raise ValueError(f"unknown grid operation {op!r}")


def grid_translate(f, cells):
    """Shift by whole cells per axis; the support must stay inside the margin."""
    if len(cells) != f.dimension:
        raise ValueError("need one shift per axis")
    margin = f.margin_cells - max(abs(int(c)) for c in cells) if cells else f.margin_cells
    if margin < MIN_MARGIN:
        raise MarginError("translation pushes the support into the margin")
    v = f.values
    for axis, c in enumerate(cells):
        v = np.roll(v, int(c), axis)
    return GridFn(f.half_widths, f.points, v, margin)


# -- canonical profiles -----------------------------------------------


def _bump_profile(t):
    """``exp(-1/(1-t^2))`` inside (-1, 1), exactly zero outside."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    out = np.zeros_like(t)
    with np.errstate(divide="ignore", over="ignore"):
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _plateau_profile(t):
    """Smooth step: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    num = np.zeros_like(t)
    pos = t > 0
    num[pos] = np.exp(-1.0 / t[pos])
    den = np.zeros_like(t)
    rising = t < 1
    den[rising] = np.exp(-1.0 / (1.0 - t[rising]))
    total = num + den  # strictly positive: at least one branch is active
    return num / total


def _broadcast(value, dimension):
    if np.isscalar(value):
        return (float(value),) * dimension
    out = tuple(float(v) for v in value)
    if len(out) != dimension:
        raise ValueError("need one entry per axis")
    return out


def _axis_profile_product(half_widths, points, per_axis):
    values = np.ones((points,) * len(half_widths))
    for axis, profile in enumerate(per_axis):
        shape = [1] * len(half_widths)
        shape[axis] = points
        values = values * profile.reshape(shape)
    return values


def bump_generate(dimension, half_widths, points_per_axis, support, margin_cells=8):
    """Product bump supported in ``|x_i| < support_i``, unit Simpson integral."""
    half_widths = _broadcast(half_widths, dimension)
    support = _broadcast(support, dimension)
    h = [2 * w / (points_per_axis - 1) for w in half_widths]
    for w, s, hi in zip(half_widths, support, h):
        if s <= 0:
            raise ValueError("support half widths must be positive")
        if s >= w - (margin_cells + 1) * hi:
            raise MarginError("support too large for the declared margin")
    profiles = []
    for axis in range(dimension):
        x = np.linspace(-half_widths[axis], half_widths[axis], points_per_axis)
        profiles.append(_bump_profile(x / support[axis]))
    values = _axis_profile_product(half_widths, points_per_axis, profiles)
    f = GridFn(half_widths, points_per_axis, values, margin_cells)
    total = grid_integrate(f)
    return f * (1.0 / total)


def tapered_generate(dimension, half_widths, points_per_axis, support, margin_cells=8):
    """Unit-integral ``cos^8`` product bump: the gentle test-battery profile.

    C^5 across its support edge, so 4th-order grid calculus converges at
    full rate on it; the canonical exp-profile bump has much larger high
    derivatives near the edge and dominates any residual it enters.
    """
    half_widths = _broadcast(half_widths, dimension)
    support = _broadcast(support, dimension)
    h = [2 * w / (points_per_axis - 1) for w in half_widths]
    for w, s, hi in zip(half_widths, support, h):
        if s <= 0:
            raise ValueError("support half widths must be positive")
        if s >= w - (margin_cells + 1) * hi:
            raise MarginError("support too large for the declared margin")
    profiles = []
    for axis in range(dimension):
        x = np.linspace(-half_widths[axis], half_widths[axis], points_per_axis)
        t = x / support[axis]
        profiles.append(
            np.where(np.abs(t) < 1, np.cos(np.pi * np.clip(t, -1, 1) / 2) ** 8, 0.0)
        )
    values = _axis_profile_product(half_widths, points_per_axis, profiles)
    f = GridFn(half_widths, points_per_axis, values, margin_cells)
    return f * (1.0 / grid_integrate(f))


def plateau_generate(
    dimension, half_widths, points_per_axis, support, margin_cells=8, decay=None
):
    """Product cutoff equal to 1 on ``|x_i| <= support_i``, 0 near the boundary.

    ``decay`` is the transition width per axis; by default it fills the
    room between the plateau and the margin band.
    """
    half_widths = _broadcast(half_widths, dimension)
    support = _broadcast(support, dimension)
    h = [2 * w / (points_per_axis - 1) for w in half_widths]
    if decay is None:
        decay = tuple(
            w - (margin_cells + 1) * hi - s
            for w, s, hi in zip(half_widths, support, h)
        )
    else:
        decay = _broadcast(decay, dimension)
    profiles = []
    for axis in range(dimension):
        d = decay[axis]
        if d <= 0:
            raise MarginError("no room for the cutoff to decay inside the margin")
        if support[axis] + d >= half_widths[axis] - margin_cells * h[axis]:
            raise MarginError("cutoff transition reaches the margin band")
        x = np.abs(np.linspace(-half_widths[axis], half_widths[axis], points_per_axis))
        profiles.append(_plateau_profile((support[axis] + d - x) / d))
    values = _axis_profile_product(half_widths, points_per_axis, profiles)
    return GridFn(half_widths, points_per_axis, values, margin_cells)


# -- derivative decomposition -----------------------------------------


def _axis_ramp_values(f, axis):
    """Ramp of the canonical bump on one axis, and its discrete derivative.

    The ramp is the cumulative integral of the bump rescaled to end at
    exactly 1, so tail subtractions leave exact zeros on the far margin.
    Reinserting marginals against ``r_d = diff(ramp)`` rather than the
    sampled bump itself makes the divergence identity hold up to the
    differencing error of the input alone: the bump's own (much larger)
    discretization error cancels.
    """
    w = f.half_widths[axis]
    h = f.h[axis]
    x = np.linspace(-w, w, f.points)
    r = _bump_profile(x / (w / 2))
    ramp = cumulative_simpson(r, dx=h, initial=0)
    ramp = ramp / ramp[-1]
    r_d = np.zeros_like(ramp)
    r_d[2:-2] = (-ramp[4:] + 8 * ramp[3:-1] - 8 * ramp[1:-3] + ramp[:-4]) / (12 * h)
    return ramp, r_d


def integral_tolerance(f):
    """Zero-integral precondition scale: ``1e-8`` per unit of box volume."""
    volume = 1.0
    for w in f.half_widths:
        volume *= 2 * w
    return 1e-8 * volume


def _gs_recurse(u):
    axis = u.dimension - 1
    ramp, r_d = _axis_ramp_values(u, axis)
    shape = [1] * u.dimension
    shape[axis] = u.points
    cum = cumulative_simpson(u.values, dx=u.h[axis], axis=axis, initial=0)
    tail = np.asarray(cum[..., -1])  # running-rule marginal of u
    g_last = GridFn(
        u.half_widths,
        u.points,
        cum - tail[..., np.newaxis] * ramp.reshape(shape),
        u.margin_cells,
    )
    if u.dimension == 1:
        return [g_last]
    w = GridFn(u.half_widths[:axis], u.points, tail, u.margin_cells)
    out = [
        GridFn(
            u.half_widths,
            u.points,
            g.values[..., np.newaxis] * r_d.reshape(shape),
            min(g.margin_cells, u.margin_cells),
        )
        for g in _gs_recurse(w)
    ]
    out.append(g_last)
    return out


def gs_decompose(u):
    """Split zero-integral ``u`` into ``g_1..g_N`` with ``sum_i d_i g_i = u``.

    Recursion over the last axis: marginalize, decompose the marginal,
    reinsert it against a unit bump, and cumulate what remains.  Each
    returned function is again compactly supported inside the box.
    """
    total = grid_integrate(u)
    if abs(total) > integral_tolerance(u):
        raise NonzeroIntegralError(
            f"total integral {total:.3e} exceeds tolerance {integral_tolerance(u):.3e}"
        )
    return _gs_recurse(u)


def decomposition_residual(u, parts):
    """Sup-norm of ``u - sum_i d_i parts[i]``."""
    if len(parts) != u.dimension:
        raise ValueError("need one part per axis")
    acc = u
    for axis, g in enumerate(parts):
        acc = acc - grid_diff(g, axis)
    return acc.sup_norm()


# -- bracket decomposition --------------------------------------------


def grid_bracket(a, b):
    """Poisson bracket ``da/dp db/dq - da/dq db/dp`` on a 2D (q, p) grid."""
    if a.dimension != 2 or b.dimension != 2:
        raise ValueError("brackets need 2D grid functions")
    return grid_diff(a, 1) * grid_diff(b, 0) - grid_diff(a, 0) * grid_diff(b, 1)


def _support_halfwidth(f, axis, tol):
    """Largest |coordinate| along an axis where ``f`` exceeds ``tol``."""
    moved = np.moveaxis(np.abs(f.values), axis, 0).reshape(f.points, -1)
    hit = np.nonzero(np.max(moved, axis=1) > tol)[0]
    if hit.size == 0:
        return 0.0
    x = f.axis_coordinates(axis)
    return float(max(abs(x[hit[0]]), abs(x[hit[-1]])))


def bracket_decompose(u):
    """Write zero-integral 2D ``u`` as ``sum_j {a_j, b_j}`` with cutoffs.

    The divergence split ``u = d_q g_1 + d_p g_2`` becomes
    ``{g_2, s q} + {-g_1, s p}`` where the cutoff ``s`` is 1 on a box
    holding both supports, so each ``s``-weighted coordinate is again
    compactly supported.  Numerically zero pairs are dropped.
    """
    if u.dimension != 2:
        raise ValueError("bracket decomposition is defined on 2D (q, p) grids")
    scale = max(1.0, u.sup_norm())
    if u.sup_norm() <= DROP_TOL * scale:
        total = grid_integrate(u)
        if abs(total) > integral_tolerance(u):
            raise NonzeroIntegralError("total integral exceeds tolerance")
        return []
    g_q, g_p = gs_decompose(u)
    tol = DROP_TOL * max(1.0, g_q.sup_norm(), g_p.sup_norm())
    support = []
    for axis in range(2):
        c = max(
            _support_halfwidth(g_q, axis, tol), _support_halfwidth(g_p, axis, tol)
        )
        support.append(c + 2 * u.h[axis])
    cutoff = plateau_generate(
        2, u.half_widths, u.points, support, margin_cells=u.margin_cells
    )
    q = u.axis_coordinates(0)
    p = u.axis_coordinates(1)
    sq = GridFn(
        u.half_widths, u.points, cutoff.values * q[:, np.newaxis], cutoff.margin_cells
    )
    sp = GridFn(
        u.half_widths, u.points, cutoff.values * p[np.newaxis, :], cutoff.margin_cells
    )
    pairs = [(g_p, sq), (-g_q, sp)]
    keep_tol = DROP_TOL * scale
    return [(a, b) for a, b in pairs if a.sup_norm() > keep_tol]


def bracket_residual(u, pairs):
    """Sup-norm of ``u - sum_j {a_j, b_j}``."""
    acc = u
    for a, b in pairs:
        acc = acc - grid_bracket(a, b)
    return acc.sup_norm()


def brw_residual(u, phi, density):
    """How far ``f -> integral(f * density)`` is from factoring through totals.

    Returns ``|sigma(u) - (int u / int phi) * sigma(phi)|``; small when the
    density is constant on the supports, visibly nonzero otherwise.
    """
    c = grid_integrate(u) / grid_integrate(phi)
    sigma_u = grid_integrate(u * density)
    sigma_phi = grid_integrate(phi * density)
    return abs(sigma_u - c * sigma_phi)

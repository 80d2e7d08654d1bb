"""Grid decompositions: margins, calculus, divergence and bracket splits."""

import random

import numpy as np
import pytest

from conftest import tapered_bump

from startrace.gsdecomp import (
    GridFn,
    MarginError,
    NonzeroIntegralError,
    bracket_decompose,
    bracket_residual,
    brw_residual,
    bump_generate,
    decomposition_residual,
    grid_bracket,
    grid_calculus,
    grid_cumulative,
    grid_diff,
    grid_integrate,
    grid_translate,
    gs_decompose,
    plateau_generate,
)


def zero_grid(points=128, dimension=1, half_width=3.0, margin=10):
    return GridFn(
        (half_width,) * dimension, points, np.zeros((points,) * dimension), margin
    )


def random_zero_integral(rng, points, support=1.8):
    """Seeded 2D combination of shifted gentle bumps with total integral 0."""
    phi = tapered_bump(points, 2, support)
    u = zero_grid(points, 2, margin=10)
    for _ in range(3):
        shift = (rng.randint(-5, 5), rng.randint(-5, 5))
        u = u + rng.choice([-2, -1, 1, 2]) * grid_translate(phi, shift)
    c = grid_integrate(u) / grid_integrate(phi)
    return u - c * phi


# -- GridFn contract --------------------------------------------------


def test_margin_is_enforced():
    with pytest.raises(MarginError):
        GridFn((3.0,), 64, np.ones(64), 8)
    with pytest.raises(MarginError):
        GridFn((3.0,), 64, np.zeros(64), 4)
    with pytest.raises(ValueError):
        GridFn((3.0,), 20, np.zeros(20), 8)


def test_margin_noise_is_snapped():
    v = np.zeros(64)
    v[1] = 1e-9
    v[40] = 0.5
    f = GridFn((3.0,), 64, v, 8)
    assert f.values[1] == 0.0
    assert f.values[40] == 0.5


def test_json_round_trip():
    b = tapered_bump(64, 2, 1.5, margin_cells=8)
    back = GridFn.from_dict(b.to_dict())
    assert back == b
    bad = b.to_dict()
    bad["values"][0] = 1.0
    with pytest.raises(MarginError):
        GridFn.from_dict(bad)


def test_translate_guards_margin():
    b = tapered_bump(128, 1, 2.0, margin_cells=10)
    shifted = grid_translate(b, (4,))
    assert shifted.margin_cells == 6
    with pytest.raises(MarginError):
        grid_translate(b, (6,))


# -- calculus ---------------------------------------------------------


def test_diff_of_cumulative_recovers_input():
    # fundamental theorem on 512-point grids, zero-integral smooth inputs
    b = tapered_bump(512, 1, 2.2)
    for u in (grid_diff(b, 0), b - grid_translate(b, (3,))):
        c = grid_cumulative(u, 0)
        assert (grid_diff(c, 0) - u).sup_norm() <= 1e-6


def test_cumulative_needs_decay():
    b = tapered_bump(512, 1, 2.2)
    with pytest.raises(MarginError):
        grid_cumulative(b, 0)  # unit integral: the far margin cannot vanish


def test_integrate_odd_function():
    x = np.linspace(-3.0, 3.0, 257)
    prof = np.where(np.abs(x) < 2, np.cos(np.pi * np.clip(x / 2, -1, 1) / 2) ** 8, 0.0)
    f = GridFn((3.0,), 257, x * prof, 10)
    assert abs(grid_integrate(f)) <= 1e-12


def test_calculus_dispatch():
    b = tapered_bump(128, 1, 2.0)
    assert grid_calculus(b, "integrate") == grid_integrate(b)
    assert grid_calculus(b, "diff", 0) == grid_diff(b, 0)
    with pytest.raises(ValueError):
        grid_calculus(b, "laplace")


def test_diff_needs_margin_headroom():
    b = tapered_bump(128, 1, 2.0, margin_cells=6)
    with pytest.raises(MarginError):
        grid_diff(b, 0)


# -- canonical bump ---------------------------------------------------


def test_bump_examples():
    b = bump_generate(1, 3.0, 512, 1.5)
    assert abs(grid_integrate(b) - 1.0) <= 1e-10
    assert b.values.min() >= 0.0
    x = b.axis_coordinates(0)
    assert np.all(b.values[np.abs(x) >= 1.5] == 0.0)


def test_bump_support_must_fit():
    with pytest.raises(MarginError):
        bump_generate(1, 3.0, 128, 2.95)


def test_plateau_is_exactly_one_on_support():
    s = plateau_generate(1, 3.0, 257, 1.2, margin_cells=8)
    x = s.axis_coordinates(0)
    assert np.all(s.values[np.abs(x) <= 1.2] == 1.0)
    assert np.all(s.values >= 0.0)
    assert np.all(s.values <= 1.0)


# -- divergence decomposition -----------------------------------------


def test_gs_one_dimensional_known_answer():
    b = bump_generate(1, 3.0, 512, 2.5, margin_cells=10)
    u = grid_diff(b, 0)
    (g,) = gs_decompose(u)
    assert (g - b).sup_norm() <= 1e-6
    assert decomposition_residual(u, [g]) <= 1e-5


def test_gs_zero_input():
    parts = gs_decompose(zero_grid(128, 2))
    assert len(parts) == 2
    assert all(g.sup_norm() == 0.0 for g in parts)


def test_gs_rejects_nonzero_integral():
    with pytest.raises(NonzeroIntegralError):
        gs_decompose(tapered_bump(128, 1, 2.0))


def test_gs_two_dimensional_reconstruction():
    b = tapered_bump(256, 2, 2.2)
    u = grid_diff(grid_translate(b, (3, -2)), 0) + grid_diff(
        grid_translate(b, (-4, 5)), 1
    )
    parts = gs_decompose(u)
    assert len(parts) == 2
    assert decomposition_residual(u, parts) <= 1e-5


def test_gs_battery_and_convergence_order():
    residuals = []
    for points in (128, 256, 512):
        u = grid_diff(tapered_bump(points, 1, 2.2), 0)
        residuals.append(decomposition_residual(u, gs_decompose(u)))
    orders = [np.log2(residuals[i] / residuals[i + 1]) for i in range(2)]
    assert residuals[1] <= 1e-5
    assert all(o >= 3.0 for o in orders)


def test_gs_random_battery():
    rng = random.Random(7)
    for _ in range(3):
        u = random_zero_integral(rng, 256)
        assert decomposition_residual(u, gs_decompose(u)) <= 1e-5


# -- bracket decomposition --------------------------------------------


def test_bracket_single_pair_example():
    b = tapered_bump(256, 2, 2.2)
    u = grid_diff(b, 1)  # d/dp of a bump
    pairs = bracket_decompose(u)
    assert len(pairs) == 1
    a, sq = pairs[0]
    assert (a - b).sup_norm() <= 1e-5
    # the partner is a cutoff-times-q function: linear in q on the support
    x = sq.axis_coordinates(0)
    mid = sq.points // 2
    assert sq.values[mid - 10, mid] == pytest.approx(x[mid - 10])
    assert (grid_bracket(a, sq) - u).sup_norm() <= 1e-5
    assert bracket_residual(u, pairs) <= 1e-5


def test_bracket_zero_input():
    assert bracket_decompose(zero_grid(128, 2)) == []


def test_bracket_needs_two_dimensions():
    with pytest.raises(ValueError):
        bracket_decompose(tapered_bump(128, 1, 2.0))


def test_bracket_rejects_nonzero_integral():
    with pytest.raises(NonzeroIntegralError):
        bracket_decompose(tapered_bump(128, 2, 2.0))


def test_bracket_random_battery():
    rng = random.Random(11)
    u = random_zero_integral(rng, 256)
    pairs = bracket_decompose(u)
    assert bracket_residual(u, pairs) <= 1e-5


# -- the functional consequence ---------------------------------------


def test_brw_functional_factors_through_totals():
    phi = tapered_bump(256, 2, 1.8)
    u = 2 * grid_translate(phi, (4, -3)) + 0.5 * grid_translate(phi, (-5, 2))
    flat = plateau_generate(2, 3.0, 256, 2.3, margin_cells=8)
    assert brw_residual(u, phi, flat) <= 1e-8

    # each bracket term individually annihilates the constant density
    c = grid_integrate(u) / grid_integrate(phi)
    for a, b in bracket_decompose(u - c * phi):
        assert abs(grid_integrate(grid_bracket(a, b) * flat)) <= 1e-10


def test_brw_functional_detects_nonconstant_density():
    phi = tapered_bump(256, 2, 1.8)
    u = 2 * grid_translate(phi, (4, -3)) + 0.5 * grid_translate(phi, (-5, 2))
    flat = plateau_generate(2, 3.0, 256, 2.3, margin_cells=8)
    q = np.linspace(-3.0, 3.0, 256)
    weighted = GridFn((3.0, 3.0), 256, flat.values * (q**2)[:, np.newaxis], 8)
    assert brw_residual(u, phi, weighted) >= 1e-3

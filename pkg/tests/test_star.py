import itertools
import random
from fractions import Fraction as F

import pytest

from conftest import random_poly
from startrace.diffop import BiDiffOp, DiffOp
from startrace.formal import FormalScalar
from startrace.gaussfn import GaussFn, gauss_integrate_exact
from startrace.poly import PhaseSpace, Poly, poisson_bracket
from startrace.star import (
    EulerDerivation,
    StarProduct,
    associativity_residual,
    canonical_euler,
    closedness_integral,
    conformality_defect,
    derivation_residual,
    moyal_construct,
    poisson_cochain,
    star_commutator,
    star_multiply,
)


@pytest.fixture
def space():
    return PhaseSpace(1)


@pytest.fixture
def moyal(space):
    return moyal_construct(space, 4)


def test_moyal_first_cochain_halves_poisson(moyal, space):
    rng = random.Random(2)
    for _ in range(6):
        u = random_poly(rng, space)
        v = random_poly(rng, space)
        assert moyal.cochain(1).apply(u, v) * 2 == poisson_bracket(u, v)
    assert moyal.cochain(1).antisym() == poisson_cochain(space)


def test_moyal_q_times_p(moyal, space):
    q = Poly.variable(space, "q1")
    p = Poly.variable(space, "p1")
    got = star_multiply(moyal, q, p)
    want = FormalScalar({0: q * p, 1: Poly.constant(space, F(-1, 2))}, 4)
    assert got == want


def test_moyal_psq_times_qsq(moyal, space):
    q = Poly.variable(space, "q1")
    p = Poly.variable(space, "p1")
    got = star_multiply(moyal, p * p, q * q)
    want = FormalScalar(
        {
            0: p * p * q * q,
            1: 2 * p * q,
            2: Poly.constant(space, F(1, 2)),
        },
        4,
    )
    assert got == want


def test_star_unit(moyal, space):
    rng = random.Random(3)
    one = Poly.constant(space, 1)
    for _ in range(4):
        u = random_poly(rng, space)
        assert star_multiply(moyal, u, one) == FormalScalar.constant(u, 4)
        assert star_multiply(moyal, one, u) == FormalScalar.constant(u, 4)


def test_star_zeroth_order_is_product(moyal, space):
    g = GaussFn.gaussian(space, 1)
    got = star_multiply(moyal, g, g)
    assert got.get(0) == GaussFn.gaussian(space, 2)


def test_commutator_examples(moyal, space):
    q = Poly.variable(space, "q1")
    p = Poly.variable(space, "p1")
    got = star_commutator(moyal, q, p)
    assert got == FormalScalar({1: Poly.constant(space, -1)}, 4)
    u = random_poly(random.Random(5), space)
    assert star_commutator(moyal, u, u).is_zero()
    got2 = star_commutator(moyal, p * p, q * q)
    assert got2 == FormalScalar({1: 4 * p * q}, 4)
    assert got2.get(1) == poisson_bracket(p * p, q * q)


def test_moyal_associativity_on_monomials():
    rng = random.Random(7)
    for n in (1, 2):
        space = PhaseSpace(n)
        s = moyal_construct(space, 4)
        for _ in range(6):
            u = random_poly(rng, space, max_degree=3)
            v = random_poly(rng, space, max_degree=3)
            w = random_poly(rng, space, max_degree=3)
            assert associativity_residual(s, u, v, w).is_zero()


def test_associativity_unit(moyal, space):
    one = Poly.constant(space, 1)
    v = random_poly(random.Random(9), space)
    w = random_poly(random.Random(10), space)
    assert associativity_residual(moyal, one, v, w).is_zero()


def test_broken_product_rejected(space):
    with pytest.raises(ValueError):
        StarProduct(space, 2, {1: BiDiffOp.product_cochain(space)})
    # validate=False lets the same data through
    bad = StarProduct(space, 2, {1: BiDiffOp.product_cochain(space)}, validate=False)
    assert bad.cochain(1) == BiDiffOp.product_cochain(space)


def test_moyal_strong_closedness(moyal, space):
    rng = random.Random(11)
    from test_gaussfn import random_gauss

    for _ in range(4):
        u = random_gauss(rng, space, max_degree=2)
        v = random_gauss(rng, space, max_degree=2)
        for r in range(1, 5):
            assert closedness_integral(moyal, r, u, v).is_zero()
    u = random_gauss(rng, space, max_degree=2)
    assert closedness_integral(moyal, 3, u, u).is_zero()


def test_closedness_order_one_is_poisson_for_any_product(space):
    # integral of {u,v} is a total divergence, so it dies for every product.
    rng = random.Random(13)
    from test_gaussfn import random_gauss

    s = moyal_construct(space, 2)
    u = random_gauss(rng, space, max_degree=2)
    v = random_gauss(rng, space, max_degree=2)
    bracket = poisson_cochain(space).apply(u, v)
    assert gauss_integrate_exact(bracket).is_zero()
    assert closedness_integral(s, 1, u, v) == gauss_integrate_exact(bracket) * 2


def test_closed_product_integral_identity(moyal, space):
    # strong closedness in product form: integral of u*v equals integral of uv
    # order by order beyond nu^0.
    from test_gaussfn import random_gauss

    rng = random.Random(17)
    u = random_gauss(rng, space, max_degree=2)
    v = random_gauss(rng, space, max_degree=2)
    prod = star_multiply(moyal, u, v)
    for k, coeff in prod.items():
        got = gauss_integrate_exact(coeff)
        if k == 0:
            assert got == gauss_integrate_exact(u * v)
        else:
            assert got.is_zero()


def test_conformality_canonical(space):
    d = canonical_euler(space)
    assert conformality_defect(d.x) == {}


def test_conformality_examples(space):
    q_dq = DiffOp.mult(Poly.variable(space, "q1")).compose(DiffOp.partial(space, "q1"))
    # q dq alone is conformal in one canonical pair: d(i_X Omega) = dq^dp.
    assert conformality_defect(q_dq) == {}
    full_euler = DiffOp.zero(space)
    for name in space.variables:
        full_euler = full_euler + DiffOp.mult(Poly.variable(space, name)).compose(
            DiffOp.partial(space, name)
        )
    assert conformality_defect(full_euler) != {}
    with pytest.raises(ValueError):
        EulerDerivation(space, full_euler)


def test_homogeneity_integral(space):
    # integral of X u = -n * integral of u for the conformal field.
    from test_gaussfn import random_gauss

    rng = random.Random(19)
    for n in (1, 2):
        sp = PhaseSpace(n)
        d = canonical_euler(sp)
        for _ in range(4):
            u = random_gauss(rng, sp, max_degree=2)
            lhs = gauss_integrate_exact(d.x.apply(u))
            rhs = gauss_integrate_exact(u) * (-n)
            assert lhs == rhs


def test_moyal_euler_derivation(moyal, space):
    d = canonical_euler(space)
    q = Poly.variable(space, "q1")
    p = Poly.variable(space, "p1")
    assert derivation_residual(moyal, d, q, p).is_zero()
    rng = random.Random(23)
    from test_gaussfn import random_gauss

    for _ in range(3):
        u = random_gauss(rng, space, max_degree=2)
        v = random_gauss(rng, space, max_degree=2)
        assert derivation_residual(moyal, d, u, v).is_zero()
    one = Poly.constant(space, 1)
    v = random_poly(rng, space)
    assert derivation_residual(moyal, d, one, v).is_zero()


def test_derivation_with_corrections_changes_residual(moyal, space):
    # a generic correction term breaks the derivation property, so the
    # residual detector must see it.
    dq = DiffOp.partial(space, "q1")
    q = Poly.variable(space, "q1")
    d = EulerDerivation(
        space, canonical_euler(space).x, corrections={1: DiffOp.mult(q).compose(dq)}
    )
    p = Poly.variable(space, "p1")
    res = derivation_residual(moyal, d, q * q, p)
    assert not res.is_zero()

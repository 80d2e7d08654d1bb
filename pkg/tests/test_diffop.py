import itertools
import random
from fractions import Fraction as F

import pytest

from conftest import random_poly
from startrace.diffop import BiDiffOp, DiffOp
from startrace.gaussfn import gauss_integrate_exact
from startrace.poly import PhaseSpace, Poly, poisson_bracket


@pytest.fixture
def space():
    return PhaseSpace(1)


def random_diffop(rng, space, max_order=3, n_terms=3, coeff_degree=2):
    coeffs = {}
    for _ in range(n_terms):
        alpha = [0] * space.dim
        for _ in range(rng.randint(0, max_order)):
            alpha[rng.randrange(space.dim)] += 1
        poly = random_poly(rng, space, max_degree=coeff_degree, n_terms=2)
        key = tuple(alpha)
        coeffs[key] = coeffs.get(key, Poly.zero(space)) + poly
    return DiffOp(space, coeffs)


def monomial_basis(space, max_degree):
    for exps in itertools.product(range(max_degree + 1), repeat=space.dim):
        if sum(exps) <= max_degree:
            yield Poly.monomial(space, exps)


def test_apply_examples(space):
    q = Poly.variable(space, "q1")
    p = Poly.variable(space, "p1")
    q_dq = DiffOp.mult(q).compose(DiffOp.partial(space, "q1"))
    assert q_dq.apply(q * q) == 2 * q * q
    f = random_poly(random.Random(2), space)
    assert DiffOp.identity(space).apply(f) == f
    dq_dp = DiffOp(space, {(1, 1): Poly.constant(space, 1)})
    assert dq_dp.apply(q * p) == Poly.constant(space, 1)


def test_compose_canonical_commutation(space):
    dq = DiffOp.partial(space, "q1")
    q = DiffOp.mult(Poly.variable(space, "q1"))
    got = dq.compose(q)
    want = DiffOp.identity(space) + q.compose(dq)
    assert got == want


def test_compose_identity(space):
    a = random_diffop(random.Random(5), space)
    assert a.compose(DiffOp.identity(space)) == a
    assert DiffOp.identity(space).compose(a) == a


def test_compose_euler_square(space):
    q = Poly.variable(space, "q1")
    euler = DiffOp.mult(q).compose(DiffOp.partial(space, "q1"))
    got = euler.compose(euler)
    want = DiffOp(
        space,
        {(1, 0): q, (2, 0): q * q},
    )
    assert got == want
    # oracle: composition must agree with sequential application
    for mono in monomial_basis(space, 4):
        assert got.apply(mono) == euler.apply(euler.apply(mono))


def test_compose_agrees_with_sequential_apply():
    rng = random.Random(13)
    for n in (1, 2):
        space = PhaseSpace(n)
        for _ in range(8):
            a = random_diffop(rng, space)
            b = random_diffop(rng, space)
            ab = a.compose(b)
            for mono in monomial_basis(space, 3 if n == 2 else 6):
                assert ab.apply(mono) == a.apply(b.apply(mono))


def test_adjoint_examples(space):
    dq = DiffOp.partial(space, "q1")
    assert dq.adjoint() == -1 * dq
    assert DiffOp.identity(space).adjoint() == DiffOp.identity(space)
    q = Poly.variable(space, "q1")
    q_dq = DiffOp.mult(q).compose(dq)
    want = DiffOp(space, {(0, 0): Poly.constant(space, -1), (1, 0): -q})
    assert q_dq.adjoint() == want


def test_adjoint_duality_and_involution(space):
    from test_gaussfn import random_gauss

    rng = random.Random(17)
    for _ in range(6):
        a = random_diffop(rng, space)
        assert a.adjoint().adjoint() == a
        f, g = random_gauss(rng, space), random_gauss(rng, space)
        lhs = gauss_integrate_exact(a.apply(f) * g)
        rhs = gauss_integrate_exact(f * a.adjoint().apply(g))
        assert (lhs - rhs).is_zero()


def test_bidiff_apply_examples(space):
    q = Poly.variable(space, "q1")
    p = Poly.variable(space, "p1")
    b = BiDiffOp(space, {((1, 0), (0, 1)): Poly.constant(space, 1)})
    assert b.apply(q, p) == Poly.constant(space, 1)
    u = random_poly(random.Random(7), space)
    v = random_poly(random.Random(8), space)
    assert BiDiffOp.product_cochain(space).apply(u, v) == u * v


def test_poisson_cochain_matches_bracket():
    rng = random.Random(9)
    for n in (1, 2):
        space = PhaseSpace(n)
        coeffs = {}
        one = Poly.constant(space, 1)
        for i in range(n):
            ei_q = tuple(1 if k == i else 0 for k in range(space.dim))
            ei_p = tuple(1 if k == n + i else 0 for k in range(space.dim))
            coeffs[(ei_p, ei_q)] = coeffs.get((ei_p, ei_q), Poly.zero(space)) + one
            coeffs[(ei_q, ei_p)] = coeffs.get((ei_q, ei_p), Poly.zero(space)) - one
        cochain = BiDiffOp(space, coeffs)
        for _ in range(6):
            u = random_poly(rng, space)
            v = random_poly(rng, space)
            assert cochain.apply(u, v) == poisson_bracket(u, v)


def test_antisym(space):
    one = Poly.constant(space, 1)
    sym = BiDiffOp(space, {((1, 0), (1, 0)): one})
    assert sym.antisym().is_zero()
    anti = BiDiffOp(space, {((1, 0), (0, 1)): one, ((0, 1), (1, 0)): -one})
    assert anti.antisym() == anti + anti
    rng = random.Random(21)
    u = random_poly(rng, space)
    v = random_poly(rng, space)
    b = BiDiffOp(space, {((2, 0), (0, 1)): random_poly(rng, space, 2)})
    assert b.antisym().apply(u, v) == b.apply(u, v) - b.apply(v, u)


def test_conjugate_identity(space):
    rng = random.Random(25)
    ident = DiffOp.identity(space)
    b = BiDiffOp(space, {((1, 0), (0, 2)): random_poly(rng, space, 2)})
    assert b.conjugate(ident, ident, ident) == b


def test_conjugate_leibniz(space):
    one = Poly.constant(space, 1)
    b = BiDiffOp.product_cochain(space)
    dq = DiffOp.partial(space, "q1")
    ident = DiffOp.identity(space)
    got = b.conjugate(dq, ident, ident)
    want = BiDiffOp(space, {((1, 0), (0, 0)): one, ((0, 0), (1, 0)): one})
    assert got == want


def test_conjugate_agrees_with_application():
    rng = random.Random(27)
    for n in (1, 2):
        space = PhaseSpace(n)
        for _ in range(4):
            b = BiDiffOp(
                space,
                {
                    (
                        tuple(rng.randint(0, 1) for _ in range(space.dim)),
                        tuple(rng.randint(0, 1) for _ in range(space.dim)),
                    ): random_poly(rng, space, 2, n_terms=2)
                },
            )
            s_out = random_diffop(rng, space, max_order=2, n_terms=2)
            s_left = random_diffop(rng, space, max_order=2, n_terms=2)
            s_right = random_diffop(rng, space, max_order=2, n_terms=2)
            conj = b.conjugate(s_out, s_left, s_right)
            for _ in range(3):
                u = random_poly(rng, space, 3, n_terms=3)
                v = random_poly(rng, space, 3, n_terms=3)
                want = s_out.apply(b.apply(s_left.apply(u), s_right.apply(v)))
                assert conj.apply(u, v) == want

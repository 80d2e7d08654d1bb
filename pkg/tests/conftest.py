from fractions import Fraction

from startrace.poly import PhaseSpace, Poly


def random_poly(rng, space, max_degree=3, n_terms=4, allow_constant=True):
    """Small random polynomial with coefficients in {-3..3}\\{0}."""
    terms = {}
    for _ in range(n_terms):
        exps = [0] * space.dim
        for _ in range(rng.randint(0 if allow_constant else 1, max_degree)):
            exps[rng.randrange(space.dim)] += 1
        c = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 1, 2]))
        key = tuple(exps)
        terms[key] = terms.get(key, Fraction(0)) + c
    return Poly(space, terms)


def rational_rotation(space, i=0):
    """Orthogonal symplectic matrix rotating the i-th canonical plane by
    the Pythagorean angle with cos = 3/5, sin = 4/5."""
    from startrace.poly import mat_identity

    c, s = Fraction(3, 5), Fraction(4, 5)
    m = mat_identity(space.dim)
    qi, pi = i, space.n + i
    m[qi][qi], m[qi][pi] = c, s
    m[pi][qi], m[pi][pi] = -s, c
    return m


def tapered_bump(points, dimension, support, half_width=3.0, margin_cells=14):
    """Gentle unit-integral bump on a standard [-3, 3] box."""
    from startrace.gsdecomp import tapered_generate

    return tapered_generate(
        dimension, half_width, points, support, margin_cells=margin_cells
    )

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahsector.errors import InvalidDimensionError
from ahsector.indicial import (
    Block,
    BlockSet,
    block_constant,
    block_indicial_poly,
    block_indicial_roots,
    brute_force_roots,
    fredholm_weight_window,
    indicial_radius,
    lichnerowicz_indicial_roots,
    principal_sqrt,
    scalar_indicial_poly,
    scalar_indicial_roots,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
lambdas = st.builds(complex, finite, finite)
dims = st.integers(2, 12)


@pytest.mark.parametrize("n", range(2, 9))
def test_scalar_roots_at_zero_are_zero_and_n_minus_one(n):
    lo, hi = scalar_indicial_roots(n, 0.0)
    assert lo == 0.0
    assert hi == n - 1


@pytest.mark.parametrize("n", range(2, 9))
def test_scalar_radius_is_half_of_n_minus_one(n):
    assert indicial_radius(BlockSet.SCALAR_ONLY, n) == pytest.approx((n - 1) / 2, abs=1e-15)


def test_scalar_roots_for_n3_lambda1():
    lo, hi = scalar_indicial_roots(3, 1.0)
    assert lo == pytest.approx(1 - math.sqrt(2), abs=1e-14)
    assert hi == pytest.approx(1 + math.sqrt(2), abs=1e-14)


def test_negative_discriminant_gives_conjugate_pair_on_principal_branch():
    lo, hi = scalar_indicial_roots(3, -2.0)
    # disc = 4 - 8 = -4 -> sqrt = 2i on the cut
    assert lo == pytest.approx(1 - 1j)
    assert hi == pytest.approx(1 + 1j)


def test_principal_sqrt_on_both_sides_of_cut():
    assert principal_sqrt(complex(-4.0, 0.0)) == 2j
    assert principal_sqrt(complex(-4.0, -0.0)) == 2j
    assert principal_sqrt(-4 + 1e-300j).real >= 0


def test_block_constants():
    assert [block_constant(b, 3) for b in ("Scalar", "V1", "V2", "V3", "Trace")] == [0, 4, 3, 0, 4]
    assert block_constant(Block.V2, 5) == 5


def test_v2_roots_n3_lambda0():
    lo, hi = block_indicial_roots(Block.V2, 3, 0.0)
    assert lo == pytest.approx(-1.0, abs=1e-15)
    assert hi == pytest.approx(3.0, abs=1e-15)


def test_v1_roots_n3_lambda0():
    lo, hi = block_indicial_roots(Block.V1, 3, 0.0)
    assert lo == pytest.approx(1 - math.sqrt(5), abs=1e-14)
    assert hi == pytest.approx(1 + math.sqrt(5), abs=1e-14)


def test_v3_matches_scalar_and_trace_matches_v1():
    for lam in (0.0, 1.5 - 2j, -7.0):
        v1, v2, v3, tr = lichnerowicz_indicial_roots(4, lam)
        assert tuple(v3) == tuple(scalar_indicial_roots(4, lam))
        assert tuple(tr) == tuple(v1)


def test_lichnerowicz_window_n3_lambda0_bound_by_v3():
    w = fredholm_weight_window(BlockSet.LICHNEROWICZ_ALL, 3, 0.0)
    assert (w.mu_min, w.mu_max) == (0.0, 2.0)
    assert w.contains(1.0) and not w.contains(0.0) and not w.contains(2.0)


def test_window_empty_when_discriminant_negative():
    w = fredholm_weight_window(BlockSet.SCALAR_ONLY, 3, -5.0)
    assert w.empty
    assert (w.mu_min, w.mu_max) == (1.0, 1.0)
    assert not w.contains(1.0)


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5, True])
def test_invalid_dimension(bad):
    with pytest.raises(InvalidDimensionError):
        scalar_indicial_roots(bad, 0.0)


def test_polynomial_call_and_discriminant():
    p = scalar_indicial_poly(3, 1.0)
    assert p(0.0) == 1.0
    assert p.discriminant == 8.0


@settings(max_examples=200, deadline=None)
@given(n=dims, lam=lambdas, block=st.sampled_from(list(Block)))
def test_roots_solve_their_polynomial(n, lam, block):
    p = block_indicial_poly(block, n, lam)
    scale = 1 + abs(lam) + n * n
    for s in p.roots():
        assert abs(p(s)) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(n=dims, lam=lambdas, block=st.sampled_from(list(Block)))
def test_roots_agree_with_companion_matrix(n, lam, block):
    p = block_indicial_poly(block, n, lam)
    mine = np.array(list(p.roots()))
    brute = brute_force_roots(p)
    err = min(np.max(np.abs(mine - brute)), np.max(np.abs(mine - brute[::-1])))
    assert err <= 1e-9 * (1 + abs(cmath.sqrt(p.discriminant)))


@settings(max_examples=200, deadline=None)
@given(n=dims, lam=lambdas, block=st.sampled_from(list(Block)))
def test_roots_symmetric_about_centre(n, lam, block):
    lo, hi = block_indicial_roots(block, n, lam)
    assert abs(lo + hi - (n - 1)) <= 1e-12 * (1 + abs(hi))
    assert lo.real <= hi.real


@settings(max_examples=200, deadline=None)
@given(n=dims, lam=lambdas)
def test_window_is_min_over_blocks(n, lam):
    full = fredholm_weight_window(BlockSet.LICHNEROWICZ_ALL, n, lam)
    for block in (Block.V1, Block.V2, Block.V3):
        pair = block_indicial_roots(block, n, lam)
        half = (pair.plus - pair.minus).real / 2
        assert full.radius <= max(half, 0.0) + 1e-12

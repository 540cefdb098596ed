import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahsector.errors import InvalidParameterError
from ahsector.sectors import (
    SectorGrid,
    SectorSpec,
    interior_ray_angles,
    max_sector_halfangle_excess,
    sector_boundary_samples,
    sector_contains,
    sector_inf_re_sqrt,
    translated_sector,
)


def test_half_plane_contains_right_points_only():
    s = SectorSpec(0.0, 0.0)
    assert s.contains(1.0)
    assert s.contains(1j * 5 + 1e-9)
    assert not s.contains(-1.0)
    assert not s.contains(0.0)


def test_vertex_excluded_and_translation():
    s = translated_sector(SectorSpec(0.0, 0.3), 2.5)
    assert s.vertex == 2.5
    assert not s.contains(2.5)
    assert s.contains(3.0)


def test_excess_out_of_range():
    with pytest.raises(InvalidParameterError):
        SectorSpec(0.0, math.pi / 2)
    with pytest.raises(InvalidParameterError):
        SectorSpec(0.0, -0.1)


def test_boundary_samples_layout():
    s = SectorSpec(1.0, 0.2)
    z = sector_boundary_samples(s, 0.1, 10.0, 5)
    assert z.shape == (10,)
    np.testing.assert_allclose(z[5:], np.conj(z[:5]) + 0j, atol=0)
    np.testing.assert_allclose(np.abs(z[:5] - 1.0), np.geomspace(0.1, 10, 5))
    np.testing.assert_allclose(np.angle(z[:5] - 1.0), s.opening)


def test_boundary_samples_degenerate_range_and_errors():
    z = sector_boundary_samples(SectorSpec(), 2.0, 2.0, 3)
    np.testing.assert_allclose(np.abs(z), 2.0)
    with pytest.raises(InvalidParameterError):
        sector_boundary_samples(SectorSpec(), 0.0, 1.0, 3)
    with pytest.raises(InvalidParameterError):
        sector_boundary_samples(SectorSpec(), 1.0, math.inf, 3)


def test_interior_rays():
    a = interior_ray_angles(SectorSpec(0.0, math.pi / 4))
    assert a == pytest.approx((0.0, 3 * math.pi / 8, -3 * math.pi / 8))


def test_sector_roundtrip():
    s = SectorSpec(1 - 2j, 0.4)
    assert SectorSpec.from_dict(s.to_dict()) == s


# The admissible region Re sqrt(z) > k is the exterior of a parabola; working
# it out for rays from A^2 with k = (1 - eps) A gives delta* = arccos(1 - eps)
# independently of A.
@pytest.mark.parametrize("A", [1.0, 2.0, 5.0, 0.3])
@pytest.mark.parametrize("eps", [0.1, 0.3, 0.5, 0.9])
def test_certified_excess_matches_closed_form(A, eps):
    cert = max_sector_halfangle_excess(A, eps)
    exact = math.acos(1 - eps)
    assert abs(cert.delta - exact) <= 2e-4
    assert cert.certificate > cert.threshold == pytest.approx((1 - eps) * A)


def test_frozen_values():
    assert max_sector_halfangle_excess(2.0, 0.1).delta == pytest.approx(0.4510, abs=2e-4)
    assert max_sector_halfangle_excess(2.0, 0.3).delta == pytest.approx(0.7954, abs=2e-4)
    assert max_sector_halfangle_excess(2.0, 0.5).delta == pytest.approx(1.0472, abs=2e-4)


def test_monotone_in_epsilon():
    ds = [max_sector_halfangle_excess(1.0, e).delta for e in (0.05, 0.1, 0.3, 0.5, 0.8)]
    assert ds == sorted(ds)


def test_finer_grid_finds_no_violation():
    cert = max_sector_halfangle_excess(5.0, 0.3)
    assert sector_inf_re_sqrt(5.0, cert.delta, cert.grid.scaled(4)) > cert.threshold


def test_invalid_certification_inputs():
    with pytest.raises(InvalidParameterError):
        max_sector_halfangle_excess(0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        max_sector_halfangle_excess(1.0, 1.0)
    with pytest.raises(InvalidParameterError):
        max_sector_halfangle_excess(1.0, 0.0)


def test_half_plane_infimum_is_A():
    assert sector_inf_re_sqrt(2.0, 0.0) == pytest.approx(2.0, rel=1e-6)


def test_certificate_unpacks():
    delta, value = max_sector_halfangle_excess(1.0, 0.5)
    assert delta > 0 and value > 0.5


@settings(max_examples=200, deadline=None)
@given(
    vertex=st.floats(-10, 10),
    delta=st.floats(0, 1.5),
    r=st.floats(1e-6, 1e6),
    phi=st.floats(-math.pi, math.pi),
)
def test_contains_matches_angle(vertex, delta, r, phi):
    s = SectorSpec(vertex, delta)
    lam = vertex + r * cmath.exp(1j * phi)
    d = lam - vertex
    if d == 0:
        return
    assert sector_contains(s, lam) == (abs(cmath.phase(d)) < math.pi / 2 + delta)


@settings(max_examples=50, deadline=None)
@given(A=st.floats(0.1, 20), eps=st.floats(0.05, 0.95))
def test_sampled_lambdas_in_certified_sector_satisfy_bound(A, eps):
    cert = max_sector_halfangle_excess(A, eps, SectorGrid(count=200))
    rng = np.random.default_rng(0)
    r = np.exp(rng.uniform(-8, 12, 400))
    phi = rng.uniform(-1, 1, 400) * (math.pi / 2 + cert.delta)
    vals = np.sqrt(A * A + 4 * r * np.exp(1j * phi)).real
    # tolerance reflects the bisection resolution of delta
    assert vals.min() > (1 - eps) * A - 1e-3 * A

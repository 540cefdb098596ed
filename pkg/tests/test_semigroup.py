import dataclasses
import math

import numpy as np
import pytest
from scipy import integrate

from ahsector.errors import ContourError, InvalidParameterError
from ahsector.operators import Grid1D, assemble_lichnerowicz_block, assemble_scalar_1d
from ahsector.sectors import SectorSpec
from ahsector.semigroup import (
    ContourShape,
    ContourSpec,
    apply_semigroup,
    build_contour,
    fourier_semigroup,
    h3_bump_cross_check,
    h3_kernel_pde_residual,
    h3_radial_heat_kernel,
    reference_step,
)

SECTOR = SectorSpec(0.0, 0.6)


@pytest.fixture(scope="module")
def periodic():
    return assemble_scalar_1d(3, 1.0, Grid1D(0.0, 12.0, 0.1), "Periodic")


def gaussian(op, width=1.0):
    t = op.coordinates
    return np.exp(-((t - t.mean()) ** 2) / (2 * width**2)).astype(complex)


# --------------------------------------------------------------------------- contours


@pytest.mark.parametrize("shape", list(ContourShape))
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_scalar_exponential_reproduced(shape, t):
    c = build_contour(SECTOR, t, 64, shape)
    for z in (-1.0, -25.0 + 3j, -0.2 - 0.1j, -400.0):
        assert abs(c.apply_scalar(z) - np.exp(z * t)) <= 1e-8


@pytest.mark.parametrize("shape", list(ContourShape))
def test_contour_closed_under_conjugation(shape):
    c = build_contour(SECTOR, 1.0, 32, shape)
    np.testing.assert_allclose(np.sort_complex(c.nodes), np.sort_complex(np.conj(c.nodes)), atol=1e-12)
    assert len(c) <= 64


def test_error_falls_when_nodes_double():
    def err(nc):
        c = build_contour(SECTOR, 1.0, nc)
        return max(abs(c.apply_scalar(z) - np.exp(z)) for z in (-1.0, -5 + 2j, -20.0))

    assert err(8) / err(16) > 10


def test_contour_json_roundtrip():
    c = build_contour(SECTOR, 2.0, 16, "Parabolic")
    d = ContourSpec.from_json(c.to_json())
    np.testing.assert_array_equal(d.nodes, c.nodes)
    np.testing.assert_array_equal(d.weights, c.weights)
    assert d.shape is ContourShape.PARABOLIC and d.t == 2.0


def test_contour_rejects_half_plane_and_bad_time():
    with pytest.raises(InvalidParameterError, match="delta > 0"):
        build_contour(SectorSpec(0.0, 0.0), 1.0)
    with pytest.raises(InvalidParameterError):
        build_contour(SECTOR, 0.0)
    with pytest.raises(InvalidParameterError):
        build_contour(SECTOR, 1.0, 1)


# --------------------------------------------------------------------------- semigroup on operators


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_contour_matches_fourier(periodic, t):
    u0 = gaussian(periodic)
    u = apply_semigroup(periodic, t, u0, build_contour(SECTOR, t))
    ref = fourier_semigroup(periodic, t, u0)
    assert np.linalg.norm(u - ref) <= 1e-8 * np.linalg.norm(ref)


def test_real_symmetric_operator_gives_real_output(periodic):
    u = apply_semigroup(periodic, 1.0, gaussian(periodic), build_contour(SECTOR, 1.0))
    assert np.max(np.abs(u.imag)) <= 1e-10 * np.max(np.abs(u))


def test_linearity(periodic):
    c = build_contour(SECTOR, 0.5)
    a = gaussian(periodic, 1.0)
    b = gaussian(periodic, 0.3) * (1 + 1j)
    lhs = apply_semigroup(periodic, 0.5, 2 * a - 3j * b, c)
    rhs = 2 * apply_semigroup(periodic, 0.5, a, c) - 3j * apply_semigroup(periodic, 0.5, b, c)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)


def test_contour_for_other_time_is_rebuilt(periodic):
    u0 = gaussian(periodic)
    a = apply_semigroup(periodic, 2.0, u0, build_contour(SECTOR, 0.3))
    b = apply_semigroup(periodic, 2.0, u0, build_contour(SECTOR, 2.0))
    np.testing.assert_array_equal(a, b)


def test_semigroup_property_dirichlet():
    op = assemble_scalar_1d(3, 0.4, Grid1D(0.0, 8.0, 0.1), "Dirichlet")
    u0 = gaussian(op)
    s, t = 0.4, 0.7
    one = apply_semigroup(op, s + t, u0, build_contour(SECTOR, s + t))
    two = apply_semigroup(op, t, apply_semigroup(op, s, u0, build_contour(SECTOR, s)), build_contour(SECTOR, t))
    assert np.linalg.norm(one - two) <= 1e-9 * np.linalg.norm(one)


def test_node_on_spectrum_is_reported(periodic):
    c = build_contour(SECTOR, 1.0, 16)
    bad = dataclasses.replace(c, nodes=np.r_[c.nodes, -1.0], weights=np.r_[c.weights, 1.0])
    with pytest.raises(ContourError) as info:
        apply_semigroup(periodic, 1.0, gaussian(periodic), bad)
    assert info.value.index == len(c)


def test_fourier_needs_symbol():
    op = assemble_scalar_1d(3, 1.0, Grid1D(0.0, 4.0, 0.1), "Dirichlet")
    with pytest.raises(InvalidParameterError):
        fourier_semigroup(op, 1.0, np.ones(op.dim))


@pytest.mark.parametrize("scheme, order", [("ImplicitEuler", 1.0), ("CrankNicolson", 2.0)])
def test_time_stepping_order(periodic, scheme, order):
    u0 = gaussian(periodic)
    ref = fourier_semigroup(periodic, 1.0, u0)
    errs = [np.linalg.norm(reference_step(periodic, 1.0, u0, scheme, n) - ref) for n in (64, 128, 256)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(rates, order, atol=0.15)


def test_lichnerowicz_block_semigroup_decays():
    op = assemble_lichnerowicz_block("V2", 3, 1.0, Grid1D(0.0, 12.0, 0.1), "Periodic")
    u0 = gaussian(op)
    u = apply_semigroup(op, 1.0, u0, build_contour(SECTOR, 1.0))
    assert np.linalg.norm(u - fourier_semigroup(op, 1.0, u0)) <= 1e-8 * np.linalg.norm(u)
    assert np.linalg.norm(u) < np.linalg.norm(u0)


# --------------------------------------------------------------------------- hyperbolic heat kernel


def test_kernel_value_at_origin():
    for t in (0.1, 1.0, 3.0):
        assert h3_radial_heat_kernel(t, 0.0) == pytest.approx((4 * math.pi * t) ** -1.5 * math.exp(-t), rel=1e-15)


def test_kernel_has_unit_mass():
    for t in (0.2, 1.0, 2.0):
        f = lambda r: 4 * math.pi * math.sinh(r) ** 2 * h3_radial_heat_kernel(t, r)  # noqa: E731
        mass, _ = integrate.quad(f, 0, 40 + 20 * t, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-8)


def test_kernel_rejects_nonpositive_time():
    with pytest.raises(InvalidParameterError):
        h3_radial_heat_kernel(0.0, 1.0)


def test_kernel_residual_is_second_order():
    r1 = h3_kernel_pde_residual(1.0, 0.1)
    r2 = h3_kernel_pde_residual(1.0, 0.05)
    assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.2)


def test_bump_evolves_to_later_kernel():
    res = h3_bump_cross_check()
    assert res["peak_rel_error"] <= 1e-3
    assert res["sup_rel_error"] <= 1e-3

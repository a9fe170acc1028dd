"""Tests for the overlapping-beam-array grids, fields, and captures."""

import math

import numpy as np
import pytest
from scipy.special import erf
from scipy.stats import qmc

from fsqkd.mathkern import DomainError, QuadratureSpec, quad_2d
from fsqkd.modes import ApertureSpec, BeamParams, OpticalGeometry, gaussian_input_field
from fsqkd.ogba import (
    FieldSample,
    GridConfig,
    build_pixel_grid,
    capture_matrices,
    gaussian_output_field,
    grid_interference,
    interference_power,
    pixel_capture,
    pixel_crosstalk,
    rectangle_capture,
    sample_output_field,
)

WAVELENGTH = 1.55e-6
RANGE = 1000.0
SIDE = math.sqrt(math.pi) * 0.07  # same pupil area as a 7 cm circle


@pytest.fixture
def square_geom():
    ap = ApertureSpec.hard_square(SIDE)
    return OpticalGeometry(WAVELENGTH, RANGE, ap, ap)


@pytest.fixture
def beam():
    return BeamParams(SIDE / 8)


class TestGridConstruction:
    def test_three_by_three(self):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE / 3)
        assert grid.n_pixels == 9
        reps = {(p.u, p.v): p.multiplicity for p in grid.pixels}
        assert reps == {(0, 0): 1, (1, 0): 4, (1, 1): 4}
        assert sum(p.multiplicity for p in grid.pixels) == 9

    def test_two_by_two(self):
        grid = build_pixel_grid(GridConfig.CENTERED_2X2, SIDE, l_d=SIDE / 2)
        assert grid.n_pixels == 4
        assert len(grid.pixels) == 1
        assert grid.pixels[0].multiplicity == 4

    def test_single_pixel(self):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE)
        assert grid.n_pixels == 1
        assert grid.pixels[0].multiplicity == 1

    def test_oversized_pixel_clipped_to_aperture(self):
        grid = build_pixel_grid("centered_single", SIDE, l_d=1.7 * SIDE)
        assert grid.n_pixels == 1
        pix = grid.pixels[0]
        assert pix.x_lo == pytest.approx(-SIDE / 2, abs=1e-15)
        assert pix.x_hi == pytest.approx(SIDE / 2, abs=1e-15)

    def test_parity_preserved_for_fractional_ratio(self):
        # centered_single keeps an odd slot count whatever l_r/l_d is
        assert len(build_pixel_grid("centered_single", SIDE, l_d=SIDE / 4.5).x_beams) == 5
        assert len(build_pixel_grid("centered_single", SIDE, l_d=SIDE / 3.5).x_beams) == 5
        assert len(build_pixel_grid("centered_2x2", SIDE, l_d=SIDE / 2.5).x_beams) % 2 == 0

    def test_outer_slot_clipping(self):
        l_d = SIDE / 3.5
        grid = build_pixel_grid("centered_single", SIDE, l_d=l_d)
        width = grid.x_edges[-1] - grid.x_edges[-2]
        assert width == pytest.approx(0.25 * l_d, abs=1e-12)
        # the clipped slot's beam still sits at the unclipped pixel center
        assert grid.x_beams[-1] > SIDE / 2

    def test_one_by_two(self):
        l_s = SIDE / math.sqrt(2)
        grid = build_pixel_grid("one_by_two", SIDE, l_o=0.2 * l_s)
        assert grid.n_pixels == 2
        assert len(grid.pixels) == 2
        for pix in grid.pixels:
            assert pix.multiplicity == 1
            assert pix.x_hi - pix.x_lo == pytest.approx(l_s, abs=1e-15)
            assert pix.y_hi - pix.y_lo == pytest.approx(l_s, abs=1e-15)
        assert grid.pixels[0].beam_x == -0.2 * l_s
        assert grid.pixels[1].beam_x == 0.2 * l_s

    def test_ratio_snapped_to_integer(self):
        grid = build_pixel_grid("centered_single", 1.0, l_d=1.0 / 3.0)
        assert len(grid.x_beams) == 3

    def test_validation(self):
        with pytest.raises(DomainError):
            build_pixel_grid("centered_single", SIDE)  # l_d missing
        with pytest.raises(DomainError):
            build_pixel_grid("centered_single", SIDE, l_d=-0.01)
        with pytest.raises(DomainError):
            build_pixel_grid("one_by_two", SIDE)  # l_o missing
        with pytest.raises(DomainError):
            build_pixel_grid("not_a_config", SIDE, l_d=0.01)

    def test_slot_index_lookup(self):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE / 3)
        assert grid.slot_index("x", 0) == 1
        with pytest.raises(DomainError):
            grid.slot_index("x", 7)


def fresnel_oracle_square(xp, yp, params, geom, tol=1e-9):
    """Brute-force 2-D quadrature of the square-pupil diffraction integral."""
    k = geom.wavenumber
    L = geom.range_m
    lam = geom.wavelength_m
    h = geom.transmitter.dimension_m / 2
    spec = QuadratureSpec(abs_tol=tol, rel_tol=tol, max_subdivisions=6000)

    def integrand(x, y):
        field = gaussian_input_field(x, y, params, geom)
        prop = np.exp(1j * k * ((x - xp) ** 2 + (y - yp) ** 2) / (2 * L))
        return field * prop

    val = quad_2d(integrand, -h, h, -h, h, spec)
    return val * np.exp(1j * k * L) / (1j * lam * L)


class TestOutputField:
    def test_matches_fresnel_oracle(self, square_geom, beam):
        for xp, yp in [(0.013, 0.007), (-0.031, 0.022)]:
            oracle = fresnel_oracle_square(xp, yp, beam, square_geom)
            ours = gaussian_output_field(xp, yp, beam, square_geom)
            assert abs(ours - oracle) / abs(oracle) < 1e-6

    def test_origin_closed_form(self, square_geom, beam):
        a = beam.beam_width_m
        b = SIDE / (2 * math.sqrt(2) * a)
        expect = 2 * math.sqrt(math.pi) * a / (WAVELENGTH * RANGE) * erf(b) ** 2
        got = abs(gaussian_output_field(0.0, 0.0, beam, square_geom))
        assert got == pytest.approx(expect, rel=1e-12)

    def test_square_symmetry(self, square_geom, beam):
        v = abs(gaussian_output_field(0.01, 0.02, beam, square_geom))
        assert abs(gaussian_output_field(0.02, 0.01, beam, square_geom)) == pytest.approx(v, rel=1e-13)
        assert abs(gaussian_output_field(-0.01, 0.02, beam, square_geom)) == pytest.approx(v, rel=1e-13)


class TestFieldSample:
    def test_sampling_matches_raw_field(self, square_geom, beam):
        s = sample_output_field(0.013, -0.007, beam, square_geom)
        assert s.position == (0.013, -0.007)
        assert s.amplitude == gaussian_output_field(0.013, -0.007, beam, square_geom)
        assert s.intensity == pytest.approx(abs(s.amplitude) ** 2, rel=1e-15)

    def test_rejects_non_finite_values(self):
        with pytest.raises(DomainError):
            FieldSample(math.nan, 0.0, 1.0 + 0j)
        with pytest.raises(DomainError):
            FieldSample(0.0, math.inf, 1.0 + 0j)
        with pytest.raises(DomainError):
            FieldSample(0.0, 0.0, complex(math.nan, 0.0))
        with pytest.raises(DomainError):
            FieldSample(0.0, 0.0, complex(0.0, math.inf))

    def test_immutable(self):
        s = FieldSample(0.0, 0.0, 0.5 + 0.5j)
        with pytest.raises(Exception):
            s.x_m = 1.0


class TestRectangleCapture:
    def test_against_direct_quadrature(self, square_geom, beam):
        l_d = SIDE / 3

        def dens(x, y):
            return np.abs(gaussian_output_field(x, y, beam, square_geom)) ** 2

        fast = rectangle_capture(-l_d / 2, l_d / 2, -l_d / 2, l_d / 2, beam, square_geom)
        spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11, max_subdivisions=2000)
        ref = quad_2d(dens, -l_d / 2, l_d / 2, -l_d / 2, l_d / 2, spec)
        assert fast == pytest.approx(ref.real, rel=1e-9)

    def test_against_quasi_monte_carlo(self, square_geom, beam):
        l_d = SIDE / 3

        def dens(x, y):
            return np.abs(gaussian_output_field(x, y, beam, square_geom)) ** 2

        fast = rectangle_capture(-l_d / 2, l_d / 2, -l_d / 2, l_d / 2, beam, square_geom)
        sob = qmc.Sobol(d=2, scramble=True, seed=12345)
        pts = sob.random(2**19)
        xs = (pts[:, 0] - 0.5) * l_d
        ys = (pts[:, 1] - 0.5) * l_d
        mc = float(np.mean(dens(xs, ys))) * l_d * l_d
        assert mc == pytest.approx(fast, rel=3e-4)

    def test_rotation_about_beam_center(self, square_geom, beam):
        # square symmetry: rotating an off-center rectangle 90 degrees about
        # the beam axis leaves the captured fraction unchanged
        bx, by = 0.01, -0.005
        r1 = rectangle_capture(bx - 0.01, bx + 0.02, by - 0.015, by + 0.005,
                               beam, square_geom, beam_x=bx, beam_y=by)
        r2 = rectangle_capture(bx - 0.005, bx + 0.015, by - 0.01, by + 0.02,
                               beam, square_geom, beam_x=bx, beam_y=by)
        assert r1 == pytest.approx(r2, abs=1e-12)

    def test_full_aperture_bounded_by_one(self, square_geom, beam):
        a = beam.beam_width_m
        full = rectangle_capture(-SIDE / 2, SIDE / 2, -SIDE / 2, SIDE / 2, beam, square_geom)
        assert full <= 1.0
        # wide-open pupil: capture approaches erf(l_t/2a)^2 (input clipping only)
        assert full == pytest.approx(erf(SIDE / (2 * a)) ** 2, abs=1e-4)

    def test_crosstalk_symmetry(self, square_geom, beam):
        l_d = SIDE / 3
        assert pixel_crosstalk(1, 2, l_d, beam, square_geom) == pytest.approx(
            pixel_crosstalk(2, 1, l_d, beam, square_geom), abs=1e-15
        )
        own = pixel_crosstalk(0, 0, l_d, beam, square_geom)
        direct = rectangle_capture(-l_d / 2, l_d / 2, -l_d / 2, l_d / 2, beam, square_geom)
        assert own == pytest.approx(direct, abs=1e-15)


class TestCaptureMatrices:
    def test_tiling_reproduces_full_capture(self, square_geom, beam):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE / 3)
        mx, my = capture_matrices(grid, beam, square_geom)
        col = mx[:, 0].sum() * my[:, 0].sum()
        full = rectangle_capture(
            -SIDE / 2, SIDE / 2, -SIDE / 2, SIDE / 2, beam, square_geom,
            beam_x=grid.x_beams[0], beam_y=grid.y_beams[0],
        )
        assert col == pytest.approx(full, abs=1e-10)

    def test_octant_reduction_exact(self, square_geom, beam):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE / 3.5)
        etas, leaks, mults = grid_interference(grid, beam, square_geom)
        mx, my = capture_matrices(grid, beam, square_geom)
        total_full = sum(
            mx[ix, ix] * my[iy, iy]
            for ix in range(len(grid.x_beams))
            for iy in range(len(grid.y_beams))
        )
        assert float(np.sum(etas * mults)) == pytest.approx(total_full, abs=1e-12)
        leak_full = sum(
            mx[ix].sum() * my[iy].sum() - mx[ix, ix] * my[iy, iy]
            for ix in range(len(grid.x_beams))
            for iy in range(len(grid.y_beams))
        )
        assert float(np.sum(leaks * mults)) == pytest.approx(
            leak_full * beam.intensity, abs=1e-12
        )


class TestInterference:
    def test_single_pixel_has_no_interference(self, square_geom, beam):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE)
        assert interference_power(grid, grid.pixels[0], beam, square_geom) == 0.0

    def test_2x2_pixels_all_equal(self, square_geom, beam):
        grid = build_pixel_grid("centered_2x2", SIDE, l_d=SIDE / 2)
        mx, my = capture_matrices(grid, beam, square_geom)
        leaks = [
            mx[ix].sum() * my[iy].sum() - mx[ix, ix] * my[iy, iy]
            for ix in range(2)
            for iy in range(2)
        ]
        assert max(leaks) - min(leaks) < 1e-15

    def test_scales_with_intensity(self, square_geom):
        a = SIDE / 8
        grid = build_pixel_grid("centered_2x2", SIDE, l_d=SIDE / 2)
        zero = interference_power(grid, grid.pixels[0], BeamParams(a, 0.0), square_geom)
        lo = interference_power(grid, grid.pixels[0], BeamParams(a, 0.5), square_geom)
        hi = interference_power(grid, grid.pixels[0], BeamParams(a, 2.0), square_geom)
        assert zero == 0.0
        assert hi == pytest.approx(4.0 * lo, rel=1e-12)

    def test_matches_grid_interference(self, square_geom, beam):
        grid = build_pixel_grid("centered_single", SIDE, l_d=SIDE / 3.5)
        _, leaks, _ = grid_interference(grid, beam, square_geom)
        direct = interference_power(grid, grid.pixels[0], beam, square_geom)
        assert direct == pytest.approx(leaks[0], abs=1e-15)

    def test_one_by_two_symmetric(self, square_geom, beam):
        l_s = SIDE / math.sqrt(2)
        grid = build_pixel_grid("one_by_two", SIDE, l_o=0.2 * l_s)
        etas, leaks, _ = grid_interference(grid, beam, square_geom)
        assert etas[0] == pytest.approx(etas[1], abs=1e-14)
        assert leaks[0] == pytest.approx(leaks[1], abs=1e-14)

    def test_pixel_capture_in_unit_interval(self, square_geom, beam):
        for config, kw in [
            ("centered_single", {"l_d": SIDE / 3}),
            ("centered_2x2", {"l_d": SIDE / 2}),
            ("one_by_two", {"l_o": 0.1 * SIDE}),
        ]:
            grid = build_pixel_grid(config, SIDE, **kw)
            for pix in grid.pixels:
                assert 0.0 <= pixel_capture(pix, beam, square_geom) <= 1.0

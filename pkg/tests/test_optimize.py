"""Tests for the derivative-free optimizer and the range-sweep driver."""

import math

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

from fsqkd.mathkern import DomainError
from fsqkd.modes import ApertureShape
from fsqkd.optimize import (
    INTENSITY_BOUNDS,
    OptimizationError,
    OptimizationProblem,
    OptimizerSettings,
    SweepEntry,
    default_seeds,
    maximize,
    optimize_at_range,
    optimize_ogba_at_range,
    optimize_single_fb_at_range,
    optimize_soft_multimode_at_range,
    sweep,
    system_geometry,
)
from fsqkd.qkd import ChannelPoint, DetectorModel, bb84_rate

AREA = 0.005 * math.pi
WAVELENGTH = 1.55e-6
UNIT = ((0.0, 1.0),)


@pytest.fixture
def detector():
    return DetectorModel(p_dark=1e-6, eta_det=1.0, visibility=0.99, f_leak=1.0, rep_rate_hz=1e10)


def two_bump(x):
    t = x[0]
    return math.exp(-(((t - 0.15) / 0.05) ** 2)) + 2.0 * math.exp(-(((t - 0.85) / 0.05) ** 2))


class TestMaximize:
    def test_concave_quadratic(self):
        problem = OptimizationProblem(
            objective=lambda x: -((x[0] - 0.3) ** 2),
            bounds=UNIT,
            seeds=default_seeds(UNIT),
        )
        x, v = maximize(problem)
        assert abs(x[0] - 0.3) < 1e-6
        assert v == pytest.approx(0.0, abs=1e-10)

    def test_ideal_bb84_intensity_peak(self):
        # analytic optimum: R = mu e^{-mu} peaks at mu = 1 with value e^{-1}
        det = DetectorModel(rep_rate_hz=1.0)
        ch = ChannelPoint(1.0)
        bounds = (INTENSITY_BOUNDS,)
        problem = OptimizationProblem(
            objective=lambda x: bb84_rate(ch, det, float(x[0])).rate_unclamped,
            bounds=bounds,
            seeds=default_seeds(bounds, (True,)),
            log_scale=(True,),
        )
        x, v = maximize(problem)
        assert abs(x[0] - 1.0) < 1e-4
        assert v == pytest.approx(math.exp(-1.0), abs=1e-8)

    def test_multistart_escapes_local_maximum(self):
        single = OptimizationProblem(
            two_bump, UNIT, (np.array([0.15]),), OptimizerSettings.fast()
        )
        _, v_single = maximize(single)
        multi = OptimizationProblem(
            two_bump, UNIT, default_seeds(UNIT, max_seeds=8), OptimizerSettings.fast()
        )
        x_multi, v_multi = maximize(multi)
        assert v_multi > v_single + 0.5
        assert abs(x_multi[0] - 0.85) < 1e-3

    def test_best_at_least_every_seed(self):
        seeds = default_seeds(UNIT, max_seeds=8)
        problem = OptimizationProblem(two_bump, UNIT, seeds, OptimizerSettings.fast())
        _, v = maximize(problem)
        assert all(v >= two_bump(s) for s in seeds)

    def test_all_non_finite_raises(self):
        problem = OptimizationProblem(
            lambda x: math.nan, UNIT, default_seeds(UNIT), OptimizerSettings.fast()
        )
        with pytest.raises(OptimizationError):
            maximize(problem)

    def test_partial_non_finite_recovers(self):
        # objective undefined on half the interval; optimizer must still work
        def f(x):
            return math.nan if x[0] < 0.4 else -((x[0] - 0.7) ** 2)

        problem = OptimizationProblem(f, UNIT, default_seeds(UNIT), OptimizerSettings.fast())
        x, _ = maximize(problem)
        assert abs(x[0] - 0.7) < 1e-4

    def test_deterministic(self):
        problem = OptimizationProblem(two_bump, UNIT, default_seeds(UNIT), OptimizerSettings.fast())
        x1, v1 = maximize(problem)
        x2, v2 = maximize(problem)
        assert x1[0] == x2[0]
        assert v1 == v2

    def test_warm_start_never_degrades(self):
        # warm seed at the global peak guarantees at least its value
        seeds = default_seeds(UNIT, warm_start=(0.85,), max_seeds=4)
        problem = OptimizationProblem(two_bump, UNIT, seeds, OptimizerSettings.fast())
        _, v = maximize(problem)
        assert v >= two_bump(np.array([0.85]))

    def test_validation(self):
        with pytest.raises(DomainError):
            OptimizationProblem(two_bump, (), (np.array([0.5]),))
        with pytest.raises(DomainError):
            OptimizationProblem(two_bump, ((1.0, 0.0),), (np.array([0.5]),))
        with pytest.raises(DomainError):
            OptimizationProblem(two_bump, ((0.0, 1.0),), ())
        with pytest.raises(DomainError):
            # log scale needs a positive lower bound
            OptimizationProblem(
                two_bump, ((0.0, 1.0),), (np.array([0.5]),), log_scale=(True,)
            )

    def test_settings_profiles(self):
        paper = OptimizerSettings.paper()
        fast = OptimizerSettings.fast()
        assert paper.max_seeds == 8 and paper.max_evals == 2000
        assert fast.max_seeds == 4 and fast.max_evals == 600
        assert OptimizerSettings.from_profile("fast") == fast
        with pytest.raises(DomainError):
            OptimizerSettings.from_profile("turbo")
        with pytest.raises(DomainError):
            OptimizerSettings(max_seeds=0)


class TestSeeds:
    def test_center_first_then_corners(self):
        bounds = ((0.0, 1.0), (0.0, 2.0))
        seeds = default_seeds(bounds, max_seeds=8)
        assert np.allclose(seeds[0], [0.5, 1.0])
        assert len(seeds) == 5  # center + 4 corners

    def test_warm_start_is_second_seed(self):
        bounds = ((0.0, 1.0),)
        seeds = default_seeds(bounds, warm_start=(0.77,), max_seeds=8)
        assert seeds[1][0] == pytest.approx(0.77, abs=1e-12)

    def test_max_seeds_truncates(self):
        bounds = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
        assert len(default_seeds(bounds, max_seeds=4)) == 4

    def test_log_scale_center_is_geometric_mean(self):
        bounds = ((1e-4, 1e4),)
        seeds = default_seeds(bounds, log_scale=(True,))
        assert seeds[0][0] == pytest.approx(1.0, rel=1e-10)

    @given(
        st.floats(min_value=1e-6, max_value=1.0),
        st.floats(min_value=1.5, max_value=1e6),
        st.floats(min_value=0.0, max_value=1.0),
        st.booleans(),
    )
    @hyp_settings(max_examples=100, deadline=None)
    def test_unit_mapping_round_trip(self, lo, factor, t, log_flag):
        from fsqkd.optimize import _from_unit, _to_unit

        bounds = ((lo, lo * factor),)
        x = _from_unit(np.array([t]), bounds, (log_flag,))
        assert lo <= x[0] <= lo * factor * (1 + 1e-12)
        u = _to_unit(x, bounds, (log_flag,))
        assert u[0] == pytest.approx(t, abs=1e-9)


class TestSystemGeometry:
    def test_shape_families(self):
        soft = system_geometry("soft_multimode", WAVELENGTH, AREA, 1000.0)
        assert soft.transmitter.shape is ApertureShape.SOFT_GAUSSIAN
        circ = system_geometry("lg_ideal", WAVELENGTH, AREA, 1000.0)
        assert circ.transmitter.shape is ApertureShape.HARD_CIRCLE
        sq = system_geometry("ogba:auto", WAVELENGTH, AREA, 1000.0)
        assert sq.transmitter.shape is ApertureShape.HARD_SQUARE
        assert system_geometry("single_fb_square", WAVELENGTH, AREA, 1000.0).transmitter.shape is ApertureShape.HARD_SQUARE

    def test_equal_pupil_area_across_shapes(self):
        for system in ("soft_multimode", "lg_ideal", "ogba:auto"):
            geom = system_geometry(system, WAVELENGTH, AREA, 1000.0)
            assert geom.transmitter.area_m2 == pytest.approx(AREA, rel=1e-12)

    def test_unknown_system(self):
        with pytest.raises(DomainError):
            system_geometry("carrier_pigeon", WAVELENGTH, AREA, 1000.0)


class TestSystemOptimizers:
    def test_ogba_centered_single(self, detector):
        geom = system_geometry("ogba:centered_single", WAVELENGTH, AREA, 1000.0)
        entry = optimize_ogba_at_range(
            1000.0, geom, detector, "centered_single", OptimizerSettings.fast()
        )
        assert entry.system == "ogba:centered_single"
        assert entry.rate_bits_per_s > 0
        assert entry.n_pixels >= 1
        assert entry.rate_bits_per_mode == pytest.approx(
            entry.rate_bits_per_s / detector.rep_rate_hz, rel=1e-12
        )
        assert math.isnan(entry.l_o_m)
        assert entry.p_noise_max >= 0

    def test_one_by_two_doubles_single_beam(self, detector):
        # fully separated offset beams are two independent single-beam links
        geom = system_geometry("ogba:one_by_two", WAVELENGTH, AREA, 1000.0)
        pair = optimize_ogba_at_range(
            1000.0, geom, detector, "one_by_two", OptimizerSettings.fast()
        )
        single = optimize_single_fb_at_range(1000.0, geom, detector, OptimizerSettings.fast())
        assert pair.rate_bits_per_s > 1.8 * single.rate_bits_per_s
        assert math.isnan(pair.l_d_m)
        assert pair.l_o_m >= 0

    def test_single_fb_fixed_grid(self, detector):
        geom = system_geometry("single_fb_square", WAVELENGTH, AREA, 1000.0)
        entry = optimize_single_fb_at_range(1000.0, geom, detector, OptimizerSettings.fast())
        assert entry.system == "single_fb_square"
        assert entry.n_pixels == 1
        assert entry.p_noise_max == 0.0
        assert entry.rate_bits_per_s > 0

    def test_soft_multimode(self, detector):
        geom = system_geometry("soft_multimode", WAVELENGTH, AREA, 1000.0)
        entry = optimize_soft_multimode_at_range(1000.0, geom, detector, OptimizerSettings.fast())
        assert entry.system == "soft_multimode"
        assert entry.rate_bits_per_s > 0
        assert entry.n_pixels > 1
        assert INTENSITY_BOUNDS[0] <= entry.alpha_sq <= INTENSITY_BOUNDS[1]

    def test_soft_multimode_beats_single_beam(self, detector):
        geom_soft = system_geometry("soft_multimode", WAVELENGTH, AREA, 1000.0)
        geom_sq = system_geometry("single_fb_square", WAVELENGTH, AREA, 1000.0)
        soft = optimize_soft_multimode_at_range(1000.0, geom_soft, detector, OptimizerSettings.fast())
        single = optimize_single_fb_at_range(1000.0, geom_sq, detector, OptimizerSettings.fast())
        assert soft.rate_bits_per_s > single.rate_bits_per_s

    def test_wrong_aperture_shape_rejected(self, detector):
        geom = system_geometry("soft_multimode", WAVELENGTH, AREA, 1000.0)
        with pytest.raises(DomainError):
            optimize_ogba_at_range(1000.0, geom, detector, "centered_single")

    def test_lg_far_field_few_modes(self, detector):
        # far range: diffraction kills high-l modes, the subset scan stays small
        geom = system_geometry("lg_ideal", WAVELENGTH, AREA, 50000.0)
        entry = optimize_at_range(
            50000.0, "lg_ideal", WAVELENGTH, AREA, detector, OptimizerSettings.fast()
        )
        assert entry.system == "lg_ideal"
        assert entry.rate_bits_per_s > 0
        assert entry.n_pixels <= 5
        assert entry.config_label == "ideal"
        assert entry.p_noise_max == 0.0


class TestOgbaAuto:
    def test_envelope_dominates_children(self, detector):
        entry = optimize_at_range(
            1000.0, "ogba:auto", WAVELENGTH, AREA, detector, OptimizerSettings.fast()
        )
        assert entry.system == "ogba:auto"
        assert len(entry.children) == 3
        alive = [c for c in entry.children if c.error is None]
        assert alive
        assert entry.rate_bits_per_s == max(c.rate_bits_per_s for c in alive)
        labels = [c.config_label for c in entry.children]
        assert labels == ["centered_single", "centered_2x2", "one_by_two"]


class TestSweep:
    def test_grid_and_warm_start_chain(self, detector):
        result = sweep(
            [500.0, 1000.0, 2000.0],
            ["soft_multimode", "single_fb_square"],
            wavelength_m=WAVELENGTH,
            aperture_area_m2=AREA,
            det=detector,
            settings=OptimizerSettings.fast(),
        )
        assert len(result.entries) == 6
        for system in ("soft_multimode", "single_fb_square"):
            rows = result.for_system(system)
            assert [e.range_m for e in rows] == [500.0, 1000.0, 2000.0]
            rates = [e.rate_bits_per_s for e in rows]
            assert all(a > b for a, b in zip(rates, rates[1:]))
        assert result.entry(1000.0, "soft_multimode").system == "soft_multimode"
        with pytest.raises(KeyError):
            result.entry(750.0, "soft_multimode")

    def test_rejects_unsorted_ranges(self, detector):
        with pytest.raises(DomainError):
            sweep(
                [1000.0, 500.0],
                ["soft_multimode"],
                wavelength_m=WAVELENGTH,
                aperture_area_m2=AREA,
                det=detector,
            )

    def test_rejects_unknown_system(self, detector):
        with pytest.raises(DomainError):
            sweep(
                [1000.0],
                ["smoke_signals"],
                wavelength_m=WAVELENGTH,
                aperture_area_m2=AREA,
                det=detector,
            )

    def test_failure_recorded_not_raised(self, detector):
        # lg_matrix without a matrix cannot optimize; the row records it
        result = sweep(
            [1000.0],
            ["lg_matrix"],
            wavelength_m=WAVELENGTH,
            aperture_area_m2=AREA,
            det=detector,
            settings=OptimizerSettings.fast(),
        )
        (entry,) = result.entries
        assert entry.error is not None
        assert "matrix" in entry.error
        assert math.isnan(entry.rate_bits_per_s)
        assert entry.config_label == "failed"

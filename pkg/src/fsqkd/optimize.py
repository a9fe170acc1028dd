"""Derivative-free optimization of link parameters and range sweeps.

Each physical system exposes a smooth (piecewise-smooth for pixel grids)
rate objective in a handful of parameters: beam width, pixel or offset
geometry, and pulse intensity.  This module wraps a deterministic
multistart Nelder-Mead search over box bounds, per-system convenience
optimizers that return a uniform result record, and a sweep driver that
walks a range grid with warm starts and collects an envelope across the
beam-array layouts.

The search objective is always the raw (unclamped) summed rate, which
stays smooth through zero; reported rates are clamped at zero per channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import optimize as _sciopt

from .mathkern import DomainError, QuadratureSpec
from .modes import (
    ApertureShape,
    ApertureSpec,
    BeamParams,
    OpticalGeometry,
    beam_width_soft,
    eta_soft,
    fresnel_number,
    lg_mode_transmissivity,
)
from .ogba import GridConfig, build_pixel_grid, grid_interference
from .qkd import (
    CrosstalkMatrix,
    DetectorModel,
    lg_rate_from_etas,
    normalize_crosstalk,
    ogba_system_rate,
    soft_multimode_rate,
)

__all__ = [
    "OptimizationError",
    "OptimizerSettings",
    "OptimizationProblem",
    "maximize",
    "default_seeds",
    "SweepEntry",
    "SweepResult",
    "system_geometry",
    "optimize_ogba_at_range",
    "optimize_single_fb_at_range",
    "optimize_lg_at_range",
    "optimize_soft_multimode_at_range",
    "optimize_at_range",
    "sweep",
    "OGBA_CONFIGS",
    "SYSTEMS",
]

INTENSITY_BOUNDS = (1e-4, 20.0)

OGBA_CONFIGS = ("centered_single", "centered_2x2", "one_by_two")

SYSTEMS = (
    "soft_multimode",
    "lg_ideal",
    "lg_matrix",
    "ogba:centered_single",
    "ogba:centered_2x2",
    "ogba:one_by_two",
    "ogba:auto",
    "single_fb_square",
)

# Shrink factor pulling unit-cube corners toward the center seed.
_CORNER_SHRINK = 0.55
_PENALTY = 1e100


class OptimizationError(RuntimeError):
    """Raised when a search produces no finite objective value."""


@dataclass(frozen=True)
class OptimizerSettings:
    """Search budget and convergence tolerances.

    xtol is an absolute tolerance on the unit-cube coordinates, which makes
    it a bounds-relative parameter tolerance; ftol_rel is relative to the
    best seed's objective magnitude.
    """

    profile: str = "paper"
    max_seeds: int = 8
    max_evals: int = 2000
    xtol: float = 1e-5
    ftol_rel: float = 1e-6

    def __post_init__(self):
        if self.profile not in ("paper", "fast"):
            raise DomainError(f"unknown optimizer profile {self.profile!r}")
        if self.max_seeds < 1:
            raise DomainError("max_seeds must be >= 1")
        if self.max_evals < 10:
            raise DomainError("max_evals must be >= 10")
        if not (0 < self.xtol < 1 and 0 < self.ftol_rel < 1):
            raise DomainError("tolerances must lie in (0, 1)")

    @classmethod
    def paper(cls) -> "OptimizerSettings":
        return cls()

    @classmethod
    def fast(cls) -> "OptimizerSettings":
        return cls(profile="fast", max_seeds=4, max_evals=600)

    @classmethod
    def from_profile(cls, name: str) -> "OptimizerSettings":
        if name == "paper":
            return cls.paper()
        if name == "fast":
            return cls.fast()
        raise DomainError(f"unknown optimizer profile {name!r}")


@dataclass(frozen=True)
class OptimizationProblem:
    """A bounded maximization task.

    objective maps an absolute parameter vector to a scalar to maximize
    (bits/s for the physical systems, unclamped).  bounds are inclusive
    (lo, hi) pairs; seeds are absolute-coordinate start points; log_scale
    marks coordinates searched on a logarithmic axis.
    """

    objective: Callable[[np.ndarray], float]
    bounds: tuple
    seeds: tuple
    settings: OptimizerSettings = field(default_factory=OptimizerSettings)
    log_scale: tuple | None = None

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not bounds:
            raise DomainError("bounds must be non-empty")
        for i, (lo, hi) in enumerate(bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DomainError(f"bounds[{i}] must satisfy lo < hi, got ({lo}, {hi})")
        log_scale = self.log_scale
        if log_scale is None:
            log_scale = (False,) * len(bounds)
        log_scale = tuple(bool(v) for v in log_scale)
        if len(log_scale) != len(bounds):
            raise DomainError("log_scale length must match bounds")
        for i, (flag, (lo, _)) in enumerate(zip(log_scale, bounds)):
            if flag and lo <= 0:
                raise DomainError(f"log-scaled bounds[{i}] needs lo > 0, got {lo}")
        object.__setattr__(self, "log_scale", log_scale)
        seeds = tuple(np.asarray(s, dtype=float).reshape(len(bounds)) for s in self.seeds)
        if not seeds:
            raise DomainError("at least one seed is required")
        object.__setattr__(self, "seeds", seeds)


def _to_unit(x: np.ndarray, bounds, log_scale) -> np.ndarray:
    u = np.empty(len(bounds))
    for i, ((lo, hi), flag) in enumerate(zip(bounds, log_scale)):
        v = min(max(float(x[i]), lo), hi)
        if flag:
            u[i] = math.log(v / lo) / math.log(hi / lo)
        else:
            u[i] = (v - lo) / (hi - lo)
    return u


def _from_unit(u: np.ndarray, bounds, log_scale) -> np.ndarray:
    x = np.empty(len(bounds))
    for i, ((lo, hi), flag) in enumerate(zip(bounds, log_scale)):
        t = min(max(float(u[i]), 0.0), 1.0)
        if flag:
            x[i] = lo * (hi / lo) ** t
        else:
            x[i] = lo + (hi - lo) * t
    return x


def default_seeds(
    bounds,
    log_scale=None,
    warm_start=None,
    max_seeds: int = 8,
) -> tuple:
    """Deterministic start points: center, optional warm start, then
    hypercube corners shrunk toward the center, truncated to max_seeds."""
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    d = len(bounds)
    if log_scale is None:
        log_scale = (False,) * d
    units = [np.full(d, 0.5)]
    if warm_start is not None:
        units.append(_to_unit(np.asarray(warm_start, dtype=float), bounds, log_scale))
    for mask in range(2**d):
        corner = np.array([(mask >> i) & 1 for i in range(d)], dtype=float)
        units.append(0.5 + (corner - 0.5) * _CORNER_SHRINK)
    units = units[:max_seeds]
    return tuple(_from_unit(u, bounds, log_scale) for u in units)


def maximize(problem: OptimizationProblem):
    """Multistart bounded Nelder-Mead; returns (best params, best value).

    Deterministic for fixed seeds and tolerances: trajectories are run in
    seed order and ties keep the earliest candidate.  The result value is
    at least the objective at every seed.
    """
    bounds = problem.bounds
    log_scale = problem.log_scale
    settings = problem.settings
    d = len(bounds)

    n_finite = 0

    def evaluate(x: np.ndarray) -> float:
        nonlocal n_finite
        v = float(problem.objective(np.asarray(x, dtype=float)))
        if math.isfinite(v):
            n_finite += 1
        return v

    seed_units = [_to_unit(s, bounds, log_scale) for s in problem.seeds]
    if not any(np.all((u > 0.0) & (u < 1.0)) for u in seed_units):
        raise DomainError("at least one seed must be strictly inside the bounds")

    best_x: np.ndarray | None = None
    best_v = -math.inf
    seed_vals = []
    for s in problem.seeds:
        v = evaluate(s)
        seed_vals.append(v)
        if math.isfinite(v) and v > best_v:
            best_x, best_v = np.asarray(s, dtype=float), v

    finite_mag = [abs(v) for v in seed_vals if math.isfinite(v)]
    scale = max(max(finite_mag, default=0.0), 1.0)

    def neg_scaled(u: np.ndarray) -> float:
        v = evaluate(_from_unit(u, bounds, log_scale))
        if not math.isfinite(v):
            return _PENALTY
        return -v / scale

    for u0 in seed_units:
        res = _sciopt.minimize(
            neg_scaled,
            u0,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0)] * d,
            options={
                "xatol": settings.xtol,
                "fatol": settings.ftol_rel,
                "maxfev": settings.max_evals,
                "maxiter": settings.max_evals,
                "disp": False,
            },
        )
        if res.fun < _PENALTY / 2:
            v = -float(res.fun) * scale
            if v > best_v:
                best_x, best_v = _from_unit(res.x, bounds, log_scale), v

    if n_finite == 0 or best_x is None:
        raise OptimizationError("all objective evaluations were non-finite")
    return best_x, best_v


# ---------------------------------------------------------------------------
# Per-system optimizers


@dataclass(frozen=True)
class SweepEntry:
    """One optimized operating point: a (range, system) row.

    Parameter fields not applicable to a system are NaN.  children carries
    the per-layout sub-results behind an envelope row.  error is set (and
    rates are NaN) when an optimization failed inside a sweep.
    """

    range_m: float
    system: str
    config_label: str
    rate_bits_per_s: float
    rate_bits_per_mode: float
    a_m: float
    l_d_m: float
    l_o_m: float
    alpha_sq: float
    n_pixels: int
    p_noise_max: float
    error: str | None = None
    children: tuple = ()


@dataclass(frozen=True)
class SweepResult:
    """Optimized entries for every (range, system) pair, range-major."""

    entries: tuple

    def for_system(self, system: str):
        return tuple(e for e in self.entries if e.system == system)

    def entry(self, range_m: float, system: str) -> SweepEntry:
        for e in self.entries:
            if e.system == system and e.range_m == range_m:
                return e
        raise KeyError(f"no entry for range {range_m} m, system {system!r}")


def system_geometry(
    system: str,
    wavelength_m: float,
    aperture_area_m2: float,
    range_m: float,
) -> OpticalGeometry:
    """Equal-area apertures in the shape family each system expects."""
    if system == "soft_multimode" or system == "capacity":
        shape = ApertureShape.SOFT_GAUSSIAN
    elif system in ("lg_ideal", "lg_matrix"):
        shape = ApertureShape.HARD_CIRCLE
    elif system.startswith("ogba") or system == "single_fb_square":
        shape = ApertureShape.HARD_SQUARE
    else:
        raise DomainError(f"unknown system {system!r}")
    spec = ApertureSpec.from_area(shape, aperture_area_m2)
    return OpticalGeometry(
        wavelength_m=wavelength_m,
        range_m=range_m,
        transmitter=spec,
        receiver=spec,
    )


def _beam_width_bounds(scale_m: float):
    return (scale_m / 200.0, scale_m)


def optimize_ogba_at_range(
    range_m: float,
    geom: OpticalGeometry,
    det: DetectorModel,
    config: GridConfig | str,
    settings: OptimizerSettings | None = None,
    warm_start=None,
) -> SweepEntry:
    """Best beam array of one layout at one range.

    Searches (beam width, pixel side, intensity) for the centered layouts
    and (beam width, beam offset, intensity) for the two-beam layout.
    """
    settings = settings or OptimizerSettings()
    config = GridConfig(config)
    geom = geom.with_range(range_m)
    if geom.transmitter.shape is not ApertureShape.HARD_SQUARE:
        raise DomainError("beam-array optimization requires hard square apertures")
    l_t = geom.transmitter.dimension_m
    l_r = geom.receiver.dimension_m

    offset_mode = config is GridConfig.ONE_BY_TWO
    if offset_mode:
        geo_bounds = (0.0, (l_r / math.sqrt(2.0)) / 2.0)
        geo_log = False
    else:
        geo_bounds = (l_r / 40.0, l_r)
        geo_log = False
    bounds = (_beam_width_bounds(l_t), geo_bounds, INTENSITY_BOUNDS)
    log_scale = (True, geo_log, True)

    def make_grid(g: float):
        if offset_mode:
            return build_pixel_grid(config, l_r, l_o=g)
        return build_pixel_grid(config, l_r, l_d=g)

    def objective(x: np.ndarray) -> float:
        a, g, mu = x
        grid = make_grid(float(g))
        params = BeamParams(beam_width_m=float(a), intensity=float(mu))
        return ogba_system_rate(geom, det, grid, params, clamp=False)

    seeds = default_seeds(bounds, log_scale, warm_start, settings.max_seeds)
    best_x, _ = maximize(
        OptimizationProblem(objective, bounds, seeds, settings, log_scale)
    )

    a, g, mu = (float(v) for v in best_x)
    grid = make_grid(g)
    params = BeamParams(beam_width_m=a, intensity=mu)
    rate = ogba_system_rate(geom, det, grid, params, clamp=True)
    _, leaks, _ = grid_interference(grid, params, geom)
    return SweepEntry(
        range_m=range_m,
        system=f"ogba:{config.value}",
        config_label=config.value,
        rate_bits_per_s=rate,
        rate_bits_per_mode=rate / det.rep_rate_hz,
        a_m=a,
        l_d_m=math.nan if offset_mode else g,
        l_o_m=g if offset_mode else math.nan,
        alpha_sq=mu,
        n_pixels=grid.n_pixels,
        p_noise_max=float(np.max(leaks)) if len(leaks) else 0.0,
    )


def optimize_single_fb_at_range(
    range_m: float,
    geom: OpticalGeometry,
    det: DetectorModel,
    settings: OptimizerSettings | None = None,
    warm_start=None,
) -> SweepEntry:
    """Single focused beam onto one full-aperture square pixel."""
    settings = settings or OptimizerSettings()
    geom = geom.with_range(range_m)
    if geom.transmitter.shape is not ApertureShape.HARD_SQUARE:
        raise DomainError("single-beam optimization requires hard square apertures")
    l_t = geom.transmitter.dimension_m
    l_r = geom.receiver.dimension_m
    grid = build_pixel_grid(GridConfig.CENTERED_SINGLE, l_r, l_d=l_r)

    bounds = (_beam_width_bounds(l_t), INTENSITY_BOUNDS)
    log_scale = (True, True)

    def objective(x: np.ndarray) -> float:
        a, mu = x
        params = BeamParams(beam_width_m=float(a), intensity=float(mu))
        return ogba_system_rate(geom, det, grid, params, clamp=False)

    seeds = default_seeds(bounds, log_scale, warm_start, settings.max_seeds)
    best_x, _ = maximize(
        OptimizationProblem(objective, bounds, seeds, settings, log_scale)
    )
    a, mu = (float(v) for v in best_x)
    params = BeamParams(beam_width_m=a, intensity=mu)
    rate = ogba_system_rate(geom, det, grid, params, clamp=True)
    return SweepEntry(
        range_m=range_m,
        system="single_fb_square",
        config_label="single_pixel",
        rate_bits_per_s=rate,
        rate_bits_per_mode=rate / det.rep_rate_hz,
        a_m=a,
        l_d_m=l_r,
        l_o_m=math.nan,
        alpha_sq=mu,
        n_pixels=1,
        p_noise_max=0.0,
    )


_INNER_MU_EVALS = 200
_OUTER_WIDTH_EVALS = 250


def _optimize_intensity(rate_of_mu, settings: OptimizerSettings, warm_mu=None):
    """Inner 1-D intensity search used by the nested mode-set optimizers."""
    bounds = (INTENSITY_BOUNDS,)
    log_scale = (True,)
    inner = replace(
        settings,
        max_seeds=min(settings.max_seeds, 4),
        max_evals=min(settings.max_evals, _INNER_MU_EVALS),
    )
    seeds = default_seeds(bounds, log_scale, None, inner.max_seeds)
    if warm_mu is not None:
        lo, hi = INTENSITY_BOUNDS
        seeds = seeds + (np.array([min(max(float(warm_mu), lo), hi)]),)
    problem = OptimizationProblem(
        lambda x: rate_of_mu(float(x[0])), bounds, seeds, inner, log_scale
    )
    best_x, best_v = maximize(problem)
    return float(best_x[0]), best_v


# Azimuthal index cap for the ideal separator's subset scan.
_IDEAL_L_CAP = 80


def optimize_lg_at_range(
    range_m: float,
    geom: OpticalGeometry,
    det: DetectorModel,
    separator="ideal",
    settings: OptimizerSettings | None = None,
    warm_start=None,
    quad: QuadratureSpec | None = None,
) -> SweepEntry:
    """Best azimuthal-mode link at one range.

    separator is "ideal" (perfect mode sorting, no cross-talk) or a
    CrosstalkMatrix.  Both paths run the same search: contiguous mode
    subsets |l| <= l_used are tried in turn (the matrix restricted and
    renormalized to each subset), each with a nested outer beam-width /
    inner intensity optimization, and the best subset wins.  Sharing the
    loop makes a separator with an identity matrix reproduce the ideal
    result exactly, since its leak terms cancel to zero.

    The scan stops after two consecutive subsets fail to improve: larger
    subsets only add weakly coupled, noise-heavy modes at that point.
    """
    settings = settings or OptimizerSettings()
    geom = geom.with_range(range_m)
    if geom.transmitter.shape is not ApertureShape.HARD_CIRCLE:
        raise DomainError("mode-set optimization requires hard circular apertures")
    r_t = geom.transmitter.dimension_m

    if separator == "ideal":
        matrix = None
        labels = tuple(range(-_IDEAL_L_CAP, _IDEAL_L_CAP + 1))
        system, label_fmt = "lg_ideal", "ideal"
    elif isinstance(separator, CrosstalkMatrix):
        matrix = separator
        labels = matrix.labels
        system, label_fmt = "lg_matrix", "l_max={}"
    else:
        raise DomainError("separator must be 'ideal' or a CrosstalkMatrix")
    l_avail = max(abs(l) for l in labels)

    bounds = (_beam_width_bounds(r_t),)
    log_scale = (True,)
    warm_a = None
    warm_mu = None
    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=float).reshape(2)
        warm_a, warm_mu = float(warm[0]), float(warm[1])

    outer = replace(settings, max_evals=min(settings.max_evals, _OUTER_WIDTH_EVALS))
    seeds = default_seeds(
        bounds, log_scale, None if warm_a is None else (warm_a,), outer.max_seeds
    )

    eta_memo: dict = {}

    def eta_vector(a: float, used):
        out = np.empty(len(used))
        for i, l in enumerate(used):
            key = (a, abs(l))
            got = eta_memo.get(key)
            if got is None:
                got = lg_mode_transmissivity(
                    abs(l), BeamParams(beam_width_m=a), geom, quad
                )
                eta_memo[key] = got
            out[i] = got
        return out

    best = None  # (value, l_used, a, mu, sub, used)
    stale = 0
    for l_used in range(0, l_avail + 1):
        used = sorted(l for l in labels if abs(l) <= l_used)
        if not used:
            continue
        sub = None if matrix is None else normalize_crosstalk(matrix, used)
        mu_memo: dict = {}

        def outer_objective(x: np.ndarray) -> float:
            a = float(x[0])
            etas = eta_vector(a, used)
            mu, value = _optimize_intensity(
                lambda m: lg_rate_from_etas(etas, det, m, sub, clamp=False),
                settings,
                warm_mu,
            )
            mu_memo[a] = mu
            return value

        sub_seeds = seeds
        if best is not None:
            sub_seeds = seeds + (np.array([best[2]]),)
        best_x, value = maximize(
            OptimizationProblem(outer_objective, bounds, sub_seeds, outer, log_scale)
        )
        a = float(best_x[0])
        if best is None or value > best[0]:
            best = (value, l_used, a, mu_memo[a], sub, tuple(used))
            stale = 0
        else:
            stale += 1
            if stale >= 2:
                break

    _, l_used, a, mu, sub, used = best
    etas = eta_vector(a, used)
    rate = lg_rate_from_etas(etas, det, mu, sub, clamp=True)
    if sub is None:
        p_noise_max = 0.0
    else:
        t = sub.values
        p_noise_max = max(
            float(np.sum(mu * etas * t[:, j]) - mu * etas[j] * t[j, j])
            for j in range(len(used))
        )
    return SweepEntry(
        range_m=range_m,
        system=system,
        config_label=label_fmt.format(l_used),
        rate_bits_per_s=rate,
        rate_bits_per_mode=rate / det.rep_rate_hz,
        a_m=a,
        l_d_m=math.nan,
        l_o_m=math.nan,
        alpha_sq=mu,
        n_pixels=len(used),
        p_noise_max=p_noise_max,
    )


def optimize_soft_multimode_at_range(
    range_m: float,
    geom: OpticalGeometry,
    det: DetectorModel,
    settings: OptimizerSettings | None = None,
    warm_start=None,
) -> SweepEntry:
    """Best shared intensity for the soft-aperture eigenmode stack.

    The mode shapes are fixed by the geometry, so the only free parameter
    is the pulse intensity shared by every mode.
    """
    settings = settings or OptimizerSettings()
    geom = geom.with_range(range_m)
    if geom.transmitter.shape is not ApertureShape.SOFT_GAUSSIAN:
        raise DomainError("eigenmode optimization requires soft Gaussian pupils")

    bounds = (INTENSITY_BOUNDS,)
    log_scale = (True,)

    def objective(x: np.ndarray) -> float:
        return soft_multimode_rate(geom, det, float(x[0]), clamp=False)

    seeds = default_seeds(bounds, log_scale, warm_start, settings.max_seeds)
    best_x, _ = maximize(
        OptimizationProblem(objective, bounds, seeds, settings, log_scale)
    )
    mu = float(best_x[0])
    rate = soft_multimode_rate(geom, det, mu, clamp=True)

    d_f = fresnel_number(geom)
    base = eta_soft(1, d_f)
    eta_floor = 1e-12
    n_modes = 0
    q, eta_q = 1, base
    while eta_q >= eta_floor:
        n_modes += q
        q += 1
        eta_q *= base
    return SweepEntry(
        range_m=range_m,
        system="soft_multimode",
        config_label="eigenmodes",
        rate_bits_per_s=rate,
        rate_bits_per_mode=rate / det.rep_rate_hz,
        a_m=beam_width_soft(geom.transmitter.dimension_m, d_f),
        l_d_m=math.nan,
        l_o_m=math.nan,
        alpha_sq=mu,
        n_pixels=n_modes,
        p_noise_max=0.0,
    )


# ---------------------------------------------------------------------------
# Sweep driver


def _warm_vector(entry: SweepEntry, system: str):
    """Previous optimum packed in the parameter order each system searches."""
    if entry is None or entry.error is not None:
        return None
    if system.startswith("ogba:"):
        g = entry.l_o_m if entry.config_label == "one_by_two" else entry.l_d_m
        return np.array([entry.a_m, g, entry.alpha_sq])
    if system in ("lg_ideal", "lg_matrix"):
        return np.array([entry.a_m, entry.alpha_sq])
    if system == "single_fb_square":
        return np.array([entry.a_m, entry.alpha_sq])
    if system == "soft_multimode":
        return np.array([entry.alpha_sq])
    return None


def _failed_entry(range_m: float, system: str, exc: Exception) -> SweepEntry:
    return SweepEntry(
        range_m=range_m,
        system=system,
        config_label="failed",
        rate_bits_per_s=math.nan,
        rate_bits_per_mode=math.nan,
        a_m=math.nan,
        l_d_m=math.nan,
        l_o_m=math.nan,
        alpha_sq=math.nan,
        n_pixels=0,
        p_noise_max=math.nan,
        error=f"{type(exc).__name__}: {exc}",
    )


def optimize_at_range(
    range_m: float,
    system: str,
    wavelength_m: float,
    aperture_area_m2: float,
    det: DetectorModel,
    settings: OptimizerSettings | None = None,
    matrix: CrosstalkMatrix | None = None,
    warm_starts: dict | None = None,
    quad: QuadratureSpec | None = None,
) -> SweepEntry:
    """Dispatch one (range, system) optimization; used by sweep and the CLI.

    warm_starts maps warm-start keys (system, or (system, config) for the
    envelope's sub-layouts) to previous optima and is updated in place.
    """
    settings = settings or OptimizerSettings()
    warm_starts = warm_starts if warm_starts is not None else {}
    geom = system_geometry(system, wavelength_m, aperture_area_m2, range_m)

    if system == "soft_multimode":
        entry = optimize_soft_multimode_at_range(
            range_m, geom, det, settings, warm_starts.get(system)
        )
    elif system == "lg_ideal":
        entry = optimize_lg_at_range(
            range_m, geom, det, "ideal", settings, warm_starts.get(system), quad
        )
    elif system == "lg_matrix":
        if matrix is None:
            raise DomainError("lg_matrix needs a crosstalk matrix")
        entry = optimize_lg_at_range(
            range_m, geom, det, matrix, settings, warm_starts.get(system), quad
        )
    elif system == "single_fb_square":
        entry = optimize_single_fb_at_range(
            range_m, geom, det, settings, warm_starts.get(system)
        )
    elif system == "ogba:auto":
        children = []
        for config in OGBA_CONFIGS:
            key = (system, config)
            try:
                child = optimize_ogba_at_range(
                    range_m, geom, det, config, settings, warm_starts.get(key)
                )
            except Exception as exc:
                child = _failed_entry(range_m, f"ogba:{config}", exc)
            children.append(child)
            warm = _warm_vector(child, f"ogba:{config}")
            if warm is not None:
                warm_starts[key] = warm
        alive = [c for c in children if c.error is None]
        if not alive:
            raise OptimizationError(
                "every beam-array layout failed: "
                + "; ".join(f"{cfg}: {c.error}" for cfg, c in zip(OGBA_CONFIGS, children))
            )
        winner = max(alive, key=lambda e: e.rate_bits_per_s)
        entry = replace(winner, system="ogba:auto", children=tuple(children))
    elif system.startswith("ogba:"):
        config = system.split(":", 1)[1]
        if config not in OGBA_CONFIGS:
            raise DomainError(f"unknown beam-array layout {config!r}")
        entry = optimize_ogba_at_range(
            range_m, geom, det, config, settings, warm_starts.get(system)
        )
    else:
        raise DomainError(f"unknown system {system!r}")

    if system != "ogba:auto":
        warm = _warm_vector(entry, system)
        if warm is not None:
            warm_starts[system] = warm
    return entry


def sweep(
    ranges: Sequence[float],
    systems: Sequence[str],
    *,
    wavelength_m: float,
    aperture_area_m2: float,
    det: DetectorModel,
    settings: OptimizerSettings | None = None,
    matrix: CrosstalkMatrix | None = None,
    quad: QuadratureSpec | None = None,
) -> SweepResult:
    """Optimize every system over an ascending range grid.

    Each range warm-starts from the previous range's optimum for the same
    system (plus the fresh deterministic seeds).  A failure at one point is
    recorded on its entry and the sweep continues.
    """
    ranges = [float(L) for L in ranges]
    if any(b <= a for a, b in zip(ranges, ranges[1:])):
        raise DomainError("ranges must be sorted ascending and distinct")
    for system in systems:
        if system not in SYSTEMS:
            raise DomainError(f"unknown system {system!r}")
    settings = settings or OptimizerSettings()

    warm_starts: dict = {}
    entries = []
    for L in ranges:
        for system in systems:
            try:
                entry = optimize_at_range(
                    L,
                    system,
                    wavelength_m,
                    aperture_area_m2,
                    det,
                    settings,
                    matrix,
                    warm_starts,
                    quad,
                )
            except Exception as exc:  # record and continue per contract
                entry = _failed_entry(L, system, exc)
            entries.append(entry)
    return SweepResult(entries=tuple(entries))

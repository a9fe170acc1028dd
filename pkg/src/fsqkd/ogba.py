"""Overlapping Gaussian beam array through hard square pupils.

A transmitter sends one focused Gaussian beam per detector pixel; every
beam diffracts on the shared square transmitter pupil and lands on a
pixelated receiver.  The output field factorizes into identical x and y
profiles, so every pixel integral is a product of two 1-D captures and a
whole grid reduces to one capture matrix per axis.

Three receiver layouts are supported:

- ``centered_single``: square pixels of side l_d on a grid with one pixel
  centered in the aperture; edge pixels are clipped to fit.
- ``centered_2x2``: same, but with a 2x2 pixel cluster at the center.
- ``one_by_two``: two square pixels of side l_r/sqrt(2) side by side,
  beams offset horizontally by +-l_o from the aperture center.

Beams always target the centers of the hypothetical unclipped pixels,
even when the physical pixel is cut off by the aperture edge.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .mathkern import DomainError
from .modes import ApertureShape, BeamParams, OpticalGeometry

# Snap l_r/l_d to an integer when within this relative slack, so float
# noise cannot spawn zero-width sliver pixels.
_RATIO_SNAP = 1e-9


class GridConfig(enum.Enum):
    CENTERED_SINGLE = "centered_single"
    CENTERED_2X2 = "centered_2x2"
    ONE_BY_TWO = "one_by_two"


@dataclass(frozen=True)
class Pixel:
    """One representative detector pixel.

    (u, v) are the integer grid labels; (ix, iy) index the per-axis slot
    arrays of the owning grid.  Bounds are the clipped rectangle, the beam
    target is the hypothetical full-pixel center.
    """

    u: int
    v: int
    ix: int
    iy: int
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    beam_x: float
    beam_y: float
    multiplicity: int

    @property
    def bounds(self):
        return (self.x_lo, self.x_hi, self.y_lo, self.y_hi)

    @property
    def beam_target(self):
        return (self.beam_x, self.beam_y)


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """Immutable pixel layout: per-axis slot edges/beams plus octant reps.

    The full grid is the Cartesian product of the x and y slots; ``pixels``
    holds one representative per symmetry orbit with its multiplicity.
    Slot edges are shared between neighbors, so per-axis captures of all
    slots can be accumulated in a single adaptive pass.
    """

    config: GridConfig
    l_r: float
    l_d: float | None
    l_o: float | None
    x_edges: np.ndarray
    y_edges: np.ndarray
    x_beams: np.ndarray
    y_beams: np.ndarray
    x_labels: np.ndarray
    y_labels: np.ndarray
    pixels: tuple[Pixel, ...]

    @property
    def n_pixels(self) -> int:
        return len(self.x_beams) * len(self.y_beams)

    def slot_index(self, axis: str, label: int) -> int:
        labels = self.x_labels if axis == "x" else self.y_labels
        hits = np.nonzero(labels == label)[0]
        if len(hits) != 1:
            raise DomainError(f"no pixel with {axis} label {label} in this grid")
        return int(hits[0])


@dataclass(frozen=True)
class FieldSample:
    """One receiver-plane sample of a propagated beam amplitude.

    ``amplitude`` carries units of 1/m (a 2-D normalized field), so
    |amplitude|^2 integrated over the receiver plane is the dimensionless
    captured fraction.
    """

    x_m: float
    y_m: float
    amplitude: complex

    def __post_init__(self):
        if not (math.isfinite(self.x_m) and math.isfinite(self.y_m)):
            raise DomainError(
                f"sample position must be finite, got ({self.x_m!r}, {self.y_m!r})"
            )
        if not cmath.isfinite(self.amplitude):
            raise DomainError(f"sample amplitude must be finite, got {self.amplitude!r}")

    @property
    def position(self):
        return (self.x_m, self.y_m)

    @property
    def intensity(self) -> float:
        """|amplitude|^2 in 1/m^2."""
        return abs(self.amplitude) ** 2


def _check_positive(name: str, value) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return float(value)


def _slot_count(ratio: float, odd: bool) -> int:
    """Smallest pixel count of the required parity covering the aperture."""
    nearest = round(ratio)
    if abs(ratio - nearest) <= _RATIO_SNAP * max(1.0, abs(ratio)):
        ratio = nearest
    n = math.ceil(ratio)
    n = max(n, 1)
    if odd != bool(n % 2):
        n += 1
    return n


def _centered_slots(l_r: float, l_d: float, odd: bool):
    """Clipped slot edges, beam targets, and labels for one axis."""
    n = _slot_count(l_r / l_d, odd)
    if odd:
        h = (n - 1) // 2
        labels = np.arange(-h, h + 1)
        raw_edges = (np.arange(-h, h + 2) - 0.5) * l_d
    else:
        h = n // 2
        labels = np.arange(-h, h)
        raw_edges = np.arange(-h, h + 1) * l_d
    beams = 0.5 * (raw_edges[:-1] + raw_edges[1:])
    edges = np.clip(raw_edges, -0.5 * l_r, 0.5 * l_r)
    return edges, beams, labels


def _octant_pixels(edges, beams, labels, centers_on_axis: bool):
    """Representatives of the octant u >= v >= 0 with orbit sizes."""
    reps = []
    for ix, u in enumerate(labels):
        if u < 0:
            continue
        for iy, v in enumerate(labels):
            if v < 0 or v > u:
                continue
            if centers_on_axis:
                if u == 0 and v == 0:
                    mult = 1
                elif v == 0 or u == v:
                    mult = 4
                else:
                    mult = 8
            else:
                mult = 4 if u == v else 8
            reps.append(
                Pixel(
                    u=int(u),
                    v=int(v),
                    ix=ix,
                    iy=iy,
                    x_lo=float(edges[ix]),
                    x_hi=float(edges[ix + 1]),
                    y_lo=float(edges[iy]),
                    y_hi=float(edges[iy + 1]),
                    beam_x=float(beams[ix]),
                    beam_y=float(beams[iy]),
                    multiplicity=mult,
                )
            )
    return tuple(reps)


def build_pixel_grid(
    config,
    l_r: float,
    l_d: float | None = None,
    l_o: float | None = None,
) -> PixelGrid:
    """Construct the pixel layout for one receiver configuration.

    ``l_d`` is required for the centered configurations (l_d > l_r is the
    allowed degenerate single clipped pixel), ``l_o`` for one_by_two.
    """
    try:
        config = GridConfig(config)
    except ValueError:
        known = ", ".join(c.value for c in GridConfig)
        raise DomainError(f"unknown grid layout {config!r}; choose from {known}") from None
    l_r = _check_positive("l_r", l_r)

    if config is GridConfig.ONE_BY_TWO:
        if l_o is None:
            raise DomainError("one_by_two requires the beam offset l_o")
        if l_d is not None:
            raise DomainError("one_by_two does not take a pixel side l_d")
        l_s = l_r / math.sqrt(2.0)
        if not (isinstance(l_o, (int, float)) and math.isfinite(l_o) and 0 <= l_o <= 0.5 * l_s):
            raise DomainError(f"l_o must lie in [0, {0.5 * l_s}], got {l_o!r}")
        x_edges = np.array([-l_s, 0.0, l_s])
        y_edges = np.array([-0.5 * l_s, 0.5 * l_s])
        x_beams = np.array([-float(l_o), float(l_o)])
        y_beams = np.array([0.0])
        pixels = tuple(
            Pixel(
                u=u,
                v=0,
                ix=u,
                iy=0,
                x_lo=float(x_edges[u]),
                x_hi=float(x_edges[u + 1]),
                y_lo=float(y_edges[0]),
                y_hi=float(y_edges[1]),
                beam_x=float(x_beams[u]),
                beam_y=0.0,
                multiplicity=1,
            )
            for u in (0, 1)
        )
        return PixelGrid(
            config=config,
            l_r=l_r,
            l_d=None,
            l_o=float(l_o),
            x_edges=x_edges,
            y_edges=y_edges,
            x_beams=x_beams,
            y_beams=y_beams,
            x_labels=np.array([0, 1]),
            y_labels=np.array([0]),
            pixels=pixels,
        )

    if l_d is None:
        raise DomainError(f"{config.value} requires the pixel side l_d")
    if l_o is not None:
        raise DomainError(f"{config.value} does not take a beam offset l_o")
    l_d = _check_positive("l_d", l_d)
    odd = config is GridConfig.CENTERED_SINGLE
    edges, beams, labels = _centered_slots(l_r, l_d, odd)
    pixels = _octant_pixels(edges, beams, labels, centers_on_axis=odd)
    return PixelGrid(
        config=config,
        l_r=l_r,
        l_d=l_d,
        l_o=None,
        x_edges=edges,
        y_edges=edges.copy(),
        x_beams=beams,
        y_beams=beams.copy(),
        x_labels=labels,
        y_labels=labels.copy(),
        pixels=pixels,
    )


def _axis_scales(params: BeamParams, geom: OpticalGeometry):
    """(b, beta, axis_norm) of the separable output intensity.

    |phi00(x',y')|^2 = G(x')G(y') with G(t) = axis_norm * S(b, beta t)^2,
    S(b, v) = exp(-v^2) Re erf(b + iv), b = l_t/(2 sqrt(2) a), and
    beta = a k/(sqrt(2) L).
    """
    if geom.transmitter.shape is not ApertureShape.HARD_SQUARE:
        raise DomainError(f"transmitter must be hard_square, got {geom.transmitter.shape.value}")
    a = params.beam_width_m
    l_t = geom.transmitter.dimension_m
    b = l_t / (2.0 * math.sqrt(2.0) * a)
    beta = a * geom.wavenumber / (math.sqrt(2.0) * geom.range_m)
    axis_norm = 2.0 * math.sqrt(math.pi) * a / (geom.wavelength_m * geom.range_m)
    return b, beta, axis_norm


def gaussian_output_field(x_prime_m, y_prime_m, params: BeamParams, geom: OpticalGeometry):
    """Receiver-plane amplitude of one focused Gaussian beam.

    phi00(x',y') = (2 sqrt(pi) a/(i lambda L)) e^{i(kL + k(x'^2+y'^2)/2L)}
    S(b, beta x') S(b, beta y'), evaluated in the overflow-free scaled
    form of S.
    """
    b, beta, axis_norm = _axis_scales(params, geom)
    k = geom.wavenumber
    L = geom.range_m
    x = np.asarray(x_prime_m, dtype=float)
    y = np.asarray(y_prime_m, dtype=float)
    sx = kernels.scaled_re_erf(b, beta * x)
    sy = kernels.scaled_re_erf(b, beta * y)
    phase = np.exp(1j * (k * L + 0.5 * k * (x * x + y * y) / L))
    out = (axis_norm / 1j) * phase * sx * sy
    return complex(out) if np.ndim(out) == 0 else out


def sample_output_field(
    x_prime_m: float, y_prime_m: float, params: BeamParams, geom: OpticalGeometry
) -> FieldSample:
    """Evaluate the receiver-plane field at one point as a ``FieldSample``."""
    amp = gaussian_output_field(float(x_prime_m), float(y_prime_m), params, geom)
    return FieldSample(float(x_prime_m), float(y_prime_m), complex(amp))


def rectangle_capture(
    x_lo: float,
    x_hi: float,
    y_lo: float,
    y_hi: float,
    params: BeamParams,
    geom: OpticalGeometry,
    beam_x: float = 0.0,
    beam_y: float = 0.0,
) -> float:
    """Fraction of one beam's power landing in an axis-aligned rectangle.

    The beam is focused at (beam_x, beam_y); separability turns the double
    integral of |phi00|^2 into a product of two 1-D captures.
    """
    b, beta, axis_norm = _axis_scales(params, geom)
    cx = axis_norm * kernels.capture_interval(b, beta, x_lo - beam_x, x_hi - beam_x)
    cy = axis_norm * kernels.capture_interval(b, beta, y_lo - beam_y, y_hi - beam_y)
    return float(cx * cy)


def pixel_capture(pixel: Pixel, params: BeamParams, geom: OpticalGeometry) -> float:
    """Fraction of the pixel's own beam captured by its clipped rectangle."""
    eta = rectangle_capture(
        pixel.x_lo,
        pixel.x_hi,
        pixel.y_lo,
        pixel.y_hi,
        params,
        geom,
        beam_x=pixel.beam_x,
        beam_y=pixel.beam_y,
    )
    return min(max(eta, 0.0), 1.0)


def pixel_crosstalk(n: int, m: int, l_d: float, params: BeamParams, geom: OpticalGeometry) -> float:
    """Power fraction a beam leaks onto the full pixel (n, m) slots away."""
    for name, idx in (("n", n), ("m", m)):
        if not isinstance(idx, (int, np.integer)):
            raise DomainError(f"{name} must be an integer, got {idx!r}")
    l_d = _check_positive("l_d", l_d)
    return rectangle_capture(
        l_d * (n - 0.5),
        l_d * (n + 0.5),
        l_d * (m - 0.5),
        l_d * (m + 0.5),
        params,
        geom,
    )


def capture_matrices(grid: PixelGrid, params: BeamParams, geom: OpticalGeometry):
    """Per-axis capture matrices M[slot, beam] for every slot/beam pair.

    M[i, j] is the 1-D power fraction that beam j deposits in slot i; a
    pixel (ix, iy) captures Mx[ix, jx] * My[iy, jy] from beam (jx, jy).
    Each beam column is one shared-refinement pass over the slot edges.
    """
    b, beta, axis_norm = _axis_scales(params, geom)

    def axis_matrix(edges, beams):
        cols = [axis_norm * kernels.capture_segments(b, beta, edges - bj) for bj in beams]
        return np.column_stack(cols)

    mx = axis_matrix(grid.x_edges, grid.x_beams)
    if grid.y_edges.shape == grid.x_edges.shape and np.array_equal(
        grid.y_edges, grid.x_edges
    ) and np.array_equal(grid.y_beams, grid.x_beams):
        my = mx
    else:
        my = axis_matrix(grid.y_edges, grid.y_beams)
    return mx, my


def interference_power(
    grid: PixelGrid,
    pixel: Pixel,
    params: BeamParams,
    geom: OpticalGeometry,
    matrices=None,
) -> float:
    """Photons per pulse leaking into a pixel from all other beams.

    Every beam carries the shared intensity |alpha|^2; the pixel's own
    beam is excluded.  Pass precomputed ``capture_matrices`` output when
    evaluating many pixels of the same grid.
    """
    mx, my = capture_matrices(grid, params, geom) if matrices is None else matrices
    row_x = float(np.sum(mx[pixel.ix]))
    row_y = float(np.sum(my[pixel.iy]))
    own = float(mx[pixel.ix, pixel.ix]) * float(my[pixel.iy, pixel.iy])
    leak = row_x * row_y - own
    return params.intensity * max(leak, 0.0)


def grid_interference(grid: PixelGrid, params: BeamParams, geom: OpticalGeometry):
    """Signal and interference for every representative pixel.

    Returns (eta, leak_photons, multiplicity) arrays aligned with
    ``grid.pixels``: eta is the pixel's capture of its own beam, leak is
    the interference power P_L in photons per pulse.
    """
    mx, my = capture_matrices(grid, params, geom)
    etas = np.empty(len(grid.pixels))
    leaks = np.empty(len(grid.pixels))
    mults = np.empty(len(grid.pixels), dtype=int)
    for idx, pix in enumerate(grid.pixels):
        own = mx[pix.ix, pix.ix] * my[pix.iy, pix.iy]
        total = float(np.sum(mx[pix.ix])) * float(np.sum(my[pix.iy]))
        etas[idx] = min(max(own, 0.0), 1.0)
        leaks[idx] = params.intensity * max(total - own, 0.0)
        mults[idx] = pix.multiplicity
    return etas, leaks, mults

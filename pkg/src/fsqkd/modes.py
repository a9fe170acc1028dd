"""Aperture geometry and spatial-mode propagation.

Covers the two analytically tractable aperture families:

- Soft Gaussian pupils, whose eigenmodes are the Laguerre-Gauss (LG) /
  Hermite-Gauss (HG) sets with closed-form power-transfer eigenvalues
  ``eta_soft``.
- Hard circular pupils, through which input LG modes diffract into
  non-orthogonal output fields.  Azimuthal orthogonality survives; radial
  orthogonality does not.  ``lg_output_field`` evaluates the diffracted
  field, ``lg_mode_transmissivity`` and ``lg_overlap`` the captured powers.

Units are SI throughout (meters, radians); fields carry 1/m amplitude so
that |field|^2 integrates to a dimensionless power fraction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from . import kernels
from .mathkern import DomainError, QuadratureSpec, quad_1d

WAVELENGTH_BAND_M = (1e-7, 1e-4)


class ApertureShape(enum.Enum):
    SOFT_GAUSSIAN = "soft_gaussian"
    HARD_CIRCLE = "hard_circle"
    HARD_SQUARE = "hard_square"


@dataclass(frozen=True)
class ApertureSpec:
    """A pupil: shape plus its single linear dimension.

    ``dimension_m`` is the intensity-profile radius for soft Gaussian
    pupils, the radius for hard circles, and the full side for hard
    squares.
    """

    shape: ApertureShape
    dimension_m: float

    def __post_init__(self):
        if not isinstance(self.shape, ApertureShape):
            raise DomainError(f"shape must be an ApertureShape, got {self.shape!r}")
        d = self.dimension_m
        if not (isinstance(d, (int, float)) and math.isfinite(d) and d > 0):
            raise DomainError(f"aperture dimension must be positive and finite, got {d!r}")

    @property
    def area_m2(self) -> float:
        # Area is the integral of |pupil|^2: half the geometric disk area
        # for a Gaussian pupil of 1/e intensity radius r.
        d = self.dimension_m
        if self.shape is ApertureShape.SOFT_GAUSSIAN:
            return 0.5 * math.pi * d * d
        if self.shape is ApertureShape.HARD_CIRCLE:
            return math.pi * d * d
        return d * d

    @classmethod
    def soft_gaussian(cls, radius_m: float) -> "ApertureSpec":
        return cls(ApertureShape.SOFT_GAUSSIAN, radius_m)

    @classmethod
    def hard_circle(cls, radius_m: float) -> "ApertureSpec":
        return cls(ApertureShape.HARD_CIRCLE, radius_m)

    @classmethod
    def hard_square(cls, side_m: float) -> "ApertureSpec":
        return cls(ApertureShape.HARD_SQUARE, side_m)

    @classmethod
    def from_area(cls, shape: ApertureShape, area_m2: float) -> "ApertureSpec":
        """Pupil of the given shape with the given |pupil|^2 area."""
        if not (math.isfinite(area_m2) and area_m2 > 0):
            raise DomainError(f"area must be positive and finite, got {area_m2!r}")
        if shape is ApertureShape.SOFT_GAUSSIAN:
            return cls(shape, math.sqrt(2.0 * area_m2 / math.pi))
        if shape is ApertureShape.HARD_CIRCLE:
            return cls(shape, math.sqrt(area_m2 / math.pi))
        return cls(shape, math.sqrt(area_m2))


@dataclass(frozen=True)
class OpticalGeometry:
    """One point-to-point link: wavelength, range, and the two pupils."""

    wavelength_m: float
    range_m: float
    transmitter: ApertureSpec
    receiver: ApertureSpec

    def __post_init__(self):
        lam = self.wavelength_m
        if not (math.isfinite(lam) and WAVELENGTH_BAND_M[0] <= lam <= WAVELENGTH_BAND_M[1]):
            raise DomainError(
                f"wavelength_m={lam!r} outside the supported optical band "
                f"[{WAVELENGTH_BAND_M[0]}, {WAVELENGTH_BAND_M[1]}]"
            )
        if not (math.isfinite(self.range_m) and self.range_m > 0):
            raise DomainError(f"range_m must be positive and finite, got {self.range_m!r}")
        for name, ap in (("transmitter", self.transmitter), ("receiver", self.receiver)):
            if not isinstance(ap, ApertureSpec):
                raise DomainError(f"{name} must be an ApertureSpec, got {ap!r}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength_m

    def with_range(self, range_m: float) -> "OpticalGeometry":
        return OpticalGeometry(self.wavelength_m, range_m, self.transmitter, self.receiver)


def fresnel_number(geom: OpticalGeometry) -> float:
    """Fresnel number product D_f = A_t A_r / (lambda L)^2.

    For soft Gaussian pupils this equals (k r_t^2/4L)(k r_r^2/4L).
    """
    lam_l = geom.wavelength_m * geom.range_m
    return geom.transmitter.area_m2 * geom.receiver.area_m2 / (lam_l * lam_l)


@dataclass(frozen=True)
class BeamParams:
    """Transmitted beam: width parameter and mean photon number per pulse.

    ``beam_width_m`` is the Gaussian width a appearing in every input
    field; ``intensity`` is the mean photon number per pulse and only
    matters to rate computations, so it defaults to 1.
    """

    beam_width_m: float
    intensity: float = 1.0

    def __post_init__(self):
        a = self.beam_width_m
        if not (isinstance(a, (int, float)) and math.isfinite(a) and a > 0):
            raise DomainError(f"beam width must be positive and finite, got {a!r}")
        if not (isinstance(self.intensity, (int, float)) and math.isfinite(self.intensity) and self.intensity >= 0):
            raise DomainError(f"intensity must be >= 0 and finite, got {self.intensity!r}")

    def with_intensity(self, intensity: float) -> "BeamParams":
        return BeamParams(self.beam_width_m, intensity)


class ModeFamily(enum.Enum):
    LG = "lg"
    HG = "hg"


@dataclass(frozen=True)
class ModeIndex:
    """Spatial-mode label: LG (radial p >= 0, azimuthal l) or HG (n, m >= 0)."""

    family: ModeFamily
    i1: int
    i2: int

    def __post_init__(self):
        if not isinstance(self.family, ModeFamily):
            raise DomainError(f"family must be a ModeFamily, got {self.family!r}")
        if not all(isinstance(i, (int, np.integer)) for i in (self.i1, self.i2)):
            raise DomainError(f"mode indices must be integers, got ({self.i1!r}, {self.i2!r})")
        if self.family is ModeFamily.LG and self.i1 < 0:
            raise DomainError(f"LG radial index p must be >= 0, got {self.i1}")
        if self.family is ModeFamily.HG and (self.i1 < 0 or self.i2 < 0):
            raise DomainError(f"HG indices must be >= 0, got ({self.i1}, {self.i2})")

    @classmethod
    def lg(cls, p: int, l: int) -> "ModeIndex":
        return cls(ModeFamily.LG, p, l)

    @classmethod
    def hg(cls, n: int, m: int) -> "ModeIndex":
        return cls(ModeFamily.HG, n, m)

    @classmethod
    def gaussian(cls) -> "ModeIndex":
        return cls(ModeFamily.LG, 0, 0)

    @property
    def q(self) -> int:
        """Eigenvalue group index: modes of equal q share eta_soft(q)."""
        if self.family is ModeFamily.LG:
            return 2 * self.i1 + abs(self.i2) + 1
        return self.i1 + self.i2 + 1


def eta_soft(q: int, fresnel_product: float) -> float:
    """Power-transfer eigenvalue of the q-th soft-pupil eigenmode group.

    eta_q = [(1 + 2 D_f - sqrt(1 + 4 D_f)) / (2 D_f)]^q, evaluated in the
    cancellation-free form 2 D_f / (1 + 2 D_f + sqrt(1 + 4 D_f)); there are
    q modes in group q.
    """
    if not isinstance(q, (int, np.integer)) or q < 1:
        raise DomainError(f"q must be a positive integer, got {q!r}")
    if not (math.isfinite(fresnel_product) and fresnel_product > 0):
        raise DomainError(f"fresnel_product must be positive, got {fresnel_product!r}")
    base = 2.0 * fresnel_product / (1.0 + 2.0 * fresnel_product + math.sqrt(1.0 + 4.0 * fresnel_product))
    return base**q


def beam_width_soft(transmitter_radius_m: float, fresnel_product: float) -> float:
    """Eigenmode beam-width parameter a = r_t / (sqrt(2) (1+4 D_f)^(1/4))."""
    if not (math.isfinite(transmitter_radius_m) and transmitter_radius_m > 0):
        raise DomainError(f"transmitter radius must be positive, got {transmitter_radius_m!r}")
    if not (math.isfinite(fresnel_product) and fresnel_product > 0):
        raise DomainError(f"fresnel_product must be positive, got {fresnel_product!r}")
    return transmitter_radius_m / (math.sqrt(2.0) * (1.0 + 4.0 * fresnel_product) ** 0.25)


def _factorial_ratio_sqrt(p: int, l: int) -> float:
    """sqrt(p! / (p+l)!) without overflowing intermediates."""
    return math.exp(0.5 * (_sp.gammaln(p + 1) - _sp.gammaln(p + l + 1)))


def lg_input_field(mode: ModeIndex, r_m, theta_rad, params: BeamParams, geom: OpticalGeometry):
    """Input LG mode amplitude at polar (r, theta) on the transmitter plane.

    Unit-normalized over the full plane; carries the focusing phase
    exp(-i k r^2 / 2L) that cancels the propagation curvature at range L.
    """
    if mode.family is not ModeFamily.LG:
        raise DomainError(f"expected an LG mode, got {mode!r}")
    p, l = mode.i1, mode.i2
    al = abs(l)
    a = params.beam_width_m
    k = geom.wavenumber
    r = np.asarray(r_m, dtype=float)
    theta = np.asarray(theta_rad, dtype=float)
    u = r / a
    norm = _factorial_ratio_sqrt(p, al) / (math.sqrt(math.pi) * a)
    radial = u**al * _sp.eval_genlaguerre(p, al, u * u)
    phase = np.exp(-(0.5 / (a * a) + 0.5j * k / geom.range_m) * r * r + 1j * l * theta)
    out = norm * radial * phase
    return complex(out) if out.ndim == 0 else out


def hg_input_field(mode: ModeIndex, x_m, y_m, params: BeamParams, geom: OpticalGeometry):
    """Input HG mode amplitude at Cartesian (x, y) on the transmitter plane."""
    if mode.family is not ModeFamily.HG:
        raise DomainError(f"expected an HG mode, got {mode!r}")
    n, m = mode.i1, mode.i2
    a = params.beam_width_m
    k = geom.wavenumber
    x = np.asarray(x_m, dtype=float)
    y = np.asarray(y_m, dtype=float)
    norm = 1.0 / (a * math.sqrt(math.pi * math.factorial(n) * math.factorial(m) * 2.0 ** (n + m)))
    envelope = np.exp(-(0.5 / (a * a) + 0.5j * k / geom.range_m) * (x * x + y * y))
    out = norm * _sp.eval_hermite(n, x / a) * _sp.eval_hermite(m, y / a) * envelope
    return complex(out) if out.ndim == 0 else out


def gaussian_input_field(x_m, y_m, params: BeamParams, geom: OpticalGeometry):
    """Fundamental focused Gaussian (the p = l = 0 mode) in Cartesian form."""
    a = params.beam_width_m
    k = geom.wavenumber
    x = np.asarray(x_m, dtype=float)
    y = np.asarray(y_m, dtype=float)
    out = (
        1.0
        / (math.sqrt(math.pi) * a)
        * np.exp(-(0.5 / (a * a) + 0.5j * k / geom.range_m) * (x * x + y * y))
    )
    return complex(out) if out.ndim == 0 else out


def _require_hard_circles(geom: OpticalGeometry):
    if geom.transmitter.shape is not ApertureShape.HARD_CIRCLE:
        raise DomainError(f"transmitter must be hard_circle, got {geom.transmitter.shape.value}")
    if geom.receiver.shape is not ApertureShape.HARD_CIRCLE:
        raise DomainError(f"receiver must be hard_circle, got {geom.receiver.shape.value}")


def lg_radial_integral(
    mode: ModeIndex,
    r_prime_m: float,
    params: BeamParams,
    geom: OpticalGeometry,
    spec: QuadratureSpec | None = None,
) -> float:
    """Transmitter-plane radial integral of the diffracted LG field.

    Integral over [0, r_t] of sqrt(p!/(p+|l|)!) (r/a)^|l| L_p^|l|(r^2/a^2)
    exp(-r^2/2a^2) J_l(k r r'/L) r dr.  The integrand oscillates through the
    Bessel kernel, so the initial subdivision places breakpoints at the
    zero spacing pi L / (k r') estimated from its asymptotic period.
    """
    p, l = mode.i1, mode.i2
    al = abs(l)
    a = params.beam_width_m
    k = geom.wavenumber
    L = geom.range_m
    r_t = geom.transmitter.dimension_m
    norm = _factorial_ratio_sqrt(p, al)

    def integrand(r):
        u = r / a
        return (
            norm
            * u**al
            * _sp.eval_genlaguerre(p, al, u * u)
            * np.exp(-0.5 * u * u)
            * _sp.jv(l, k * r * r_prime_m / L)
            * r
        )

    breaks = None
    if r_prime_m > 0.0:
        zero_gap = math.pi * L / (k * r_prime_m)
        if zero_gap < r_t:
            breaks = np.arange(zero_gap, r_t, zero_gap)
    val = quad_1d(integrand, 0.0, r_t, spec, breakpoints=breaks)
    return float(np.real(val))


def lg_output_field(
    mode: ModeIndex,
    r_prime_m,
    theta_prime_rad,
    params: BeamParams,
    geom: OpticalGeometry,
    spec: QuadratureSpec | None = None,
):
    """Diffracted LG field at polar (r', theta') on the receiver plane.

    phi_{p,l}(r',th') = [2 sqrt(pi p!) / (i a lambda L sqrt((|l|+p)!))]
      * exp(i[kL + l th' + k r'^2/2L - l pi/2]) * radial integral.

    The field is only meaningful inside the receiver pupil; evaluation
    does not clip, callers integrate over the pupil themselves.
    """
    if mode.family is not ModeFamily.LG:
        raise DomainError(f"expected an LG mode, got {mode!r}")
    _require_hard_circles(geom)
    l = mode.i2
    a = params.beam_width_m
    k = geom.wavenumber
    L = geom.range_m
    lam = geom.wavelength_m
    rp = float(r_prime_m)
    if rp < 0:
        raise DomainError(f"r' must be >= 0, got {rp!r}")
    radial = lg_radial_integral(mode, rp, params, geom, spec)
    pref = 2.0 * math.sqrt(math.pi) / (1j * a * lam * L)
    phase = np.exp(1j * (k * L + l * theta_prime_rad + 0.5 * k * rp * rp / L - 0.5 * l * math.pi))
    out = pref * phase * radial
    return complex(out) if np.ndim(out) == 0 else out


def _overlap_prefactor(a: float, geom: OpticalGeometry) -> float:
    """|prefactor|^2 shared by transmissivity/overlap integrals: 4 pi/(a lam L)^2."""
    lam_l = geom.wavelength_m * geom.range_m
    return 4.0 * math.pi / (a * a * lam_l * lam_l)


def lg_mode_transmissivity(
    l: int,
    params: BeamParams,
    geom: OpticalGeometry,
    spec: QuadratureSpec | None = None,
) -> float:
    """Power fraction of the azimuthal LG mode (p=0, l) captured by the receiver.

    eta(l) = 2 pi |pref|^2 * int_0^{r_r} I_l(r')^2 r' dr' with the radial
    integral I_l as in ``lg_radial_integral``.  Even in l.
    """
    if not isinstance(l, (int, np.integer)):
        raise DomainError(f"l must be an integer, got {l!r}")
    _require_hard_circles(geom)
    if spec is None:
        spec = QuadratureSpec()
    radial_sq = kernels.lg_radial_overlap(
        0,
        0,
        abs(int(l)),
        params.beam_width_m,
        geom.wavenumber,
        geom.range_m,
        geom.transmitter.dimension_m,
        geom.receiver.dimension_m,
        abs_tol=spec.abs_tol,
        rel_tol=spec.rel_tol,
    )
    eta = 2.0 * math.pi * _overlap_prefactor(params.beam_width_m, geom) * radial_sq
    # Quadrature slop may push a lossless-limit value epsilon above 1.
    return float(min(max(eta, 0.0), 1.0))


def lg_overlap(
    mode_a: ModeIndex,
    mode_b: ModeIndex,
    params: BeamParams,
    geom: OpticalGeometry,
    spec: QuadratureSpec | None = None,
    use_azimuthal_shortcut: bool = True,
) -> float:
    """Power leaked from output mode a into output mode b (unnormalized).

    |integral over the receiver disk of phi_a phi_b* |^2 per its
    definition; the azimuthal integral vanishes identically for different
    l, which the shortcut applies analytically.  With the shortcut
    disabled the theta' integral is evaluated numerically from full field
    samples (slow; used to verify orthogonality end-to-end).
    """
    for mode in (mode_a, mode_b):
        if mode.family is not ModeFamily.LG:
            raise DomainError(f"expected LG modes, got {mode!r}")
    _require_hard_circles(geom)
    if spec is None:
        spec = QuadratureSpec()
    a = params.beam_width_m
    r_r = geom.receiver.dimension_m

    if use_azimuthal_shortcut:
        if mode_a.i2 != mode_b.i2:
            return 0.0
        radial = kernels.lg_radial_overlap(
            mode_a.i1,
            mode_b.i1,
            abs(mode_a.i2),
            a,
            geom.wavenumber,
            geom.range_m,
            geom.transmitter.dimension_m,
            r_r,
            abs_tol=spec.abs_tol,
            rel_tol=spec.rel_tol,
        )
        amp = 2.0 * math.pi * _overlap_prefactor(a, geom) * radial
        return float(amp * amp)

    # Slow path: numerical theta' integration of full field products.
    # Radial parts are cached per r'; theta' dependence stays numeric.
    @lru_cache(maxsize=4096)
    def field_at(mode_key, rp):
        mode = mode_a if mode_key == 0 else mode_b
        return lg_output_field(mode, rp, 0.0, params, geom, spec)

    def ring(rp: float) -> complex:
        fa = field_at(0, rp)
        fb = field_at(1, rp)
        la, lb = mode_a.i2, mode_b.i2

        def theta_integrand(th):
            return (fa * np.exp(1j * la * th)) * np.conj(fb * np.exp(1j * lb * th))

        return quad_1d(theta_integrand, 0.0, 2.0 * math.pi, spec)

    def outer(rps):
        rps = np.asarray(rps, dtype=float)
        return np.array([ring(float(rp)) * rp for rp in rps.ravel()]).reshape(rps.shape)

    total = quad_1d(outer, 0.0, r_r, spec)
    return float(abs(total) ** 2)


def azimuthal_mode_set(
    params: BeamParams,
    geom: OpticalGeometry,
    threshold: float = 1e-6,
    l_cap: int = 80,
    spec: QuadratureSpec | None = None,
):
    """Azimuthal modes {(0, l)} worth carrying: |l| grows until eta < threshold.

    Returns (ls, etas) with ls = [0, 1, -1, 2, -2, ...] and matching
    transmissivities (eta is even in l, computed once per |l|).
    """
    ls = [0]
    eta0 = lg_mode_transmissivity(0, params, geom, spec)
    etas = [eta0]
    for al in range(1, l_cap + 1):
        eta = lg_mode_transmissivity(al, params, geom, spec)
        if eta < threshold:
            break
        ls.extend([al, -al])
        etas.extend([eta, eta])
    return np.array(ls, dtype=int), np.array(etas, dtype=float)

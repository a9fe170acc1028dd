"""Decoy-state BB84 rates, capacities, and mode-separator handling.

The rate chain follows the standard asymptotic decoy-state analysis: a
click probability per pulse, a quantum bit error rate, and single- and
zero-photon yields estimated from the decoy statistics, combined into a
privacy-amplified key rate per transmitted mode.  Cross-talk between
spatial channels enters as an effective dark-click probability.

Yields are computed as the probability ratios that define them
(y_i = p_ri / p_r); printed closed forms that partially cancel shared
factors are algebraically equivalent where consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mathkern import DomainError, binary_entropy
from .modes import (
    ApertureShape,
    BeamParams,
    OpticalGeometry,
    beam_width_soft,
    eta_soft,
    fresnel_number,
)
from .ogba import PixelGrid, grid_interference


def _check_range(name: str, value, lo, hi, lo_open=False, hi_open=False) -> float:
    ok = isinstance(value, (int, float)) and math.isfinite(value)
    if ok:
        ok = (value > lo if lo_open else value >= lo) and (value < hi if hi_open else value <= hi)
    if not ok:
        lo_b = "(" if lo_open else "["
        hi_b = ")" if hi_open else "]"
        raise DomainError(f"{name} must lie in {lo_b}{lo}, {hi}{hi_b}, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class DetectorModel:
    """Receiver electronics: dark clicks, efficiency, visibility, ECC, clock.

    Defaults model the ideal detectors of the baseline analysis; only the
    repetition rate has no natural ideal value.
    """

    p_dark: float = 0.0
    eta_det: float = 1.0
    visibility: float = 1.0
    f_leak: float = 1.0
    rep_rate_hz: float = 1e10

    def __post_init__(self):
        _check_range("p_dark", self.p_dark, 0.0, 1.0, hi_open=True)
        _check_range("eta_det", self.eta_det, 0.0, 1.0, lo_open=True)
        _check_range("visibility", self.visibility, 0.0, 1.0)
        if not (isinstance(self.f_leak, (int, float)) and math.isfinite(self.f_leak) and self.f_leak >= 1.0):
            raise DomainError(f"f_leak must be >= 1, got {self.f_leak!r}")
        if not (isinstance(self.rep_rate_hz, (int, float)) and math.isfinite(self.rep_rate_hz) and self.rep_rate_hz > 0):
            raise DomainError(f"rep_rate_hz must be > 0, got {self.rep_rate_hz!r}")


@dataclass(frozen=True)
class ChannelPoint:
    """End-to-end transmissivity (detector efficiency included) plus the
    mean leaked photons per pulse reaching the same detector."""

    eta: float
    p_noise: float = 0.0

    def __post_init__(self):
        _check_range("eta", self.eta, 0.0, 1.0)
        if not (isinstance(self.p_noise, (int, float)) and math.isfinite(self.p_noise) and self.p_noise >= 0):
            raise DomainError(f"p_noise must be >= 0, got {self.p_noise!r}")


@dataclass(frozen=True)
class RateBreakdown:
    """Every intermediate of the key-rate chain, plus the rate itself.

    ``rate_unclamped`` may be negative; optimizers use it for smoothness.
    ``rate`` is the physical bits/mode, clamped at zero.  When no click
    can ever occur (p_r = 0) the QBER is undefined and reported as NaN.
    """

    p_p: float
    p_r: float
    q_ber: float
    y_0: float
    y_1: float
    eps_1: float
    i_ab: float
    i_e: float
    p_r0: float
    p_r1: float
    p_r1w: float
    rate_unclamped: float

    @property
    def rate(self) -> float:
        return max(0.0, self.rate_unclamped)


def noise_to_dark(p_noise: float, p_dark: float, eta_det: float) -> float:
    """Effective dark-click probability with leaked light present.

    Leaked photons are Poissonian, so the no-click probabilities multiply:
    p_eff = 1 - (1 - p_dark) e^{-eta_det * p_noise}.
    """
    if not (isinstance(p_noise, (int, float)) and math.isfinite(p_noise) and p_noise >= 0):
        raise DomainError(f"p_noise must be >= 0, got {p_noise!r}")
    _check_range("p_dark", p_dark, 0.0, 1.0, hi_open=True)
    _check_range("eta_det", eta_det, 0.0, 1.0, lo_open=True)
    # expm1 form: exact p_dark at p_noise = 0, no cancellation for small noise
    return p_dark - (1.0 - p_dark) * math.expm1(-eta_det * p_noise)


def bb84_rate(channel: ChannelPoint, det: DetectorModel, intensity: float) -> RateBreakdown:
    """Asymptotic decoy-state BB84 key rate for one channel.

    ``intensity`` is the signal-pulse mean photon number |alpha|^2.  The
    channel transmissivity must already include detector efficiency; the
    channel's leaked photons fold into the dark-click probability.
    """
    if not (isinstance(intensity, (int, float)) and math.isfinite(intensity) and intensity >= 0):
        raise DomainError(f"intensity must be >= 0, got {intensity!r}")
    eta = channel.eta
    mu = float(intensity)
    p_d = noise_to_dark(channel.p_noise, det.p_dark, det.eta_det)

    p_p = -math.expm1(-eta * mu)
    p_r = p_p * (1.0 - p_d) + 2.0 * (1.0 - p_p) * p_d * (1.0 - p_d)
    if p_r <= 0.0:
        return RateBreakdown(
            p_p=p_p,
            p_r=0.0,
            q_ber=math.nan,
            y_0=0.0,
            y_1=0.0,
            eps_1=math.nan,
            i_ab=0.0,
            i_e=0.0,
            p_r0=0.0,
            p_r1=0.0,
            p_r1w=0.0,
            rate_unclamped=0.0,
        )

    q_ber = (0.5 * (1.0 - det.visibility) * p_p * (1.0 - p_d) + p_d * (1.0 - p_d) * (1.0 - p_p)) / p_r

    mu_single = mu * math.exp(-mu)
    p_r1 = mu_single * (eta + 2.0 * (1.0 - eta) * p_d) * (1.0 - p_d)
    p_r1w = mu_single * (1.0 - eta) * p_d * (1.0 - p_d)
    p_r0 = 2.0 * p_d * (1.0 - p_d) * math.exp(-mu)
    y_1 = p_r1 / p_r
    y_0 = p_r0 / p_r
    den = eta + 2.0 * (1.0 - eta) * p_d
    # eta = p_d = 0 never reaches here (p_r = 0); den = 0 is the eta -> 0
    # limit where both error and detection are dark-click-driven.
    eps_1 = (1.0 - eta) * p_d / den if den > 0.0 else 0.5

    i_ab = 1.0 - det.f_leak * binary_entropy(q_ber)
    secure_fraction = y_0 + y_1 * (1.0 - binary_entropy(eps_1))
    i_e = 1.0 - secure_fraction
    rate_unclamped = p_r * (secure_fraction - det.f_leak * binary_entropy(q_ber))
    return RateBreakdown(
        p_p=p_p,
        p_r=p_r,
        q_ber=q_ber,
        y_0=y_0,
        y_1=y_1,
        eps_1=eps_1,
        i_ab=i_ab,
        i_e=i_e,
        p_r0=p_r0,
        p_r1=p_r1,
        p_r1w=p_r1w,
        rate_unclamped=rate_unclamped,
    )


def capacity_single(eta: float) -> float:
    """Two-way-assisted key capacity of a pure-loss channel, bits/mode."""
    _check_range("eta", eta, 0.0, 1.0, hi_open=False)
    if eta >= 1.0:
        raise DomainError("capacity diverges at eta = 1")
    return -math.log2(1.0 - eta)


def capacity_multimode_soft(
    geom: OpticalGeometry,
    rep_rate_hz: float,
    eta_floor: float = 1e-12,
) -> float:
    """Capacity of the full soft-aperture eigenmode set, bits/s.

    Sums q modes of transmissivity eta_q over both polarizations:
    2 nu sum_q q * (-log2(1 - eta_q)), truncated once eta_q < eta_floor.
    """
    if geom.transmitter.shape is not ApertureShape.SOFT_GAUSSIAN or (
        geom.receiver.shape is not ApertureShape.SOFT_GAUSSIAN
    ):
        raise DomainError("capacity_multimode_soft requires soft Gaussian pupils")
    if not (isinstance(rep_rate_hz, (int, float)) and math.isfinite(rep_rate_hz) and rep_rate_hz > 0):
        raise DomainError(f"rep_rate_hz must be > 0, got {rep_rate_hz!r}")
    d_f = fresnel_number(geom)
    base = eta_soft(1, d_f)
    if base >= 1.0:
        raise DomainError("eigenmode transmissivity reached 1; capacity diverges")
    q_max = max(1, math.ceil(math.log(eta_floor) / math.log(base)))
    q = np.arange(1, q_max + 1, dtype=float)
    etas = base**q
    etas = etas[etas >= eta_floor]
    q = q[: len(etas)]
    return float(-2.0 * rep_rate_hz * np.sum(q * np.log2(1.0 - etas)))


@dataclass(frozen=True)
class CrosstalkMatrix:
    """Mode-separator routing: values[i, j] is the fraction of power sent
    on mode labels[i] that lands on the detector for labels[j]."""

    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        labels = tuple(int(l) for l in self.labels)
        object.__setattr__(self, "labels", labels)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        k = len(labels)
        if len(set(labels)) != k or k == 0:
            raise DomainError("mode labels must be unique and non-empty")
        if values.shape != (k, k):
            raise DomainError(f"matrix shape {values.shape} does not match {k} labels")
        if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
            raise DomainError("matrix entries must be fractions in [0, 1]")
        sums = values.sum(axis=1)
        if np.any(sums > 1.0 + 1e-9):
            bad = self.labels[int(np.argmax(sums))]
            raise DomainError(f"row for mode {bad} sums to more than 1")

    def index_of(self, label: int) -> int:
        try:
            return self.labels.index(int(label))
        except ValueError:
            raise DomainError(f"mode label {label} not in matrix") from None


def synthetic_crosstalk_matrix(
    labels=None,
    diagonal: float = 0.921,
) -> CrosstalkMatrix:
    """Stand-in separator matrix when no measured dataset is available.

    Diagonal fixed at the quoted separation efficiency; each row's
    remaining mass decays exponentially with mode distance and is scaled
    so every row sums to exactly 1.
    """
    if labels is None:
        labels = range(-12, 13)
    labels = tuple(int(l) for l in labels)
    _check_range("diagonal", diagonal, 0.0, 1.0, lo_open=True)
    k = len(labels)
    values = np.zeros((k, k))
    arr = np.array(labels, dtype=float)
    for i in range(k):
        weights = np.exp(-np.abs(arr - arr[i]))
        weights[i] = 0.0
        total = weights.sum()
        if total > 0:
            values[i] = (1.0 - diagonal) * weights / total
        values[i, i] = diagonal if k > 1 else 1.0
    return CrosstalkMatrix(labels, values)


def normalize_crosstalk(matrix: CrosstalkMatrix, used) -> CrosstalkMatrix:
    """Restrict to the used mode labels and renormalize each row to sum 1.

    Models a separator read out only on the used ports, as in the quoted
    three-mode example where the center row becomes {0.8511, 0.07447 x2}.
    """
    used = sorted(int(l) for l in used)
    if len(set(used)) != len(used) or not used:
        raise DomainError("used mode subset must be non-empty without duplicates")
    idx = [matrix.index_of(l) for l in used]
    sub = matrix.values[np.ix_(idx, idx)].copy()
    sums = sub.sum(axis=1)
    if np.any(sums <= 0):
        bad = used[int(np.argmin(sums))]
        raise DomainError(f"row for mode {bad} has zero mass on the used subset")
    sub /= sums[:, None]
    return CrosstalkMatrix(tuple(used), sub)


def save_crosstalk_matrix(matrix: CrosstalkMatrix, path) -> None:
    """Write the plain-text format: label header row, then matrix rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(str(l) for l in matrix.labels) + "\n")
        for row in matrix.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def load_crosstalk_matrix(path) -> CrosstalkMatrix:
    """Read a separator matrix written by ``save_crosstalk_matrix``.

    Validation (squareness, fraction range, row sums) happens in the
    CrosstalkMatrix constructor and names the offending mode.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise DomainError(f"{path}: empty cross-talk matrix file")
    try:
        labels = tuple(int(tok) for tok in lines[0].split(","))
    except ValueError as exc:
        raise DomainError(f"{path}: header row must be integer mode labels ({exc})") from None
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise DomainError(f"{path}:{lineno}: bad matrix value ({exc})") from None
    if len(rows) != len(labels) or any(len(r) != len(labels) for r in rows):
        raise DomainError(f"{path}: matrix must be square with one row per label")
    return CrosstalkMatrix(labels, np.array(rows))


def lg_rate_from_etas(
    etas: np.ndarray,
    det: DetectorModel,
    intensity: float,
    matrix: CrosstalkMatrix | None = None,
    clamp: bool = True,
) -> float:
    """Summed bits/s over LG channels with precomputed transmissivities.

    ``etas[i]`` is the diffraction transmissivity of channel i.  With no
    matrix the channels are independent; with a matrix (already restricted
    and normalized to these channels, in the same order) each detector j
    sees signal etas[j]*T[j,j] and leaked light from every other mode.
    ``clamp=False`` sums the raw per-channel rates for optimizers.
    """

    def value(breakdown):
        return breakdown.rate if clamp else breakdown.rate_unclamped

    etas = np.asarray(etas, dtype=float)
    total = 0.0
    if matrix is None:
        for eta in etas:
            ch = ChannelPoint(eta=float(eta) * det.eta_det, p_noise=0.0)
            total += value(bb84_rate(ch, det, intensity))
        return det.rep_rate_hz * total
    if len(matrix.labels) != len(etas):
        raise DomainError("matrix size does not match the channel count")
    t = matrix.values
    for j in range(len(etas)):
        leaked = float(np.sum(intensity * etas * t[:, j])) - intensity * etas[j] * t[j, j]
        ch = ChannelPoint(eta=float(etas[j] * t[j, j]) * det.eta_det, p_noise=leaked)
        total += value(bb84_rate(ch, det, intensity))
    return det.rep_rate_hz * total


def lg_system_rate(
    geom: OpticalGeometry,
    det: DetectorModel,
    mode_ls,
    separator,
    params: BeamParams,
) -> float:
    """Total bits/s of an azimuthal-LG system over the given mode labels.

    ``separator`` is "ideal" for perfect mode sorting or a CrosstalkMatrix
    covering at least the used labels (it is restricted and renormalized
    to them).  Mode separation itself is lossless.
    """
    from .modes import lg_mode_transmissivity

    mode_ls = [int(l) for l in mode_ls]
    if len(set(mode_ls)) != len(mode_ls) or not mode_ls:
        raise DomainError("mode_ls must be non-empty without duplicates")
    eta_by_al = {al: lg_mode_transmissivity(al, params, geom) for al in {abs(l) for l in mode_ls}}
    if isinstance(separator, str):
        if separator != "ideal":
            raise DomainError(f"separator must be 'ideal' or a CrosstalkMatrix, got {separator!r}")
        etas = np.array([eta_by_al[abs(l)] for l in mode_ls])
        return lg_rate_from_etas(etas, det, params.intensity)
    sub = normalize_crosstalk(separator, mode_ls)
    etas = np.array([eta_by_al[abs(l)] for l in sub.labels])
    return lg_rate_from_etas(etas, det, params.intensity, sub)


def ogba_system_rate(
    geom: OpticalGeometry,
    det: DetectorModel,
    grid: PixelGrid,
    params: BeamParams,
    clamp: bool = True,
) -> float:
    """Total bits/s of the beam-array system on a pixelated receiver.

    Each representative pixel is an independent BB84 channel whose noise
    is the interference from all other beams; contributions scale by the
    pixel's multiplicity.
    """
    if geom.transmitter.shape is not ApertureShape.HARD_SQUARE:
        raise DomainError("ogba_system_rate requires a hard_square transmitter")
    l_t = geom.transmitter.dimension_m
    if abs(l_t - grid.l_r) > 1e-12 * l_t:
        raise DomainError(
            f"transmitter side {l_t} must equal the receiver aperture side {grid.l_r}"
        )
    etas, leaks, mults = grid_interference(grid, params, geom)
    total = 0.0
    for eta, leak, mult in zip(etas, leaks, mults):
        ch = ChannelPoint(eta=float(eta) * det.eta_det, p_noise=float(leak))
        r = bb84_rate(ch, det, params.intensity)
        total += int(mult) * (r.rate if clamp else r.rate_unclamped)
    return det.rep_rate_hz * total


def soft_multimode_rate(
    geom: OpticalGeometry,
    det: DetectorModel,
    intensity: float,
    eta_floor: float = 1e-12,
    clamp: bool = True,
) -> float:
    """Bits/s of BB84 run in parallel over the soft-aperture eigenmodes.

    Every eigenmode group q holds q orthogonal modes of transmissivity
    eta_q; all share one pulse intensity.  No cross-talk: the modes stay
    orthogonal through soft pupils.
    """
    if geom.transmitter.shape is not ApertureShape.SOFT_GAUSSIAN or (
        geom.receiver.shape is not ApertureShape.SOFT_GAUSSIAN
    ):
        raise DomainError("soft_multimode_rate requires soft Gaussian pupils")
    d_f = fresnel_number(geom)
    base = eta_soft(1, d_f)
    total = 0.0
    q = 1
    eta_q = base
    while eta_q >= eta_floor:
        ch = ChannelPoint(eta=eta_q * det.eta_det, p_noise=0.0)
        r = bb84_rate(ch, det, intensity)
        total += q * (r.rate if clamp else r.rate_unclamped)
        q += 1
        eta_q *= base
    return det.rep_rate_hz * total


def soft_multimode_params(geom: OpticalGeometry, intensity: float = 1.0) -> BeamParams:
    """Eigenmode beam width for the soft-pupil geometry, as BeamParams."""
    d_f = fresnel_number(geom)
    return BeamParams(beam_width_soft(geom.transmitter.dimension_m, d_f), intensity)

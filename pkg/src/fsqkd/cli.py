"""Command-line surface: config files, rate sweeps, gap reports, plot data.

Configs are flat ``key = value`` text with units in the key names, chosen
for diff-ability and bit-exact reproducibility.  Result files are CSV with
a fixed column order and a comment header recording the config hash, code
version, and tolerances; identical configs reproduce identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import __version__
from .mathkern import QuadratureSpec
from .optimize import (
    SYSTEMS,
    OptimizerSettings,
    SweepEntry,
    sweep,
    system_geometry,
)
from .qkd import (
    DetectorModel,
    capacity_multimode_soft,
    load_crosstalk_matrix,
    synthetic_crosstalk_matrix,
)
from .modes import eta_soft, fresnel_number

log = logging.getLogger("fsqkd.cli")

COLUMNS = (
    "range_m",
    "system",
    "config_label",
    "rate_bits_per_mode",
    "rate_bits_per_s",
    "a_m",
    "l_d_m",
    "l_o_m",
    "alpha_sq",
    "n_pixels",
    "p_noise_max",
)

_SPACINGS = ("log", "lin")
_PROFILES = ("paper", "fast")


class UsageError(Exception):
    """Invalid configuration, flags, or input files; names the offender."""


@dataclass(frozen=True)
class RunConfig:
    """One reproducible run: link physics, range grid, and search knobs."""

    wavelength_um: float = 1.55
    aperture_area_m2: float = 0.005 * math.pi
    nu_hz: float = 1e10
    p_dark: float = 1e-6
    eta_det: float = 1.0
    visibility: float = 0.99
    f_leak: float = 1.0
    range_start_km: float = 0.2
    range_stop_km: float = 50.0
    range_count: int = 30
    range_spacing: str = "log"
    systems: tuple = ("soft_multimode",)
    matrix_path: str = ""
    seed_profile: str = "paper"
    quad_abs_tol: float = 1e-12
    quad_rel_tol: float = 1e-10

    def __post_init__(self):
        positive = (
            "wavelength_um",
            "aperture_area_m2",
            "nu_hz",
            "f_leak",
            "quad_abs_tol",
            "quad_rel_tol",
        )
        for name in positive:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise UsageError(f"config field {name} must be positive, got {v!r}")
        if not 0.0 <= self.p_dark < 1.0:
            raise UsageError(f"config field p_dark must be in [0, 1), got {self.p_dark!r}")
        if not 0.0 < self.eta_det <= 1.0:
            raise UsageError(f"config field eta_det must be in (0, 1], got {self.eta_det!r}")
        if not 0.0 <= self.visibility <= 1.0:
            raise UsageError(
                f"config field visibility must be in [0, 1], got {self.visibility!r}"
            )
        if self.f_leak < 1.0:
            raise UsageError(f"config field f_leak must be >= 1, got {self.f_leak!r}")
        if not (self.range_start_km > 0 and self.range_stop_km >= self.range_start_km):
            raise UsageError(
                "config fields range_start_km/range_stop_km must satisfy "
                f"0 < start <= stop, got {self.range_start_km!r}, {self.range_stop_km!r}"
            )
        if not (isinstance(self.range_count, int) and self.range_count >= 0):
            raise UsageError(
                f"config field range_count must be an integer >= 0, got {self.range_count!r}"
            )
        if self.range_spacing not in _SPACINGS:
            raise UsageError(
                f"config field range_spacing must be one of {_SPACINGS}, "
                f"got {self.range_spacing!r}"
            )
        object.__setattr__(self, "systems", tuple(self.systems))
        for s in self.systems:
            if s not in SYSTEMS:
                raise UsageError(f"config field systems: unknown system {s!r}")
        if self.seed_profile not in _PROFILES:
            raise UsageError(
                f"config field seed_profile must be one of {_PROFILES}, "
                f"got {self.seed_profile!r}"
            )

    def ranges_m(self) -> list:
        if self.range_count == 0:
            return []
        start, stop = self.range_start_km * 1e3, self.range_stop_km * 1e3
        if self.range_count == 1:
            return [start]
        if self.range_spacing == "log":
            grid = np.logspace(math.log10(start), math.log10(stop), self.range_count)
        else:
            grid = np.linspace(start, stop, self.range_count)
        return [float(v) for v in grid]

    def detector(self) -> DetectorModel:
        return DetectorModel(
            p_dark=self.p_dark,
            eta_det=self.eta_det,
            visibility=self.visibility,
            f_leak=self.f_leak,
            rep_rate_hz=self.nu_hz,
        )

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(abs_tol=self.quad_abs_tol, rel_tol=self.quad_rel_tol)

    def settings(self) -> OptimizerSettings:
        return OptimizerSettings.from_profile(self.seed_profile)


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form; floats use repr so parsing round-trips bit-exactly."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if f.name == "systems":
            v = ",".join(v)
        lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse the flat key = value form; unknown or duplicate keys error."""
    spec = {f.name: f for f in fields(RunConfig)}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno} is not 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in spec:
            raise UsageError(f"unknown config key {key!r} (line {lineno})")
        if key in seen:
            raise UsageError(f"duplicate config key {key!r} (line {lineno})")
        seen[key] = (value, lineno)
    kwargs = {}
    for key, (value, lineno) in seen.items():
        try:
            if key == "systems":
                kwargs[key] = tuple(s.strip() for s in value.split(",") if s.strip())
            elif key in ("range_spacing", "matrix_path", "seed_profile"):
                kwargs[key] = value
            elif key == "range_count":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        except ValueError:
            raise UsageError(
                f"config key {key!r} has invalid value {value!r} (line {lineno})"
            ) from None
    return RunConfig(**kwargs)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Result files


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _header_lines(cfg: RunConfig) -> list:
    s = cfg.settings()
    return [
        f"# fsqkd version = {__version__}",
        f"# config_hash = {config_hash(cfg)}",
        f"# seed_profile = {cfg.seed_profile}",
        f"# opt_param_tol_rel = {s.xtol!r}",
        f"# opt_objective_tol_rel = {s.ftol_rel!r}",
        f"# quad_abs_tol = {cfg.quad_abs_tol!r}",
        f"# quad_rel_tol = {cfg.quad_rel_tol!r}",
    ]


def _entry_row(e: SweepEntry) -> str:
    vals = (
        e.range_m,
        e.system,
        e.config_label,
        e.rate_bits_per_mode,
        e.rate_bits_per_s,
        e.a_m,
        e.l_d_m,
        e.l_o_m,
        e.alpha_sq,
        e.n_pixels,
        e.p_noise_max,
    )
    return ",".join(_fmt(v) for v in vals)


def _open_out(path: str):
    """Open an output file for writing, creating its directory if needed."""
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


def write_results(path: str, cfg: RunConfig, entries) -> str:
    with _open_out(path) as fh:
        for line in _header_lines(cfg):
            fh.write(line + "\n")
        fh.write(",".join(COLUMNS) + "\n")
        for e in entries:
            fh.write(_entry_row(e) + "\n")
            if e.error is not None:
                fh.write(f"# failed: range_m={e.range_m!r} system={e.system} error={e.error}\n")
    return path


def read_results(path: str):
    """Read a results CSV; returns (meta dict from # lines, list of row dicts)."""
    meta = {}
    rows = []
    header = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read results file {path}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, _, v = body.partition("=")
                    meta[k.strip()] = v.strip()
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                missing = [c for c in COLUMNS if c not in header]
                if missing:
                    raise UsageError(
                        f"results file {path} is missing column(s) "
                        f"{', '.join(missing)} (line {lineno})"
                    )
                continue
            if len(parts) != len(header):
                raise UsageError(
                    f"results file {path} line {lineno} has {len(parts)} fields, "
                    f"expected {len(header)}"
                )
            row = dict(zip(header, parts))
            for col in COLUMNS:
                if col in ("system", "config_label"):
                    continue
                try:
                    row[col] = int(row[col]) if col == "n_pixels" else float(row[col])
                except ValueError:
                    raise UsageError(
                        f"results file {path} line {lineno}: column {col} has "
                        f"non-numeric value {row[col]!r}"
                    ) from None
            rows.append(row)
    if header is None:
        raise UsageError(f"results file {path} has no column header row")
    return meta, rows


# ---------------------------------------------------------------------------
# Commands


def _resolve_matrix(cfg: RunConfig, matrix_path: str | None, needed: bool):
    path = matrix_path or cfg.matrix_path
    if path:
        return load_crosstalk_matrix(path)
    if needed:
        log.warning(
            "lg_matrix: no separator matrix file given; "
            "using the synthetic default matrix"
        )
        return synthetic_crosstalk_matrix()
    return None


def cmd_capacity(cfg: RunConfig, out: str) -> str:
    """Ultimate multimode capacity of the soft-aperture link, per range."""
    det = cfg.detector()
    entries = []
    for L in cfg.ranges_m():
        geom = system_geometry("soft_multimode", cfg.wavelength_um * 1e-6,
                               cfg.aperture_area_m2, L)
        rate = capacity_multimode_soft(geom, cfg.nu_hz)
        d_f = fresnel_number(geom)
        base = eta_soft(1, d_f)
        n_modes, q, eta_q = 0, 1, base
        while eta_q >= 1e-12:
            n_modes += q
            q += 1
            eta_q *= base
        entries.append(SweepEntry(
            range_m=L,
            system="capacity",
            config_label="soft_eigenmodes",
            rate_bits_per_s=rate,
            rate_bits_per_mode=rate / cfg.nu_hz,
            a_m=math.nan,
            l_d_m=math.nan,
            l_o_m=math.nan,
            alpha_sq=math.nan,
            n_pixels=n_modes,
            p_noise_max=0.0,
        ))
    return write_results(out, cfg, entries)


def cmd_rate(
    cfg: RunConfig,
    systems=None,
    out: str = "rate.csv",
    matrix_path: str | None = None,
) -> str:
    """Optimized secret-key rates, one row per (range, system)."""
    systems = tuple(systems) if systems else cfg.systems
    for s in systems:
        if s not in SYSTEMS:
            raise UsageError(f"unknown system {s!r}; choose from {', '.join(SYSTEMS)}")
    matrix = _resolve_matrix(cfg, matrix_path, needed="lg_matrix" in systems)
    result = sweep(
        cfg.ranges_m(),
        systems,
        wavelength_m=cfg.wavelength_um * 1e-6,
        aperture_area_m2=cfg.aperture_area_m2,
        det=cfg.detector(),
        settings=cfg.settings(),
        matrix=matrix,
        quad=cfg.quadrature(),
    )
    return write_results(out, cfg, result.entries)


@dataclass(frozen=True)
class GapReport:
    """Per-range rate ratio of file A over file B, in dB."""

    system_a: str
    system_b: str
    ranges_m: tuple
    gaps_db: tuple
    rates_a: tuple
    rates_b: tuple
    excluded_zero_rows: int
    worst_gap_db: float  # largest A-over-B advantage; NaN if nothing compared


def _single_system(path: str, rows) -> str:
    names = sorted({r["system"] for r in rows})
    if len(names) > 1:
        raise UsageError(
            f"gap input {path} mixes systems {', '.join(names)}; "
            "write one system per results file"
        )
    return names[0] if names else ""


def cmd_gap(path_a: str, path_b: str, out: str | None = None) -> GapReport:
    """Compare two single-system results files over a shared range grid."""
    _, rows_a = read_results(path_a)
    _, rows_b = read_results(path_b)
    sys_a = _single_system(path_a, rows_a)
    sys_b = _single_system(path_b, rows_b)
    by_a = {r["range_m"]: r for r in rows_a}
    by_b = {r["range_m"]: r for r in rows_b}
    only_a = sorted(set(by_a) - set(by_b))
    only_b = sorted(set(by_b) - set(by_a))
    if only_a or only_b:
        parts = []
        if only_a:
            parts.append(f"ranges only in {path_a}: {', '.join(repr(v) for v in only_a)}")
        if only_b:
            parts.append(f"ranges only in {path_b}: {', '.join(repr(v) for v in only_b)}")
        raise UsageError("range grids do not match; " + "; ".join(parts))

    ranges, gaps, ra_list, rb_list = [], [], [], []
    excluded = 0
    for L in sorted(by_a):
        ra = by_a[L]["rate_bits_per_s"]
        rb = by_b[L]["rate_bits_per_s"]
        if not (math.isfinite(ra) and math.isfinite(rb) and ra > 0 and rb > 0):
            excluded += 1
            continue
        ranges.append(L)
        gaps.append(10.0 * math.log10(ra / rb))
        ra_list.append(ra)
        rb_list.append(rb)
    worst = max(gaps) if gaps else math.nan
    report = GapReport(
        system_a=sys_a,
        system_b=sys_b,
        ranges_m=tuple(ranges),
        gaps_db=tuple(gaps),
        rates_a=tuple(ra_list),
        rates_b=tuple(rb_list),
        excluded_zero_rows=excluded,
        worst_gap_db=worst,
    )
    if out:
        with _open_out(out) as fh:
            fh.write(f"# fsqkd version = {__version__}\n")
            fh.write(f"# gap = 10*log10(rate[{sys_a or path_a}] / rate[{sys_b or path_b}])\n")
            fh.write("range_m,rate_a_bits_per_s,rate_b_bits_per_s,gap_db\n")
            for L, ra, rb, g in zip(ranges, ra_list, rb_list, gaps):
                fh.write(f"{L!r},{ra!r},{rb!r},{g!r}\n")
            fh.write(f"# excluded_zero_rows = {excluded}\n")
            fh.write(f"# worst_gap_db = {worst!r}\n")
    return report


_PARAM_SERIES = ("a_m", "l_d_m", "alpha_sq")


def cmd_plotdata(paths, out_prefix: str = "plot") -> list:
    """Emit per-system plot series from results files.

    For each system: a rate series (range vs bits/s, log-log) and a
    parameter series (range vs beam width, pixel side, intensity).
    Rows with zero or non-finite rate are excluded from both.
    """
    written = []
    for path in paths:
        _, rows = read_results(path)
        by_system: dict = {}
        for r in rows:
            by_system.setdefault(r["system"], []).append(r)
        for system, srows in sorted(by_system.items()):
            keep = [
                r for r in srows
                if math.isfinite(r["rate_bits_per_s"]) and r["rate_bits_per_s"] > 0
            ]
            tag = system.replace(":", "-")
            rate_path = f"{out_prefix}_rate_{tag}.csv"
            with _open_out(rate_path) as fh:
                fh.write(f"# fsqkd version = {__version__}\n")
                fh.write(f"# system = {system}\n")
                fh.write("# axes = log-log\n")
                fh.write("range_m,rate_bits_per_s\n")
                for r in keep:
                    fh.write(f"{r['range_m']!r},{r['rate_bits_per_s']!r}\n")
            written.append(rate_path)
            params_path = f"{out_prefix}_params_{tag}.csv"
            with _open_out(params_path) as fh:
                fh.write(f"# fsqkd version = {__version__}\n")
                fh.write(f"# system = {system}\n")
                fh.write("# axes = log-lin\n")
                fh.write("range_m," + ",".join(_PARAM_SERIES) + "\n")
                for r in keep:
                    fh.write(
                        f"{r['range_m']!r},"
                        + ",".join(repr(r[c]) for c in _PARAM_SERIES)
                        + "\n"
                    )
            written.append(params_path)
    return written


# ---------------------------------------------------------------------------
# Argument parsing


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "ranges", None):
        parts = args.ranges.split(",")
        if len(parts) != 4:
            raise UsageError(
                "--ranges expects start_km,stop_km,count,log|lin, got "
                f"{args.ranges!r}"
            )
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"--ranges has non-numeric fields: {args.ranges!r}") from None
        spacing = parts[3].strip()
        cfg = replace(
            cfg,
            range_start_km=start,
            range_stop_km=stop,
            range_count=count,
            range_spacing=spacing,
        )
    if getattr(args, "seed_profile", None):
        cfg = replace(cfg, seed_profile=args.seed_profile)
    return cfg


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    return _apply_overrides(cfg, args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fsqkd",
        description="Free-space QKD rate simulator: capacities, optimized "
        "rates, gap reports, and plot data.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--out", default=out_default, help="output file path")
        sp.add_argument(
            "--ranges",
            help="range grid override: start_km,stop_km,count,log|lin",
        )

    sp = sub.add_parser("capacity", help="ultimate soft-aperture multimode capacity")
    common(sp, "capacity.csv")

    sp = sub.add_parser("rate", help="optimized secret-key rates per system")
    common(sp, "rate.csv")
    sp.add_argument(
        "--system",
        action="append",
        help=f"system to optimize (repeatable); one of {', '.join(SYSTEMS)}",
    )
    sp.add_argument("--matrix", help="separator cross-talk matrix CSV file")
    sp.add_argument(
        "--seed-profile",
        choices=_PROFILES,
        dest="seed_profile",
        help="optimizer effort profile",
    )

    sp = sub.add_parser("gap", help="dB gap between two single-system results files")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--out", help="optional gap report output path")

    sp = sub.add_parser("plotdata", help="emit plot-ready series from results files")
    sp.add_argument("files", nargs="+")
    sp.add_argument("--out", default="plot", help="output file prefix")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "capacity":
            path = cmd_capacity(_load(args), args.out)
            print(path)
        elif args.command == "rate":
            path = cmd_rate(
                _load(args),
                systems=args.system,
                out=args.out,
                matrix_path=args.matrix,
            )
            print(path)
        elif args.command == "gap":
            report = cmd_gap(args.file_a, args.file_b, args.out)
            print(
                f"compared {len(report.gaps_db)} ranges "
                f"({report.excluded_zero_rows} zero-rate rows excluded); "
                f"worst gap {report.worst_gap_db!r} dB"
            )
        elif args.command == "plotdata":
            for path in cmd_plotdata(args.files, args.out):
                print(path)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

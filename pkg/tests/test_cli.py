"""Tests for the command-line surface: configs, result files, commands."""

import math
import os

import pytest

from fsqkd.cli import (
    COLUMNS,
    RunConfig,
    UsageError,
    cmd_capacity,
    cmd_gap,
    cmd_plotdata,
    cmd_rate,
    config_hash,
    emit_config,
    load_config,
    main,
    parse_config,
    read_results,
)

FAST = dict(
    range_start_km=1.0,
    range_stop_km=2.0,
    range_count=2,
    range_spacing="lin",
    seed_profile="fast",
)


class TestConfig:
    def test_round_trip_is_bit_exact(self):
        cfg = RunConfig(wavelength_um=1.55, p_dark=3e-7, systems=("soft_multimode", "lg_ideal"))
        again = parse_config(emit_config(cfg))
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)

    def test_hash_tracks_content(self):
        a = RunConfig()
        b = RunConfig(p_dark=2e-6)
        assert config_hash(a) != config_hash(b)

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# comment\n\nnu_hz = 5e9\n")
        assert cfg.nu_hz == 5e9

    def test_unknown_key_names_line(self):
        with pytest.raises(UsageError, match=r"unknown config key 'nu_ghz' \(line 2\)"):
            parse_config("p_dark = 1e-6\nnu_ghz = 10\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(UsageError, match="duplicate config key 'p_dark'"):
            parse_config("p_dark = 1e-6\np_dark = 2e-6\n")

    def test_bad_value_names_key_and_line(self):
        with pytest.raises(UsageError, match=r"'p_dark' has invalid value 'tiny' \(line 1\)"):
            parse_config("p_dark = tiny\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(UsageError, match="line 1 is not"):
            parse_config("just words\n")

    def test_validation_errors_name_field(self):
        with pytest.raises(UsageError, match="p_dark"):
            RunConfig(p_dark=1.0)
        with pytest.raises(UsageError, match="eta_det"):
            RunConfig(eta_det=0.0)
        with pytest.raises(UsageError, match="unknown system"):
            RunConfig(systems=("telegraph",))
        with pytest.raises(UsageError, match="range_spacing"):
            RunConfig(range_spacing="geometric")
        with pytest.raises(UsageError, match="seed_profile"):
            RunConfig(seed_profile="slow")
        with pytest.raises(UsageError, match="range_count"):
            RunConfig(range_count=-1)
        with pytest.raises(UsageError, match="range_start_km"):
            RunConfig(range_start_km=5.0, range_stop_km=1.0)

    def test_ranges_m_grids(self):
        assert RunConfig(range_count=0).ranges_m() == []
        assert RunConfig(range_start_km=2.0, range_count=1).ranges_m() == [2000.0]
        lin = RunConfig(**FAST).ranges_m()
        assert lin == [1000.0, 2000.0]
        log = RunConfig(
            range_start_km=1.0, range_stop_km=100.0, range_count=3, range_spacing="log"
        ).ranges_m()
        assert log == pytest.approx([1e3, 1e4, 1e5], rel=1e-12)

    def test_load_config_missing_file(self, tmp_path):
        with pytest.raises(UsageError, match="cannot read config file"):
            load_config(str(tmp_path / "absent.cfg"))


class TestCapacityCommand:
    def test_rows_and_meta(self, tmp_path):
        cfg = RunConfig(
            range_start_km=1.0, range_stop_km=100.0, range_count=3, range_spacing="log"
        )
        out = str(tmp_path / "capacity.csv")
        assert cmd_capacity(cfg, out) == out
        meta, rows = read_results(out)
        assert meta["config_hash"] == config_hash(cfg)
        assert len(rows) == 3
        rates = [r["rate_bits_per_s"] for r in rows]
        assert all(a > b > 0 for a, b in zip(rates, rates[1:]))
        counts = [r["n_pixels"] for r in rows]
        assert all(a >= b >= 1 for a, b in zip(counts, counts[1:]))
        assert all(r["system"] == "capacity" for r in rows)

    def test_empty_grid_writes_header_only(self, tmp_path):
        out = str(tmp_path / "empty.csv")
        cmd_capacity(RunConfig(range_count=0), out)
        meta, rows = read_results(out)
        assert rows == []
        assert "config_hash" in meta


class TestRateCommand:
    def test_rows_per_range_and_system(self, tmp_path):
        cfg = RunConfig(systems=("soft_multimode", "single_fb_square"), **FAST)
        out = str(tmp_path / "rate.csv")
        cmd_rate(cfg, out=out)
        _, rows = read_results(out)
        assert len(rows) == 4
        assert {r["system"] for r in rows} == {"soft_multimode", "single_fb_square"}
        assert all(r["rate_bits_per_s"] > 0 for r in rows)
        assert all(
            r["rate_bits_per_mode"] == pytest.approx(r["rate_bits_per_s"] / cfg.nu_hz)
            for r in rows
        )

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = RunConfig(systems=("single_fb_square",), **FAST)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        cmd_rate(cfg, out=p1)
        cmd_rate(cfg, out=p2)
        with open(p1, "rb") as f1, open(p2, "rb") as f2:
            assert f1.read() == f2.read()

    def test_unknown_system_rejected(self, tmp_path):
        with pytest.raises(UsageError, match="unknown system 'morse'"):
            cmd_rate(RunConfig(**FAST), systems=("morse",), out=str(tmp_path / "x.csv"))


@pytest.fixture(scope="module")
def rate_files(tmp_path_factory):
    # shared fast sweep outputs: one file per system, same grid
    root = tmp_path_factory.mktemp("rates")
    paths = {}
    for system in ("soft_multimode", "single_fb_square"):
        cfg = RunConfig(systems=(system,), **FAST)
        paths[system] = str(root / f"{system}.csv")
        cmd_rate(cfg, out=paths[system])
    return paths


class TestGapCommand:
    def test_multimode_beats_single_beam(self, rate_files, tmp_path):
        out = str(tmp_path / "gap.csv")
        report = cmd_gap(rate_files["soft_multimode"], rate_files["single_fb_square"], out)
        assert report.system_a == "soft_multimode"
        assert report.system_b == "single_fb_square"
        assert len(report.gaps_db) == 2
        assert all(g > 0 for g in report.gaps_db)
        assert report.worst_gap_db == max(report.gaps_db)
        assert report.excluded_zero_rows == 0
        with open(out, "r", encoding="utf-8") as fh:
            text = fh.read()
        assert "worst_gap_db" in text and "gap_db" in text

    def test_identical_inputs_give_zero_gap(self, rate_files):
        report = cmd_gap(rate_files["soft_multimode"], rate_files["soft_multimode"])
        assert all(g == 0.0 for g in report.gaps_db)
        assert report.worst_gap_db == 0.0

    def test_mismatched_grids_name_ranges(self, rate_files, tmp_path):
        cfg = RunConfig(systems=("single_fb_square",), range_start_km=1.0,
                        range_stop_km=3.0, range_count=2, range_spacing="lin",
                        seed_profile="fast")
        other = str(tmp_path / "other.csv")
        cmd_rate(cfg, out=other)
        with pytest.raises(UsageError, match="range grids do not match.*3000.0"):
            cmd_gap(rate_files["soft_multimode"], other)

    def test_mixed_system_file_rejected(self, tmp_path):
        cfg = RunConfig(systems=("soft_multimode", "single_fb_square"), **FAST)
        mixed = str(tmp_path / "mixed.csv")
        cmd_rate(cfg, out=mixed)
        with pytest.raises(UsageError, match="one system per results file"):
            cmd_gap(mixed, mixed)


class TestPlotData:
    def test_series_files_per_system(self, rate_files, tmp_path):
        prefix = str(tmp_path / "plot")
        written = cmd_plotdata([rate_files["soft_multimode"]], prefix)
        assert written == [f"{prefix}_rate_soft_multimode.csv",
                           f"{prefix}_params_soft_multimode.csv"]
        with open(written[0], "r", encoding="utf-8") as fh:
            lines = [l for l in fh.read().splitlines() if not l.startswith("#")]
        assert lines[0] == "range_m,rate_bits_per_s"
        assert len(lines) == 3
        with open(written[1], "r", encoding="utf-8") as fh:
            lines = [l for l in fh.read().splitlines() if not l.startswith("#")]
        assert lines[0] == "range_m,a_m,l_d_m,alpha_sq"

    def test_colon_in_system_name_sanitized(self, tmp_path):
        # hand-rolled results file for a namespaced system label
        rows_path = str(tmp_path / "r.csv")
        with open(rows_path, "w", encoding="utf-8") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            fh.write("1000.0,ogba:auto,centered_single,0.1,1e9,0.01,0.02,nan,0.5,9,0.0\n")
        written = cmd_plotdata([rows_path], str(tmp_path / "p"))
        assert all("ogba-auto" in w for w in written)

    def test_prefix_directory_created(self, rate_files, tmp_path):
        # a prefix inside a directory that does not exist yet
        prefix = str(tmp_path / "plots" / "nested" / "p")
        written = cmd_plotdata([rate_files["soft_multimode"]], prefix)
        assert all(os.path.exists(w) for w in written)


class TestReadResults:
    def test_missing_file_names_path(self, tmp_path):
        with pytest.raises(UsageError, match="cannot read results file"):
            read_results(str(tmp_path / "nope.csv"))

    def test_missing_column_rejected(self, tmp_path):
        p = str(tmp_path / "bad.csv")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write("range_m,system\n1000.0,x\n")
        with pytest.raises(UsageError, match="missing column"):
            read_results(p)

    def test_field_count_mismatch_names_line(self, tmp_path):
        p = str(tmp_path / "bad.csv")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            fh.write("1000.0,x\n")
        with pytest.raises(UsageError, match="line 2 has 2 fields"):
            read_results(p)

    def test_non_numeric_cell_names_column(self, tmp_path):
        p = str(tmp_path / "bad.csv")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            fh.write("1000.0,x,lbl,0.1,fast,0.01,0.02,nan,0.5,9,0.0\n")
        with pytest.raises(UsageError, match="column rate_bits_per_s has non-numeric"):
            read_results(p)

    def test_headerless_file_rejected(self, tmp_path):
        p = str(tmp_path / "bare.csv")
        with open(p, "w", encoding="utf-8") as fh:
            fh.write("# only a comment\n")
        with pytest.raises(UsageError, match="no column header row"):
            read_results(p)


class TestMain:
    def test_capacity_exit_zero(self, tmp_path, capsys):
        out = str(tmp_path / "cap.csv")
        code = main(["capacity", "--ranges", "1,10,3,log", "--out", out])
        assert code == 0
        assert capsys.readouterr().out.strip() == out
        _, rows = read_results(out)
        assert len(rows) == 3

    def test_rate_with_config_file(self, tmp_path, capsys):
        cfg_path = str(tmp_path / "run.cfg")
        with open(cfg_path, "w", encoding="utf-8") as fh:
            fh.write(emit_config(RunConfig(systems=("single_fb_square",), **FAST)))
        out = str(tmp_path / "rate.csv")
        code = main(["rate", "--config", cfg_path, "--out", out])
        assert code == 0
        _, rows = read_results(out)
        assert len(rows) == 2

    def test_usage_error_exits_two(self, tmp_path, capsys):
        code = main(["rate", "--config", str(tmp_path / "absent.cfg")])
        assert code == 2
        assert "error: cannot read config file" in capsys.readouterr().err

    def test_bad_ranges_override_exits_two(self, capsys):
        code = main(["capacity", "--ranges", "1,10,3"])
        assert code == 2
        assert "--ranges expects" in capsys.readouterr().err

    def test_gap_reports_worst(self, rate_files, capsys):
        code = main(["gap", rate_files["soft_multimode"], rate_files["single_fb_square"]])
        assert code == 0
        assert "worst gap" in capsys.readouterr().out

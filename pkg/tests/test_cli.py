"""End-to-end command line tests, driven through main() for speed with one
subprocess smoke check of the module entry point."""

import json
import math
import shlex
import subprocess
import sys

import numpy as np
import pytest

from rownoise.cli import main
from rownoise.imageio import write_image
from rownoise.sensor import Frame

PHASE = str(math.pi / 4.0)
SMALL_FLAGS = [
    "--width", "16", "--active-rows", "64", "--blanking-rows", "36",
    "--pedestal", "128",
]
# 1.5x the 3 kHz line rate of the small geometry: strong 1-row banding.
BANDED_FLAGS = SMALL_FLAGS + [
    "--noise-freq", "4500", "--noise-amp", "1.0", "--noise-phase", PHASE,
]


def write_pgm(path, rows):
    grid = np.repeat(np.asarray(rows, dtype=np.uint8)[:, None], 4, axis=1)
    write_image(Frame(pixels=grid[None]), path)


class TestSimulate:
    def test_writes_numbered_frames_and_sidecar(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(
            ["simulate", "--noise-freq", "126000", "--noise-amp", "1.0",
             "--frames", "3", "--out-dir", str(out)]
        )
        assert code == 0
        for name in ("im1.pgm", "im2.pgm", "im3.pgm"):
            assert (out / name).exists()
        sidecar = json.loads((out / "config.json").read_text())
        assert sidecar["command"] == "simulate"
        assert sidecar["frames"] == 3
        assert sidecar["scenario"]["supply"]["frequency_hz"] == 126000.0

    def test_zero_frames_is_usage_error(self, tmp_path):
        assert main(["simulate", "--frames", "0", "--out-dir", str(tmp_path)]) == 2

    def test_same_seed_reproduces_byte_identical_frames(self, tmp_path):
        args = BANDED_FLAGS + ["--read-noise", "2.0", "--seed", "42", "--frames", "2"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", *args, "--out-dir", str(a)]) == 0
        assert main(["simulate", *args, "--out-dir", str(b)]) == 0
        assert (a / "im1.pgm").read_bytes() == (b / "im1.pgm").read_bytes()
        assert (a / "im2.pgm").read_bytes() == (b / "im2.pgm").read_bytes()

    def test_sidecar_reruns_the_same_capture(self, tmp_path):
        first = tmp_path / "first"
        again = tmp_path / "again"
        assert main(["simulate", *BANDED_FLAGS, "--frames", "2",
                     "--out-dir", str(first)]) == 0
        assert main(["simulate", "--config", str(first / "config.json"),
                     "--out-dir", str(again)]) == 0
        assert (first / "im1.pgm").read_bytes() == (again / "im1.pgm").read_bytes()
        assert (again / "im2.pgm").exists()  # frame count came from the sidecar

    def test_flag_overrides_config(self, tmp_path, capsys):
        first = tmp_path / "first"
        muted = tmp_path / "muted"
        assert main(["simulate", *BANDED_FLAGS, "--frames", "1",
                     "--out-dir", str(first)]) == 0
        assert main(["simulate", "--config", str(first / "config.json"),
                     "--noise-amp", "0", "--out-dir", str(muted)]) == 0
        capsys.readouterr()
        assert main(["analyze", str(muted / "im1.pgm")]) == 0
        assert capsys.readouterr().out.strip() == "0.0000"

    def test_three_channels_write_ppm(self, tmp_path):
        out = tmp_path / "rgb"
        assert main(["simulate", *SMALL_FLAGS, "--channels", "3", "--frames", "1",
                     "--out-dir", str(out)]) == 0
        assert (out / "im1.ppm").exists()

    def test_invalid_scenario_value_is_usage_error(self, tmp_path):
        assert main(["simulate", "--pedestal", "900", "--out-dir", str(tmp_path)]) == 2


class TestAnalyze:
    def test_quiet_frames_print_zero(self, tmp_path, capsys):
        out = tmp_path / "quiet"
        main(["simulate", *SMALL_FLAGS, "--frames", "3", "--out-dir", str(out)])
        capsys.readouterr()
        assert main(["analyze", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "0.0000"

    def test_directory_ingested_in_name_order(self, tmp_path, capsys):
        write_pgm(tmp_path / "im1.pgm", [50] * 4)
        write_pgm(tmp_path / "im10.pgm", [50, 50, 60, 50])
        write_pgm(tmp_path / "im2.pgm", [10, 20, 10, 20])
        assert main(["analyze", "--per-frame", str(tmp_path)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [l.split("\t")[0] for l in lines[:3]] == ["im1.pgm", "im10.pgm", "im2.pgm"]
        assert lines[0].endswith("0.0000")
        assert lines[1].endswith("5.0000")
        assert lines[2].endswith("5.7735")

    def test_mismatched_dimensions_name_the_file(self, tmp_path, capsys):
        write_pgm(tmp_path / "im1.pgm", [50] * 4)
        odd = np.zeros((1, 6, 4), dtype=np.uint8)
        write_image(Frame(pixels=odd), tmp_path / "im2.pgm")
        assert main(["analyze", str(tmp_path)]) == 1
        assert "im2.pgm" in capsys.readouterr().err

    def test_missing_file_is_runtime_error(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nope.pgm")]) == 1

    def test_directory_without_images_is_runtime_error(self, tmp_path):
        assert main(["analyze", str(tmp_path)]) == 1

    def test_csv_output_with_sidecar(self, tmp_path, capsys):
        write_pgm(tmp_path / "im1.pgm", [10, 20, 10, 20])
        csv = tmp_path / "per_frame.csv"
        assert main(["analyze", str(tmp_path / "im1.pgm"), "--csv", str(csv)]) == 0
        assert csv.read_text().splitlines()[0] == "frame,row_noise"
        assert "im1.pgm,5.7735" in csv.read_text()
        assert (tmp_path / "per_frame.csv.config.json").exists()

    def test_corrupt_image_is_parse_error(self, tmp_path, capsys):
        bad = tmp_path / "im1.pgm"
        bad.write_bytes(b"P5\n4 4\n65535\n" + b"\x00" * 32)
        assert main(["analyze", str(bad)]) == 1
        assert "maxval" in capsys.readouterr().err


class TestSweepCli:
    def run_small_sweep(self, tmp_path, name, extra=()):
        csv = tmp_path / name
        code = main(
            ["sweep", *SMALL_FLAGS, "--start", "3550", "--end", "6550",
             "--step", "1000", "--frames-per-step", "1", "--read-noise", "1.0",
             "--out", str(csv), *extra]
        )
        return code, csv

    def test_writes_csv_and_sidecar(self, tmp_path, capsys):
        code, csv = self.run_small_sweep(tmp_path, "s.csv")
        assert code == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "frequency_hz,row_noise"
        assert len(lines) == 5  # 4 frequency points
        sidecar = json.loads((tmp_path / "s.csv.config.json").read_text())
        assert sidecar["command"] == "sweep"
        assert sidecar["config"]["start_hz"] == 3550.0

    def test_rerun_and_worker_count_are_byte_identical(self, tmp_path):
        _, a = self.run_small_sweep(tmp_path, "a.csv")
        _, b = self.run_small_sweep(tmp_path, "b.csv")
        _, c = self.run_small_sweep(tmp_path, "c.csv", extra=("--workers", "4"))
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_sidecar_config_reruns_identically(self, tmp_path):
        _, a = self.run_small_sweep(tmp_path, "a.csv")
        d = tmp_path / "d.csv"
        assert main(["sweep", "--config", f"{a}.config.json", "--out", str(d)]) == 0
        assert a.read_bytes() == d.read_bytes()

    def test_plot_emitted(self, tmp_path):
        svg = tmp_path / "curve.svg"
        code, _ = self.run_small_sweep(tmp_path, "p.csv", extra=("--plot", str(svg)))
        assert code == 0
        assert "<svg" in svg.read_text()
        assert (tmp_path / "curve.dat").exists()

    def test_hundred_point_grid(self, tmp_path):
        csv = tmp_path / "grid.csv"
        code = main(
            ["sweep", *SMALL_FLAGS, "--start", "50", "--end", "100000",
             "--step", "1000", "--frames-per-step", "1", "--width", "8",
             "--active-rows", "16", "--blanking-rows", "4", "--out", str(csv)]
        )
        assert code == 0
        assert len(csv.read_text().splitlines()) == 101  # header + 100 rows

    def test_bad_range_is_usage_error(self, tmp_path):
        assert main(["sweep", "--start", "500", "--end", "100",
                     "--out", str(tmp_path / "x.csv")]) == 2

    def capture_rig(self, tmp_path, fail_above=None):
        out = tmp_path / "rig"
        out.mkdir()
        script = tmp_path / "rig.py"
        fail = f"{fail_above}" if fail_above is not None else "None"
        script.write_text(
            "import sys, pathlib\n"
            "out = pathlib.Path(sys.argv[1]); freq = int(sys.argv[2])\n"
            f"if {fail} is not None and freq > {fail}:\n"
            "    sys.exit(3)\n"
            "data = b'P5\\n4 6\\n255\\n' + bytes([freq % 200]) * 24\n"
            "for name in ('im1.pgm', 'im2.pgm'):\n"
            "    (out / name).write_bytes(data)\n"
        )
        cmd = (
            f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} "
            f"{shlex.quote(str(out))} {{freq}}"
        )
        return cmd, out

    def test_capture_command_sweep(self, tmp_path):
        cmd, rig_dir = self.capture_rig(tmp_path)
        csv = tmp_path / "cap.csv"
        code = main(
            ["sweep", "--start", "100", "--end", "300", "--step", "100",
             "--capture-cmd", cmd, "--capture-dir", str(rig_dir),
             "--out", str(csv)]
        )
        assert code == 0
        assert len(csv.read_text().splitlines()) == 4

    def test_capture_failure_saves_partial_and_exits_nonzero(self, tmp_path, capsys):
        cmd, rig_dir = self.capture_rig(tmp_path, fail_above=150)
        csv = tmp_path / "part.csv"
        code = main(
            ["sweep", "--start", "100", "--end", "300", "--step", "100",
             "--capture-cmd", cmd, "--capture-dir", str(rig_dir),
             "--out", str(csv)]
        )
        assert code == 1
        assert "partial" in capsys.readouterr().err
        assert csv.read_text().splitlines() == ["frequency_hz,row_noise", "100,0.0000"]

    def test_capture_cmd_requires_capture_dir(self, tmp_path):
        assert main(["sweep", "--capture-cmd", "true",
                     "--out", str(tmp_path / "x.csv")]) == 2


def bump_csv(tmp_path):
    lines = ["frequency_hz,row_noise"]
    for f in range(50_000, 151_000, 1000):
        if 60_000 <= f <= 140_000:
            v = 0.5 + 9.5 * (1.0 - abs(f - 100_000) / 40_000.0)
        else:
            v = 0.2
        lines.append(f"{f},{v:.4f}")
    path = tmp_path / "bump.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


class TestReportCli:
    def test_flat_curve_reports_no_areas(self, tmp_path, capsys):
        csv = tmp_path / "flat.csv"
        csv.write_text(
            "frequency_hz,row_noise\n"
            + "".join(f"{f},0.0000\n" for f in range(100, 1300, 100))
        )
        assert main(["report", "--csv", str(csv)]) == 0
        assert "no areas of concern" in capsys.readouterr().out

    def test_bump_landmarks_in_text(self, tmp_path, capsys):
        assert main(["report", "--csv", str(bump_csv(tmp_path)),
                     "--threshold", "0.3"]) == 0
        out = capsys.readouterr().out
        assert "Row Noise Start" in out
        assert "60 kHz" in out
        assert "Peak Row Noise" in out
        assert "100 kHz" in out
        assert "140 kHz" in out

    def test_json_output(self, tmp_path):
        report = tmp_path / "report.json"
        assert main(["report", "--csv", str(bump_csv(tmp_path)),
                     "--threshold", "0.3", "--json", str(report)]) == 0
        doc = json.loads(report.read_text())
        assert doc["row_noise_start_hz"] == 60_000.0
        assert doc["peak_hz"] == 100_000.0
        assert doc["areas_of_concern_hz"] == [[60_000.0, 140_000.0]]
        assert (tmp_path / "report.json.config.json").exists()

    def test_threshold_flags_are_exclusive(self, tmp_path):
        assert main(["report", "--csv", str(bump_csv(tmp_path)),
                     "--threshold", "0.3", "--sigma-k", "5"]) == 2

    def test_missing_csv_is_runtime_error(self, tmp_path):
        assert main(["report", "--csv", str(tmp_path / "nope.csv")]) == 1

    def test_malformed_csv_is_runtime_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("frequency_hz,row_noise\nwat\n")
        assert main(["report", "--csv", str(bad)]) == 1
        assert ":2:" in capsys.readouterr().err


class TestMitigateCli:
    def banded_dir(self, tmp_path, name="banded"):
        out = tmp_path / name
        main(["simulate", *BANDED_FLAGS, "--frames", "2", "--out-dir", str(out)])
        return out

    def test_dark_ref_flattens_banding(self, tmp_path, capsys):
        src = self.banded_dir(tmp_path)
        fixed = tmp_path / "fixed"
        assert main(["mitigate", "--method", "dark-ref", "--dark-cols", "1",
                     "--pedestal", "128", "--out-dir", str(fixed), str(src)]) == 0
        capsys.readouterr()
        assert main(["analyze", str(fixed)]) == 0
        assert capsys.readouterr().out.strip() == "0.0000"
        assert (fixed / "config.json").exists()

    def test_lowpass_runs_and_writes_frames(self, tmp_path):
        src = self.banded_dir(tmp_path)
        fixed = tmp_path / "lp"
        assert main(["mitigate", "--method", "lowpass", "--kernel-rows", "9",
                     "--out-dir", str(fixed), str(src)]) == 0
        assert (fixed / "im1.pgm").exists()
        assert (fixed / "im2.pgm").exists()

    def test_tune_prints_recommendation(self, capsys):
        assert main(["mitigate", "--method", "tune", "--noise-freq", "24000",
                     "--fps-min", "29", "--fps-max", "31",
                     "--frame-length-min", "800", "--frame-length-max", "800"]) == 0
        out = capsys.readouterr().out
        assert "fps 29" in out
        assert "frame length 800 rows" in out
        assert "alias 800 Hz" in out
        assert "band height 14.5 rows" in out

    def test_tune_missing_flags_is_usage_error(self, capsys):
        assert main(["mitigate", "--method", "tune", "--noise-freq", "24000"]) == 2
        assert "--fps-min" in capsys.readouterr().err

    def test_image_method_requires_out_dir(self, tmp_path):
        src = self.banded_dir(tmp_path)
        assert main(["mitigate", "--method", "dark-ref", str(src)]) == 2

    def test_image_method_requires_inputs(self):
        assert main(["mitigate", "--method", "dark-ref", "--out-dir", "x"]) == 2


class TestPredictCli:
    def test_midpoint_wording(self, capsys):
        assert main(["predict", "--noise-freq", "36000", "--fps", "30",
                     "--frame-length", "800"]) == 0
        assert capsys.readouterr().out == "alias 12000 Hz, band height 1 row\n"

    def test_harmonic_reports_uniform(self, capsys):
        assert main(["predict", "--noise-freq", "48000", "--fps", "30",
                     "--frame-length", "800"]) == 0
        out = capsys.readouterr().out
        assert "alias 0 Hz" in out
        assert "uniform" in out

    def test_band_plural(self, capsys):
        assert main(["predict", "--noise-freq", "24240", "--fps", "30",
                     "--frame-length", "800"]) == 0
        assert "band height 50 rows" in capsys.readouterr().out

    def test_rc_attenuation_line(self, capsys):
        assert main(["predict", "--noise-freq", "36000", "--fps", "30",
                     "--frame-length", "800", "--rc-cutoff", "3600"]) == 0
        assert "rc attenuation 0.0995" in capsys.readouterr().out

    def test_invalid_fps_is_usage_error(self):
        assert main(["predict", "--noise-freq", "36000", "--fps", "0",
                     "--frame-length", "800"]) == 2


class TestParser:
    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["transmogrify"])
        assert err.value.code == 2

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "rownoise.cli", "predict", "--noise-freq",
             "36000", "--fps", "30", "--frame-length", "800"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout == "alias 12000 Hz, band height 1 row\n"

"""Frequency sweep characterization.

Steps a disturbance frequency across a band, measures row noise at each
point and extracts the landmarks an integration report needs: where row
noise starts, where it peaks and which frequency ranges are of concern.

Points come either from the built-in simulator or from an external
capture command (a bench supply or signal generator wrapper) that drops
image files into a directory. Simulated steps are independent and may
run on several worker threads; results are assembled by step index, so
the output is bit-identical for any worker count.
"""

from __future__ import annotations

import json
import math
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import imageio
from .metric import ImageStack, row_noise
from .sensor import SimScenario, scenario_from_json, scenario_to_json, simulate_stack

__all__ = [
    "SimulateSource",
    "CaptureSource",
    "SweepConfig",
    "SweepResult",
    "Absolute",
    "BaselineSigma",
    "CharacterizationReport",
    "CsvParseError",
    "CaptureError",
    "sweep_frequencies",
    "run_sweep",
    "write_csv",
    "read_csv",
    "analyze_report",
    "emit_plot_data",
    "sweep_config_to_json",
    "sweep_config_from_json",
]

CSV_HEADER = "frequency_hz,row_noise"


class CsvParseError(ValueError):
    """Raised for malformed sweep CSV files; message carries the line number."""


class CaptureError(RuntimeError):
    """A capture step failed. Partial results up to the failure are attached."""

    def __init__(self, message: str, partial: "SweepResult"):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class SimulateSource:
    scenario: SimScenario = field(default_factory=SimScenario)


@dataclass(frozen=True)
class CaptureSource:
    """External capture command, run once per frequency step.

    command is a shell template with {freq} (integer Hz) and {amp}
    (decimal Vpp) placeholders. After it exits 0, images matching
    pattern under image_dir are ingested in lexicographic order. The
    command must overwrite its previous output.
    """

    command: str
    image_dir: Path
    pattern: str = "im*"


@dataclass(frozen=True)
class SweepConfig:
    start_hz: float = 50.0
    end_hz: float = 1_000_000.0
    step_hz: float = 1000.0
    amplitude_vpp: float = 1.0
    frames_per_step: int = 3
    source: SimulateSource | CaptureSource = field(default_factory=SimulateSource)
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.start_hz <= 0:
            raise ValueError(f"start_hz must be positive, got {self.start_hz}")
        if self.end_hz < self.start_hz:
            raise ValueError("end_hz must be >= start_hz")
        if self.step_hz <= 0:
            raise ValueError(f"step_hz must be positive, got {self.step_hz}")
        if self.amplitude_vpp < 0:
            raise ValueError(f"amplitude_vpp must be >= 0, got {self.amplitude_vpp}")
        if self.frames_per_step < 1:
            raise ValueError(f"frames_per_step must be >= 1, got {self.frames_per_step}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class SweepResult:
    """Measured (frequency, row noise) points in ascending frequency."""

    points: list[tuple[float, float]]
    frames_per_point: list[int] = field(default_factory=list)
    config: SweepConfig | None = None

    @property
    def frequencies(self) -> list[float]:
        return [f for f, _ in self.points]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]


def sweep_frequencies(config: SweepConfig) -> list[float]:
    """start, start+step, ... up to and including end when it lands on the grid."""
    count = int(math.floor((config.end_hz - config.start_hz) / config.step_hz)) + 1
    return [config.start_hz + i * config.step_hz for i in range(count)]


def _step_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def _measure_simulated(config: SweepConfig, index: int, freq: float) -> tuple[float, int]:
    base = config.source.scenario
    scenario = replace(
        base,
        supply=replace(base.supply, frequency_hz=freq, amplitude_vpp=config.amplitude_vpp),
        seed=_step_seed(config.seed, index),
    )
    frames = simulate_stack(scenario, config.frames_per_step)
    return row_noise(ImageStack(frames)).average, len(frames)


def _measure_captured(config: SweepConfig, freq: float) -> tuple[float, int]:
    src = config.source
    cmd = src.command.format(freq=int(round(freq)), amp=config.amplitude_vpp)
    proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
    if proc.returncode != 0:
        detail = proc.stderr.strip() or proc.stdout.strip()
        raise RuntimeError(
            f"capture command failed at {freq} Hz (exit {proc.returncode})"
            + (f": {detail}" if detail else "")
        )
    paths = sorted(Path(src.image_dir).glob(src.pattern))
    if not paths:
        raise RuntimeError(
            f"capture at {freq} Hz produced no images matching "
            f"{src.pattern!r} in {src.image_dir}"
        )
    frames = imageio.read_stack(paths)
    return row_noise(ImageStack(frames)).average, len(frames)


def run_sweep(config: SweepConfig) -> SweepResult:
    freqs = sweep_frequencies(config)

    if isinstance(config.source, CaptureSource):
        # External command plus shared output directory: inherently serial.
        points: list[tuple[float, float]] = []
        counts: list[int] = []
        for i, f in enumerate(freqs):
            try:
                value, n = _measure_captured(config, f)
            except (RuntimeError, OSError, ValueError) as exc:
                partial = SweepResult(points=points, frames_per_point=counts, config=config)
                raise CaptureError(str(exc), partial) from exc
            points.append((f, value))
            counts.append(n)
        return SweepResult(points=points, frames_per_point=counts, config=config)

    if config.workers == 1:
        measured = [_measure_simulated(config, i, f) for i, f in enumerate(freqs)]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            measured = list(
                pool.map(lambda args: _measure_simulated(config, *args), enumerate(freqs))
            )
    return SweepResult(
        points=[(f, v) for f, (v, _) in zip(freqs, measured)],
        frames_per_point=[n for _, n in measured],
        config=config,
    )


def _format_freq(freq: float) -> str:
    if freq == int(freq):
        return str(int(freq))
    return f"{freq:.10g}"


def write_csv(result: SweepResult, path: str | Path) -> None:
    """Two columns, row noise at 4 decimals. Stable byte-for-byte."""
    lines = [CSV_HEADER]
    lines += [f"{_format_freq(f)},{v:.4f}" for f, v in result.points]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path) -> SweepResult:
    """Inverse of write_csv. Header-only files give an empty result."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        got = lines[0].strip() if lines else "<empty file>"
        raise CsvParseError(f"{path}:1: expected header {CSV_HEADER!r}, got {got!r}")
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise CsvParseError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise CsvParseError(f"{path}:{lineno}: {exc}") from exc
    return SweepResult(points=points, frames_per_point=[], config=None)


@dataclass(frozen=True)
class Absolute:
    """Fixed row-noise threshold in DN."""

    value: float

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValueError(f"threshold must be >= 0, got {self.value}")


@dataclass(frozen=True)
class BaselineSigma:
    """Threshold = mean + k * sample std over the first `window` points."""

    k: float = 5.0
    window: int = 10

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")


@dataclass(frozen=True)
class CharacterizationReport:
    row_noise_start_hz: float | None
    peak_hz: float
    peak_row_noise_dn: float
    areas_of_concern_hz: list[tuple[float, float]]
    threshold_dn: float

    def to_json_dict(self) -> dict:
        return {
            "row_noise_start_hz": self.row_noise_start_hz,
            "peak_hz": self.peak_hz,
            "peak_row_noise_dn": self.peak_row_noise_dn,
            "areas_of_concern_hz": [list(a) for a in self.areas_of_concern_hz],
            "threshold_dn": self.threshold_dn,
        }

    def to_text(self) -> str:
        lines = ["Characterization summary", "-" * 24]
        start = _format_freq_human(self.row_noise_start_hz) if (
            self.row_noise_start_hz is not None
        ) else "none"
        lines.append(f"{'Row Noise Start':<18}{start}")
        lines.append(
            f"{'Peak Row Noise':<18}{_format_freq_human(self.peak_hz)} "
            f"({self.peak_row_noise_dn:.4f} DN)"
        )
        if self.areas_of_concern_hz:
            label = "Areas of Concern"
            for lo, hi in self.areas_of_concern_hz:
                span = (
                    _format_freq_human(lo)
                    if lo == hi
                    else f"{_format_freq_human(lo)} - {_format_freq_human(hi)}"
                )
                lines.append(f"{label:<18}{span}")
                label = ""
        else:
            lines.append(f"{'Areas of Concern':<18}no areas of concern")
        lines.append(f"{'Threshold':<18}{self.threshold_dn:.4f} DN")
        return "\n".join(lines) + "\n"


def _format_freq_human(freq: float) -> str:
    if freq >= 1000.0:
        khz = freq / 1000.0
        text = f"{khz:.3f}".rstrip("0").rstrip(".")
        return f"{text} kHz"
    return f"{_format_freq(freq)} Hz"


def analyze_report(
    result: SweepResult, threshold: Absolute | BaselineSigma | None = None
) -> CharacterizationReport:
    """Extract start, peak and areas of concern from a sweep curve.

    Areas are maximal contiguous runs of points strictly above the
    threshold (strict, so a flat zero curve with a zero baseline yields
    no areas). Peak ties resolve to the lowest frequency.
    """
    if threshold is None:
        threshold = BaselineSigma()
    if not result.points:
        raise ValueError("sweep result has no points")
    values = np.asarray(result.values, dtype=np.float64)
    freqs = result.frequencies

    if isinstance(threshold, Absolute):
        cut = threshold.value
    else:
        if threshold.window > len(values):
            raise ValueError(
                f"baseline window {threshold.window} exceeds point count {len(values)}"
            )
        base = values[: threshold.window]
        cut = float(base.mean() + threshold.k * base.std(ddof=1))

    above = values > cut
    areas: list[tuple[float, float]] = []
    run_start: int | None = None
    for i, flag in enumerate(above):
        if flag and run_start is None:
            run_start = i
        elif not flag and run_start is not None:
            areas.append((freqs[run_start], freqs[i - 1]))
            run_start = None
    if run_start is not None:
        areas.append((freqs[run_start], freqs[-1]))

    peak_idx = int(np.argmax(values))  # argmax takes the earliest on ties
    return CharacterizationReport(
        row_noise_start_hz=areas[0][0] if areas else None,
        peak_hz=freqs[peak_idx],
        peak_row_noise_dn=float(values[peak_idx]),
        areas_of_concern_hz=areas,
        threshold_dn=float(cut),
    )


def emit_plot_data(
    result: SweepResult, svg_path: str | Path, data_path: str | Path | None = None
) -> None:
    """Write a self-contained SVG line chart plus a two-column data file."""
    if not result.points:
        raise ValueError("sweep result has no points")
    svg_path = Path(svg_path)
    if data_path is None:
        data_path = svg_path.with_suffix(".dat")
    data_lines = [f"{_format_freq(f)} {v:.4f}" for f, v in result.points]
    Path(data_path).write_text("\n".join(data_lines) + "\n")
    svg_path.write_text(_render_svg(result))


def _render_svg(result: SweepResult) -> str:
    width, height = 800.0, 500.0
    ml, mr, mt, mb = 70.0, 20.0, 20.0, 50.0
    plot_w, plot_h = width - ml - mr, height - mt - mb

    freqs = result.frequencies
    values = result.values
    f_lo, f_hi = min(freqs), max(freqs)
    v_hi = max(max(values), 1e-12) * 1.05
    f_span = (f_hi - f_lo) or 1.0

    def sx(f: float) -> float:
        return ml + (f - f_lo) / f_span * plot_w

    def sy(v: float) -> float:
        return mt + plot_h - v / v_hi * plot_h

    pts = " ".join(f"{sx(f):.2f},{sy(v):.2f}" for f, v in result.points)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<rect x="{ml}" y="{mt}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    for i in range(5):
        f = f_lo + f_span * i / 4
        x = sx(f)
        parts.append(
            f'<line x1="{x:.2f}" y1="{mt + plot_h:.2f}" x2="{x:.2f}" '
            f'y2="{mt + plot_h + 5:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{mt + plot_h + 20:.2f}" font-size="12" '
            f'text-anchor="middle">{_format_freq(round(f, 1))}</text>'
        )
        v = v_hi * i / 4
        y = sy(v)
        parts.append(
            f'<line x1="{ml - 5:.2f}" y1="{y:.2f}" x2="{ml:.2f}" y2="{y:.2f}" '
            'stroke="black"/>'
        )
        parts.append(
            f'<text x="{ml - 8:.2f}" y="{y + 4:.2f}" font-size="12" '
            f'text-anchor="end">{v:.2f}</text>'
        )
    parts.append(
        f'<text x="{ml + plot_w / 2:.2f}" y="{height - 10:.2f}" font-size="14" '
        'text-anchor="middle">frequency (Hz)</text>'
    )
    parts.append(
        f'<text x="18" y="{mt + plot_h / 2:.2f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + plot_h / 2:.2f})">row noise (DN)</text>'
    )
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="#1565c0" stroke-width="1.5"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def sweep_config_to_json(config: SweepConfig) -> str:
    doc = {
        "start_hz": config.start_hz,
        "end_hz": config.end_hz,
        "step_hz": config.step_hz,
        "amplitude_vpp": config.amplitude_vpp,
        "frames_per_step": config.frames_per_step,
        "seed": config.seed,
        "workers": config.workers,
    }
    if isinstance(config.source, CaptureSource):
        doc["source"] = {
            "mode": "capture",
            "command": config.source.command,
            "image_dir": str(config.source.image_dir),
            "pattern": config.source.pattern,
        }
    else:
        doc["source"] = {
            "mode": "simulate",
            "scenario": json.loads(scenario_to_json(config.source.scenario)),
        }
    return json.dumps(doc, sort_keys=True, indent=2)


def sweep_config_from_json(text: str) -> SweepConfig:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("sweep config must be a JSON object")
    src = doc.pop("source", {"mode": "simulate", "scenario": {}})
    mode = src.get("mode", "simulate")
    if mode == "capture":
        source: SimulateSource | CaptureSource = CaptureSource(
            command=src["command"],
            image_dir=Path(src["image_dir"]),
            pattern=src.get("pattern", "im*"),
        )
    elif mode == "simulate":
        source = SimulateSource(
            scenario=scenario_from_json(json.dumps(src.get("scenario", {})))
        )
    else:
        raise ValueError(f"unknown sweep source mode {mode!r}")
    try:
        return SweepConfig(source=source, **doc)
    except TypeError as exc:
        raise ValueError(f"bad sweep config: {exc}") from exc

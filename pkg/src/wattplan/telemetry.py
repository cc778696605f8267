"""Cabinet power telemetry: CSV ingestion, windowed statistics, before/after
intervention impact, single-changepoint detection, and a synthetic-series
generator for fixtures (the measured series behind the analysis is not
redistributable)."""

from __future__ import annotations

import csv
import math
from bisect import bisect_left
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError
from .timestamps import format_timestamp, parse_timestamp

DEFAULT_SERIES_START = datetime(2022, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class PowerSeries:
    """Strictly time-ordered power samples in kW."""

    timestamps: tuple[datetime, ...]
    values_kw: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "values_kw", tuple(float(v) for v in self.values_kw))
        if len(self.timestamps) != len(self.values_kw):
            raise DomainError(
                f"{len(self.timestamps)} timestamps but {len(self.values_kw)} power values"
            )
        for t_prev, t_next in zip(self.timestamps, self.timestamps[1:]):
            if t_next <= t_prev:
                raise DomainError(
                    f"timestamps must be strictly increasing: "
                    f"{format_timestamp(t_prev)} then {format_timestamp(t_next)}"
                )
        for value in self.values_kw:
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"power values must be finite and >= 0 kW, got {value}")

    def __len__(self) -> int:
        return len(self.timestamps)

    def samples(self):
        return zip(self.timestamps, self.values_kw)

    @classmethod
    def from_samples(cls, pairs) -> "PowerSeries":
        pairs = list(pairs)
        return cls(
            timestamps=tuple(t for t, _ in pairs),
            values_kw=tuple(v for _, v in pairs),
        )


@dataclass(frozen=True)
class WindowStats:
    """Sample count, mean and population standard deviation over [start, end)."""

    start: datetime
    end: datetime
    count: int
    mean_kw: float
    stddev_kw: float


@dataclass(frozen=True)
class InterventionReport:
    """Mean-shift summary around a change time; reductions give negative deltas."""

    change_time: datetime
    before: WindowStats
    after: WindowStats
    delta_kw: float
    pct_change: float


@dataclass(frozen=True)
class Changepoint:
    change_time: datetime
    index: int
    score: float


@dataclass(frozen=True)
class SeriesSegment:
    """One constant-mean stretch of a synthetic series."""

    duration_hours: float
    n_samples: int
    mean_kw: float
    noise_sd_kw: float = 0.0

    def __post_init__(self) -> None:
        if self.duration_hours <= 0:
            raise DomainError(f"segment duration must be > 0 hours, got {self.duration_hours}")
        if not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise DomainError(f"segment n_samples must be >= 1, got {self.n_samples!r}")
        if self.mean_kw < 0:
            raise DomainError(f"segment mean must be >= 0 kW, got {self.mean_kw}")
        if self.noise_sd_kw < 0:
            raise DomainError(f"segment noise sd must be >= 0 kW, got {self.noise_sd_kw}")


def parse_series(path: str | Path) -> PowerSeries:
    """Load a power series from CSV with header timestamp,power_kw.

    Rows out of time order, negative or non-finite power, and malformed rows
    are rejected with their line number.
    """
    timestamps: list[datetime] = []
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["timestamp", "power_kw"]:
            raise DataFormatError(f"{path}: expected header 'timestamp,power_kw', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            try:
                ts = parse_timestamp(row[0])
            except DataFormatError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from None
            try:
                value = float(row[1])
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {lineno}: power is not a number: {row[1]!r}"
                ) from None
            if not math.isfinite(value) or value < 0:
                raise DataFormatError(
                    f"{path}: line {lineno}: power must be finite and >= 0 kW, got {row[1]!r}"
                )
            if timestamps and ts <= timestamps[-1]:
                raise DataFormatError(
                    f"{path}: line {lineno}: timestamps out of order "
                    f"({format_timestamp(timestamps[-1])} then {format_timestamp(ts)})"
                )
            timestamps.append(ts)
            values.append(value)
    return PowerSeries(tuple(timestamps), tuple(values))


def write_series(series: PowerSeries, path: str | Path) -> None:
    """Write a power series in the same CSV format parse_series reads."""
    lines = ["timestamp,power_kw"]
    lines.extend(f"{format_timestamp(t)},{v!r}" for t, v in series.samples())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def window_mean(series: PowerSeries, start: datetime, end: datetime) -> WindowStats:
    """Mean and population standard deviation of samples within [start, end)."""
    if end <= start:
        raise DomainError(
            f"window end {format_timestamp(end)} must be after start {format_timestamp(start)}"
        )
    lo = bisect_left(series.timestamps, start)
    hi = bisect_left(series.timestamps, end)
    if hi <= lo:
        raise DomainError(
            f"no samples in window [{format_timestamp(start)}, {format_timestamp(end)})"
        )
    window = np.asarray(series.values_kw[lo:hi], dtype=float)
    return WindowStats(
        start=start,
        end=end,
        count=int(window.size),
        mean_kw=float(window.mean()),
        stddev_kw=float(window.std()),
    )


def intervention_impact(
    series: PowerSeries, change_time: datetime, guard_gap: timedelta = timedelta(0)
) -> InterventionReport:
    """Before/after mean shift around a change time.

    The before window runs from the series start to change_time - guard_gap
    (exclusive); the after window from change_time + guard_gap to the end of
    the series. A positive guard gap excludes a smeared transition period.
    """
    if guard_gap < timedelta(0):
        raise DomainError(f"guard gap must be >= 0, got {guard_gap}")
    if len(series) == 0:
        raise DomainError("series has no samples")
    before_end = change_time - guard_gap
    after_start = change_time + guard_gap
    if series.timestamps[0] >= before_end:
        raise DomainError(
            f"no samples before {format_timestamp(before_end)} (change time minus gap)"
        )
    if series.timestamps[-1] < after_start:
        raise DomainError(
            f"no samples at or after {format_timestamp(after_start)} (change time plus gap)"
        )
    before = window_mean(series, series.timestamps[0], before_end)
    # pad the window bound by 1 us so the final sample falls inside [start, end)
    after = window_mean(series, after_start, series.timestamps[-1] + timedelta(microseconds=1))
    if before.mean_kw == 0:
        raise DomainError("before-window mean is zero; percentage change is undefined")
    delta = after.mean_kw - before.mean_kw
    return InterventionReport(
        change_time=change_time,
        before=before,
        after=after,
        delta_kw=delta,
        pct_change=delta / before.mean_kw,
    )


def detect_changepoint(series: PowerSeries) -> Changepoint:
    """Best two-segment piecewise-constant split of the series.

    Returns the split index k (the first sample of the second segment, with
    at least two samples on each side) minimizing the total within-segment
    sum of squared deviations, breaking ties toward the earliest index. The
    score is 1 minus the ratio of the two-segment to the one-segment SSE, so
    a clean step scores 1.0 and a constant series scores 0.0.
    """
    n = len(series)
    if n < 4:
        raise DomainError(f"changepoint detection needs at least 4 samples, got {n}")
    y = np.asarray(series.values_kw, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(y)))
    csq = np.concatenate(([0.0], np.cumsum(y * y)))
    total_sse = float(csq[n] - csum[n] ** 2 / n)
    if total_sse <= 1e-12 * max(1.0, float(csq[n])):
        # flat series: every split is equivalent, return the earliest
        return Changepoint(change_time=series.timestamps[2], index=2, score=0.0)
    ks = np.arange(2, n - 1)
    left = csq[ks] - csum[ks] ** 2 / ks
    right = (csq[n] - csq[ks]) - (csum[n] - csum[ks]) ** 2 / (n - ks)
    sse = left + right
    best = int(np.argmin(sse))
    k = int(ks[best])
    score = 1.0 - float(sse[best]) / total_sse
    score = min(max(score, 0.0), 1.0)
    return Changepoint(change_time=series.timestamps[k], index=k, score=score)


def synth_series(
    segments, seed: int, start: datetime = DEFAULT_SERIES_START
) -> PowerSeries:
    """Generate a piecewise-constant series with Gaussian noise, clamped at 0 kW.

    Each segment contributes n_samples evenly spaced over its duration,
    beginning at the segment start. Output is deterministic for a given seed.
    """
    segs = [s if isinstance(s, SeriesSegment) else SeriesSegment(*s) for s in segments]
    if not segs:
        raise DomainError("at least one segment is required")
    rng = np.random.default_rng(seed)
    timestamps: list[datetime] = []
    values: list[float] = []
    segment_start = start
    for seg in segs:
        step = timedelta(hours=seg.duration_hours / seg.n_samples)
        noisy = seg.mean_kw + rng.normal(0.0, seg.noise_sd_kw, seg.n_samples)
        noisy = np.maximum(noisy, 0.0)
        timestamps.extend(segment_start + i * step for i in range(seg.n_samples))
        values.extend(float(v) for v in noisy)
        segment_start = segment_start + timedelta(hours=seg.duration_hours)
    return PowerSeries(tuple(timestamps), tuple(values))

"""Bar-level market data: load, save, session cleanup and pair alignment.

CSV layout: header ``timestamp,price,trades``, one bar per row, ISO-8601
timestamps with an explicit UTC offset.
"""

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
import math
import os
import tempfile

import numpy as np

from .errors import DataError

HEADER = ("timestamp", "price", "trades")


def parse_timestamp(text):
    """ISO-8601 with offset; a trailing 'Z' is read as UTC."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise ValueError(f"timestamp {text!r} has no timezone")
    return ts


@dataclass(frozen=True, eq=False)
class BarSeries:
    """Ordered bars (timestamp, price, trade count).

    ``runs`` labels contiguous stretches; log-returns are only formed between
    consecutive bars of the same run.  ``day_trimmed`` marks a series whose
    opening bars have already been removed.
    """

    timestamps: tuple
    prices: np.ndarray
    trades: np.ndarray
    runs: np.ndarray = None
    day_trimmed: bool = False

    def __post_init__(self):
        ts = tuple(self.timestamps)
        p = np.array(self.prices, dtype=float)
        n = np.array(self.trades)
        if n.dtype.kind == "f":
            if np.any(n != np.round(n)):
                raise DataError("trade counts must be integers")
        n = n.astype(np.int64)
        if not (len(ts) == len(p) == len(n)):
            raise DataError("timestamps, prices and trades differ in length")
        if any(t.tzinfo is None for t in ts):
            raise DataError("timestamps must carry a timezone")
        for i in range(1, len(ts)):
            if not ts[i] > ts[i - 1]:
                raise DataError(f"timestamps not strictly increasing at bar {i}")
        if np.any(~(p > 0)) or np.any(~np.isfinite(p)):
            raise DataError(f"non-positive price at bar {int(np.flatnonzero(~(p > 0) | ~np.isfinite(p))[0])}")
        if np.any(n < 0):
            raise DataError(f"negative trade count at bar {int(np.flatnonzero(n < 0)[0])}")
        runs = np.zeros(len(ts), dtype=np.int64) if self.runs is None else np.asarray(self.runs, dtype=np.int64)
        if runs.shape != p.shape or np.any(np.diff(runs) < 0):
            raise DataError("runs must be nondecreasing labels, one per bar")
        for name, arr in (("prices", p), ("trades", n), ("runs", runs)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return len(self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, BarSeries):
            return NotImplemented
        return (self.timestamps == other.timestamps
                and np.array_equal(self.prices, other.prices)
                and np.array_equal(self.trades, other.trades)
                and np.array_equal(self.runs, other.runs))

    @property
    def _pairs(self):
        return np.flatnonzero(self.runs[1:] == self.runs[:-1]) + 1

    @property
    def log_returns(self):
        """log(P_j / P_{j-1}) for every bar j whose predecessor is in the same run."""
        j = self._pairs
        return np.log(self.prices[j] / self.prices[j - 1])

    @property
    def return_trades(self):
        """N_j matching each entry of ``log_returns``."""
        return self.trades[self._pairs].astype(float)

    @property
    def cum_trades(self):
        return np.cumsum(self.trades)


def load_bars(path, fmt="csv"):
    """Read a bar file; errors name the offending line."""
    if fmt != "csv":
        raise DataError(f"unsupported bar format {fmt!r}")
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    ts, prices, trades = [], [], []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise DataError(f"{path}: line 1: expected header {','.join(HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}: line {line}: expected 3 fields, got {len(row)}")
            try:
                t = parse_timestamp(row[0])
                price = float(row[1])
                n = int(row[2])
            except ValueError as exc:
                raise DataError(f"{path}: line {line}: {exc}") from exc
            if not (price > 0 and math.isfinite(price)):
                raise DataError(f"{path}: line {line}: price must be positive, got {row[1]}")
            if n <= 0:
                raise DataError(f"{path}: line {line}: trade count must be positive, got {n}")
            if ts and not t > ts[-1]:
                raise DataError(f"{path}: line {line}: timestamp not after previous row")
            ts.append(t)
            prices.append(price)
            trades.append(n)
    return BarSeries(tuple(ts), np.array(prices), np.array(trades, dtype=np.int64))


def bars_to_csv(series):
    lines = [",".join(HEADER)]
    for t, p, n in zip(series.timestamps, series.prices, series.trades):
        lines.append(f"{t.isoformat()},{float(p)!r},{int(n)}")
    return "\n".join(lines) + "\n"


def atomic_write_text(path, text):
    """Write via a temporary file in the same directory, then rename."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_bars(series, path):
    atomic_write_text(path, bars_to_csv(series))


def _subset(series, keep, runs, day_trimmed=None):
    keep = np.asarray(keep, dtype=np.int64)
    flag = series.day_trimmed if day_trimmed is None else day_trimmed
    return BarSeries(tuple(series.timestamps[i] for i in keep), series.prices[keep],
                     series.trades[keep], runs, flag)


def drop_first_bar_of_day(series):
    """Remove each calendar day's first bar; each day becomes its own run.

    Dates are taken in each timestamp's own UTC offset.  Already trimmed
    series are returned unchanged.
    """
    if series.day_trimmed or len(series) == 0:
        return series
    days = [t.date() for t in series.timestamps]
    first = np.array([True] + [days[i] != days[i - 1] for i in range(1, len(days))])
    day_ids = np.cumsum(first) - 1
    keep = np.flatnonzero(~first)
    return _subset(series, keep, day_ids[keep], day_trimmed=True)


@dataclass(frozen=True)
class PairedBars:
    a: BarSeries
    b: BarSeries
    dropped_a: int
    dropped_b: int

    def common_returns(self):
        """(r_a, r_b, N_a, N_b) over transitions present in both series."""
        ja, jb = self.a._pairs, self.b._pairs
        both = np.intersect1d(ja, jb)
        ra = np.log(self.a.prices[both] / self.a.prices[both - 1])
        rb = np.log(self.b.prices[both] / self.b.prices[both - 1])
        return ra, rb, self.a.trades[both].astype(float), self.b.trades[both].astype(float)

    def jump_pairs(self):
        """Per-bar trade counts (N_a, N_b) as common-jump observations."""
        return np.column_stack([self.a.trades, self.b.trades]).astype(float)


def align_pair(a, b):
    """Inner join on timestamps.

    A bar missing from either series is dropped from both, and the returns
    across the gap are excluded by splitting runs there.
    """
    index_b = {t: i for i, t in enumerate(b.timestamps)}
    ia, ib = [], []
    for i, t in enumerate(a.timestamps):
        j = index_b.get(t)
        if j is not None:
            ia.append(i)
            ib.append(j)
    if not ia:
        raise DataError("series have no timestamps in common")
    ia, ib = np.array(ia), np.array(ib)
    contiguous = (np.diff(ia) == 1) & (np.diff(ib) == 1)
    same_run = (a.runs[ia][1:] == a.runs[ia][:-1]) & (b.runs[ib][1:] == b.runs[ib][:-1])
    runs = np.concatenate([[0], np.cumsum(~(contiguous & same_run))])
    return PairedBars(_subset(a, ia, runs), _subset(b, ib, runs), len(a) - len(ia), len(b) - len(ib))


def synthetic_calendar(n_bars, start="2024-01-02", bars_per_day=13, minutes=30,
                       open_time="09:30", utc_offset_hours=-5):
    """Weekday sessions of ``bars_per_day`` bar-end timestamps."""
    tz = timezone(timedelta(hours=utc_offset_hours))
    day = datetime.fromisoformat(f"{start}T{open_time}").replace(tzinfo=tz)
    out = []
    while len(out) < n_bars:
        if day.weekday() < 5:
            for k in range(1, bars_per_day + 1):
                out.append(day + timedelta(minutes=minutes * k))
                if len(out) == n_bars:
                    break
        day += timedelta(days=1)
    return tuple(out)

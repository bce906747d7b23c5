"""Graphical representation: seeded space-time event logs and their transforms.

A log is the full realization of the space-time Poisson construction on a
finite window: death marks at rate 1 per site and birth arrows at rate mu_j
per (source site, displacement j). Logs are immutable, deterministic in
(kernel, window, seed), and extendable: regenerating with a larger horizon or
a wider window reproduces every previously generated event.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

import numpy as np

from . import _kernels
from .errors import ParameterError

_MAGIC = b"CPEVLOG1"
_RECORD = np.dtype([("time", "<f8"), ("kind", "<u1"), ("src", "<i4"), ("dst", "<i4")])

DEATH = 0
ARROW = 1


class DeathMark(NamedTuple):
    site: int
    time: float


class BirthArrow(NamedTuple):
    source: int
    target: int
    time: float


Event = Union[DeathMark, BirthArrow]


@dataclass(frozen=True)
class InteractionKernel:
    """Birth rates mu_j for displacements j in [-M, M] \\ {0}; deaths at rate 1.

    ``rates`` maps each displacement to a nonnegative finite rate; at least one
    must be positive. The range M is the largest |j| present.
    """

    rates: dict

    death_rate = 1.0

    def __post_init__(self):
        if not self.rates:
            raise ParameterError("kernel needs at least one displacement rate")
        for j, mu in self.rates.items():
            if not isinstance(j, (int, np.integer)) or j == 0:
                raise ParameterError(f"displacement must be a nonzero integer, got {j!r}")
            if abs(int(j)) >= (1 << 19):
                raise ParameterError(f"displacement {j} out of supported range")
            if not np.isfinite(mu) or mu < 0:
                raise ParameterError(f"rate for displacement {j} must be finite and >= 0")
        if not any(mu > 0 for mu in self.rates.values()):
            raise ParameterError("all birth rates are zero")
        object.__setattr__(self, "rates", {int(j): float(mu) for j, mu in sorted(self.rates.items())})

    @property
    def range(self) -> int:
        return max(abs(j) for j in self.rates)

    @property
    def total_birth_rate(self) -> float:
        return float(sum(self.rates.values()))

    def mirrored(self) -> "InteractionKernel":
        """Kernel with mu_j and mu_{-j} swapped (the law of the dual process)."""
        return InteractionKernel({-j: mu for j, mu in self.rates.items()})

    def drift_bound(self) -> tuple[float, float]:
        """Crude (left, right) bounds on the one-sided spread rates."""
        right = sum(j * mu for j, mu in self.rates.items() if j > 0)
        left = sum(-j * mu for j, mu in self.rates.items() if j < 0)
        return float(left), float(right)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        displs = np.array(sorted(self.rates), dtype=np.int64)
        rates = np.array([self.rates[int(j)] for j in displs], dtype=np.float64)
        return displs, rates


@dataclass(frozen=True)
class SpaceTimeWindow:
    """Finite truncation [x_min, x_max] x [0, t_max] of the space-time slab."""

    x_min: int
    x_max: int
    t_max: float

    def __post_init__(self):
        if self.x_min > self.x_max:
            raise ParameterError(f"window has x_min={self.x_min} > x_max={self.x_max}")
        if not np.isfinite(self.t_max) or self.t_max < 0:
            raise ParameterError("t_max must be finite and >= 0")
        if max(abs(self.x_min), abs(self.x_max)) >= (1 << 39):
            raise ParameterError("window coordinates out of supported range")

    @property
    def n_sites(self) -> int:
        return self.x_max - self.x_min + 1

    def contains_site(self, x: int) -> bool:
        return self.x_min <= x <= self.x_max

    def sites(self) -> np.ndarray:
        return np.arange(self.x_min, self.x_max + 1)


@dataclass(frozen=True)
class SpaceTimeBox:
    """Site interval [x_min, x_max] crossed with the time interval [0, t_max]."""

    x_min: int
    x_max: int
    t_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.t_max < 0:
            raise ParameterError("box must be nonempty")

    def within(self, window: SpaceTimeWindow) -> bool:
        return (window.x_min <= self.x_min and self.x_max <= window.x_max
                and self.t_max <= window.t_max)


class EventLog:
    """Immutable, time-sorted realization of the graphical representation.

    Event arrays: times (f8), kind (u1, 0=death 1=arrow), src, dst (i4,
    absolute site coordinates; src==dst for deaths). Exact time ties are
    ordered death-before-arrow, then by site, then by displacement.
    """

    __slots__ = ("window", "kernel", "seed", "times", "kind", "src", "dst",
                 "boundary_seed", "_cache")

    def __init__(self, window, kernel, seed, times, kind, src, dst, boundary_seed=None):
        self.window = window
        self.kernel = kernel
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        for arr in (times, kind, src, dst):
            arr.setflags(write=False)
        self.times = times
        self.kind = kind
        self.src = src
        self.dst = dst
        self.boundary_seed = self.seed if boundary_seed is None else int(boundary_seed) & 0xFFFFFFFFFFFFFFFF
        self._cache = {}

    @property
    def n_events(self) -> int:
        return int(self.times.shape[0])

    def events(self) -> Iterator[Event]:
        for i in range(self.n_events):
            if self.kind[i] == DEATH:
                yield DeathMark(int(self.src[i]), float(self.times[i]))
            else:
                yield BirthArrow(int(self.src[i]), int(self.dst[i]), float(self.times[i]))

    def arrays(self):
        return self.times, self.kind, self.src, self.dst

    def death_count(self) -> int:
        return int(np.count_nonzero(self.kind == DEATH))

    def same_realization_as(self, other: "EventLog") -> bool:
        return self is other

    @classmethod
    def from_events(cls, kernel, window, seed, events) -> "EventLog":
        """Hand-built log from an iterable of DeathMark / BirthArrow (for fixtures)."""
        times, kind, src, dst = [], [], [], []
        M = kernel.range
        for ev in events:
            if isinstance(ev, DeathMark):
                if not window.contains_site(ev.site):
                    raise ParameterError(f"death mark site {ev.site} outside window")
                times.append(ev.time)
                kind.append(DEATH)
                src.append(ev.site)
                dst.append(ev.site)
            elif isinstance(ev, BirthArrow):
                d = ev.target - ev.source
                if d == 0 or abs(d) > M:
                    raise ParameterError(f"arrow displacement {d} outside kernel range {M}")
                if not (window.contains_site(ev.source) and window.contains_site(ev.target)):
                    raise ParameterError("arrow endpoints outside window")
                times.append(ev.time)
                kind.append(ARROW)
                src.append(ev.source)
                dst.append(ev.target)
            else:
                raise ParameterError(f"not an event: {ev!r}")
            if not (0.0 <= ev.time <= window.t_max):
                raise ParameterError(f"event time {ev.time} outside [0, {window.t_max}]")
        t = np.asarray(times, dtype=np.float64)
        k = np.asarray(kind, dtype=np.uint8)
        s = np.asarray(src, dtype=np.int32)
        d = np.asarray(dst, dtype=np.int32)
        _kernels.sort_events(t, k, s, d, len(t), window.t_max)
        return cls(window, kernel, seed, t, k, s, d)


def _capacity(n_streams: int, expected: float) -> int:
    return int(expected + 10.0 * np.sqrt(expected + 1.0)) + 8 * n_streams + 64


def generate_log(kernel: InteractionKernel, window: SpaceTimeWindow, seed: int) -> EventLog:
    """Draw the full event log for (kernel, window, seed).

    Per-site death marks are rate-1 Poisson processes; per (site, displacement)
    arrows are independent Poisson processes at rate mu_j, generated only when
    the target stays inside the window. Deterministic in the arguments.
    """
    if not isinstance(seed, (int, np.integer)):
        raise ParameterError("seed must be an integer")
    seed_u = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    displs, rates = kernel.arrays()
    n_sites = window.n_sites
    n_streams = n_sites * (1 + len(displs))
    expected = n_sites * (1.0 + float(rates.sum())) * window.t_max
    cap = _capacity(n_streams, expected)
    while True:
        times = np.empty(cap, np.float64)
        kind = np.empty(cap, np.uint8)
        src = np.empty(cap, np.int32)
        dst = np.empty(cap, np.int32)
        n = _kernels.gen_window_events(seed_u, window.x_min, window.x_max,
                                       window.t_max, displs, rates,
                                       times, kind, src, dst)
        if n >= 0:
            break
        cap *= 2
    _kernels.sort_events(times, kind, src, dst, n, window.t_max)
    return EventLog(window, kernel, int(seed_u), times[:n].copy(), kind[:n].copy(),
                    src[:n].copy(), dst[:n].copy())


def boundary_arrows(log: EventLog) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Arrows from the frozen-occupied virtual sites beyond the window edges.

    Streams are keyed from the log's boundary seed exactly like in-window
    streams, so enlarging the window turns them into ordinary log arrows.
    """
    key = "boundary"
    if key not in log._cache:
        displs, rates = log.kernel.arrays()
        w = log.window
        expected = 2 * log.kernel.range * float(rates.sum()) * w.t_max
        cap = _capacity(2 * log.kernel.range * (1 + len(displs)), expected)
        while True:
            times = np.empty(cap, np.float64)
            kind = np.empty(cap, np.uint8)
            src = np.empty(cap, np.int32)
            dst = np.empty(cap, np.int32)
            n = _kernels.gen_boundary_events(np.uint64(log.boundary_seed), w.x_min, w.x_max,
                                             w.t_max, displs, rates, times, kind, src, dst)
            if n >= 0:
                break
            cap *= 2
        _kernels.sort_events(times, kind, src, dst, n, w.t_max)
        for arr in (times, kind, src, dst):
            arr.setflags(write=False)
        log._cache[key] = (times[:n], kind[:n], src[:n], dst[:n])
    return log._cache[key]


def clear_deaths_in_box(log: EventLog, box: SpaceTimeBox) -> EventLog:
    """Copy of the log with every death mark inside the box removed.

    Arrows and deaths outside the box are preserved in order; idempotent.
    """
    if not box.within(log.window):
        raise ParameterError("box exceeds the log window")
    times, kind, src, dst = log.arrays()
    n = log.n_events
    ot = np.empty(n, np.float64)
    ok = np.empty(n, np.uint8)
    osr = np.empty(n, np.int32)
    ods = np.empty(n, np.int32)
    m = _kernels.clear_box_events(times, kind, src, dst, n,
                                  box.x_min, box.x_max, box.t_max,
                                  ot, ok, osr, ods)
    return EventLog(log.window, log.kernel, log.seed, ot[:m].copy(), ok[:m].copy(),
                    osr[:m].copy(), ods[:m].copy(), boundary_seed=log.boundary_seed)


def reverse_segment(log: EventLog, t_lo: float, t_hi: float) -> EventLog:
    """Time-reverse the events in (t_lo, t_hi] onto the interval [0, t_hi - t_lo].

    An event at time s maps to t_hi - s; arrows swap source and target, death
    marks stay put. The returned log carries the mirrored kernel (the dual
    dynamics) and a derived boundary seed.
    """
    if not (0.0 <= t_lo < t_hi <= log.window.t_max):
        raise ParameterError(f"need 0 <= t_lo < t_hi <= t_max, got ({t_lo}, {t_hi})")
    times, kind, src, dst = log.arrays()
    n = log.n_events
    ot = np.empty(n, np.float64)
    ok = np.empty(n, np.uint8)
    osr = np.empty(n, np.int32)
    ods = np.empty(n, np.int32)
    m = _kernels.reverse_segment_events(times, kind, src, dst, n, t_lo, t_hi,
                                        ot, ok, osr, ods)
    window = SpaceTimeWindow(log.window.x_min, log.window.x_max, t_hi - t_lo)
    return EventLog(window, log.kernel.mirrored(), log.seed,
                    ot[:m].copy(), ok[:m].copy(), osr[:m].copy(), ods[:m].copy(),
                    boundary_seed=int(_kernels.derived_log_seed(np.uint64(log.seed))))


def dump_log(log: EventLog, path) -> None:
    """Binary dump: header + packed little-endian event records (see README)."""
    M = log.kernel.range
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HH", 1, M))
        for j in [*range(-M, 0), *range(1, M + 1)]:
            fh.write(struct.pack("<d", log.kernel.rates.get(j, 0.0)))
        fh.write(struct.pack("<qqdQQQ", log.window.x_min, log.window.x_max,
                             log.window.t_max, log.seed, log.boundary_seed,
                             log.n_events))
        rec = np.empty(log.n_events, _RECORD)
        rec["time"] = log.times
        rec["kind"] = log.kind
        rec["src"] = log.src
        rec["dst"] = log.dst
        fh.write(rec.tobytes())


def load_log(path) -> EventLog:
    """Restore a log written by dump_log; round-trip is bit-exact."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ParameterError(f"not an event-log file: {path}")
        version, M = struct.unpack("<HH", fh.read(4))
        if version != 1:
            raise ParameterError(f"unsupported log format version {version}")
        rates = {}
        for j in [*range(-M, 0), *range(1, M + 1)]:
            (mu,) = struct.unpack("<d", fh.read(8))
            if mu > 0:
                rates[j] = mu
        x_min, x_max, t_max, seed, bseed, n = struct.unpack("<qqdQQQ", fh.read(48))
        rec = np.frombuffer(fh.read(n * _RECORD.itemsize), dtype=_RECORD)
    window = SpaceTimeWindow(x_min, x_max, t_max)
    kernel = InteractionKernel(rates)
    return EventLog(window, kernel, seed,
                    np.ascontiguousarray(rec["time"]),
                    np.ascontiguousarray(rec["kind"]),
                    np.ascontiguousarray(rec["src"]),
                    np.ascontiguousarray(rec["dst"]),
                    boundary_seed=bseed)

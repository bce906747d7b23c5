"""Configuration evolution by event-log replay, with edge and cone tracking.

All processes coupled on one log are produced by replaying the same sorted
event sequence: a death mark vacates its site, a birth arrow occupies a vacant
target when its source is occupied, and everything else is a no-op (births
onto occupied sites merge with the resident particle). The frozen-boundary
policy additionally feeds arrows from permanently occupied virtual sites just
outside the window.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import ParameterError
from .graphical import EventLog, InteractionKernel, SpaceTimeWindow, boundary_arrows

INT_NONE = _kernels.INT_NONE


class BoundaryPolicy(enum.Enum):
    """How sites beyond the window behave during replay."""

    VACANT_OUTSIDE = "vacant"
    FROZEN_OCCUPIED_OUTSIDE = "frozen"


class Configuration:
    """Occupied-site set on a window, stored as a dense boolean vector."""

    __slots__ = ("window", "occupied")

    def __init__(self, window: SpaceTimeWindow, occupied: np.ndarray):
        occupied = np.asarray(occupied, dtype=np.bool_)
        if occupied.shape != (window.n_sites,):
            raise ParameterError("occupancy vector does not match window size")
        self.window = window
        self.occupied = occupied

    @classmethod
    def empty(cls, window) -> "Configuration":
        return cls(window, np.zeros(window.n_sites, np.bool_))

    @classmethod
    def full(cls, window) -> "Configuration":
        return cls(window, np.ones(window.n_sites, np.bool_))

    @classmethod
    def from_sites(cls, window, sites) -> "Configuration":
        occ = np.zeros(window.n_sites, np.bool_)
        for x in sites:
            if not window.contains_site(int(x)):
                raise ParameterError(f"site {x} outside window")
            occ[int(x) - window.x_min] = True
        return cls(window, occ)

    @classmethod
    def single(cls, window, x: int) -> "Configuration":
        return cls.from_sites(window, [x])

    def sites(self) -> np.ndarray:
        return np.nonzero(self.occupied)[0] + self.window.x_min

    def __contains__(self, x: int) -> bool:
        return self.window.contains_site(x) and bool(self.occupied[x - self.window.x_min])

    def __call__(self, x: int) -> int:
        """Coordinatewise view: 1 if x is occupied, else 0."""
        return 1 if x in self else 0

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.occupied))

    @property
    def is_empty(self) -> bool:
        return not self.occupied.any()

    def copy(self) -> "Configuration":
        return Configuration(self.window, self.occupied.copy())

    def union(self, other: "Configuration") -> "Configuration":
        if other.window != self.window:
            raise ParameterError("windows differ")
        return Configuration(self.window, self.occupied | other.occupied)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Configuration) and self.window == other.window
                and bool(np.array_equal(self.occupied, other.occupied)))


@dataclass(frozen=True)
class ConeSpec:
    """Estimated edge velocities plus the margin defining I_t.

    I_t = [(beta_hat + eps) t, (alpha_hat - eps) t]; requires
    beta_hat + eps < alpha_hat - eps.
    """

    alpha_hat: float
    beta_hat: float
    eps: float

    def __post_init__(self):
        if not (self.eps > 0):
            raise ParameterError("ConeSpec: eps must be > 0")
        if not (self.beta_hat + self.eps < self.alpha_hat - self.eps):
            raise ParameterError(
                f"ConeSpec: need beta_hat+eps < alpha_hat-eps, got "
                f"{self.beta_hat + self.eps} >= {self.alpha_hat - self.eps}")

    @property
    def lo_slope(self) -> float:
        return self.beta_hat + self.eps

    @property
    def hi_slope(self) -> float:
        return self.alpha_hat - self.eps


def cone_interval(spec: ConeSpec, t: float) -> range:
    """Integer sites of I_t, taken literally from the defining inequalities.

    May be empty for small t > 0 when both slopes have the same sign.
    """
    if t < 0:
        raise ParameterError("t must be >= 0")
    lo = math.ceil(spec.lo_slope * t)
    hi = math.floor(spec.hi_slope * t)
    return range(lo, hi + 1)


class Trajectory:
    """Replay record: deltas at state-changing event times plus edge tracks.

    States are piecewise constant between recorded times; the configuration at
    any t is reconstructible from the initial one and the deltas. Edge values
    use INT_NONE while the configuration is empty.
    """

    __slots__ = ("log", "window", "initial", "policy", "t_start", "t_end",
                 "times", "sites_rel", "values", "edge_r", "edge_l", "counts",
                 "extinction_time", "final_occupied")

    def __init__(self, log, initial, policy, t_start, t_end, times, sites_rel,
                 values, edge_r, edge_l, counts, extinction_time, final_occupied):
        self.log = log
        self.window = initial.window
        self.initial = initial
        self.policy = policy
        self.t_start = t_start
        self.t_end = t_end
        self.times = times
        self.sites_rel = sites_rel
        self.values = values
        self.edge_r = edge_r
        self.edge_l = edge_l
        self.counts = counts
        self.extinction_time = extinction_time
        self.final_occupied = final_occupied

    @property
    def n_changes(self) -> int:
        return int(self.times.shape[0])

    def state_at(self, t: float) -> Configuration:
        if not (self.t_start <= t <= self.t_end):
            raise ParameterError(f"t={t} outside [{self.t_start}, {self.t_end}]")
        occ = self.initial.occupied.copy()
        _kernels.apply_deltas_until(self.times, self.sites_rel, self.values,
                                    self.n_changes, occ, t)
        return Configuration(self.window, occ)

    def final_state(self) -> Configuration:
        return Configuration(self.window, self.final_occupied.copy())

    def _index_at(self, t: float) -> int:
        return int(np.searchsorted(self.times, t, side="right")) - 1

    def count_at(self, t: float) -> int:
        i = self._index_at(t)
        return int(self.counts[i]) if i >= 0 else self.initial.count

    def alive_at(self, t: float) -> bool:
        return self.count_at(t) > 0

    def _edge_at(self, t: float, which: str) -> Optional[int]:
        i = self._index_at(t)
        if i >= 0:
            v = int(self.edge_r[i] if which == "r" else self.edge_l[i])
        else:
            occ = self.initial.occupied
            idx = np.nonzero(occ)[0]
            if idx.size == 0:
                v = INT_NONE
            else:
                v = int(idx.max() if which == "r" else idx.min())
        return None if v == INT_NONE else v + self.window.x_min

    def right_edge(self, t: float) -> Optional[int]:
        """r_t = sup of the configuration (None while empty)."""
        return self._edge_at(t, "r")

    def left_edge(self, t: float) -> Optional[int]:
        """l_t = inf of the configuration (None while empty)."""
        return self._edge_at(t, "l")

    def max_right_edge(self, t: float) -> Optional[int]:
        """R_t = sup_{s<=t} r_s."""
        i = self._index_at(t)
        vals = [self._initial_edge("r")] + [int(v) for v in self.edge_r[:i + 1] if v != INT_NONE]
        vals = [v for v in vals if v is not None]
        return max(vals) + self.window.x_min if vals else None

    def min_left_edge(self, t: float) -> Optional[int]:
        """L_t = inf_{s<=t} l_s."""
        i = self._index_at(t)
        vals = [self._initial_edge("l")] + [int(v) for v in self.edge_l[:i + 1] if v != INT_NONE]
        vals = [v for v in vals if v is not None]
        return min(vals) + self.window.x_min if vals else None

    def _initial_edge(self, which):
        idx = np.nonzero(self.initial.occupied)[0]
        if idx.size == 0:
            return None
        rel = idx.max() if which == "r" else idx.min()
        return int(rel)

    def edge_tracks(self):
        """(times, r, l) arrays in absolute coordinates; INT_NONE while empty."""
        r = np.where(self.edge_r == INT_NONE, INT_NONE, self.edge_r + self.window.x_min)
        l = np.where(self.edge_l == INT_NONE, INT_NONE, self.edge_l + self.window.x_min)
        return self.times, r, l


def _policy_events(log: EventLog, policy: BoundaryPolicy):
    times, kind, src, dst = log.arrays()
    if policy is BoundaryPolicy.VACANT_OUTSIDE:
        return times, kind, src, dst
    key = "frozen_merge"
    if key not in log._cache:
        bt, bk, bs, bd = boundary_arrows(log)
        n1, n2 = times.shape[0], bt.shape[0]
        ot = np.empty(n1 + n2, np.float64)
        ok = np.empty(n1 + n2, np.uint8)
        osr = np.empty(n1 + n2, np.int32)
        ods = np.empty(n1 + n2, np.int32)
        _kernels.merge_events(times, kind, src, dst, n1, bt, bk, bs, bd, n2,
                              ot, ok, osr, ods)
        for arr in (ot, ok, osr, ods):
            arr.setflags(write=False)
        log._cache[key] = (ot, ok, osr, ods)
    return log._cache[key]


def evolve(log: EventLog, initial: Configuration, boundary: BoundaryPolicy,
           t_end: float, t_start: float = 0.0) -> Trajectory:
    """Replay the log's events in (t_start, t_end] from the given configuration.

    Returns the trajectory with state deltas, edge processes and extinction
    time. t_end may not exceed the log horizon.
    """
    if t_end > log.window.t_max:
        raise ParameterError(f"t_end={t_end} exceeds log horizon {log.window.t_max}")
    if not (0.0 <= t_start <= t_end):
        raise ParameterError("need 0 <= t_start <= t_end")
    if initial.window != log.window:
        raise ParameterError("initial configuration window differs from log window")
    times, kind, src, dst = _policy_events(log, boundary)
    n = times.shape[0]
    occ = initial.occupied.copy()
    cap = max(n, 1)
    dts = np.empty(cap, np.float64)
    dsite = np.empty(cap, np.int32)
    dval = np.empty(cap, np.uint8)
    dr = np.empty(cap, np.int32)
    dl = np.empty(cap, np.int32)
    dcnt = np.empty(cap, np.int32)
    nd, ext, _, _, _ = _kernels.replay(times, kind, src, dst, n,
                                       log.window.x_min, log.window.n_sites,
                                       occ, t_start, t_end,
                                       dts, dsite, dval, dr, dl, dcnt)
    return Trajectory(log, initial, boundary, t_start, t_end,
                      dts[:nd].copy(), dsite[:nd].copy(), dval[:nd].copy(),
                      dr[:nd].copy(), dl[:nd].copy(), dcnt[:nd].copy(),
                      None if np.isnan(ext) else float(ext), occ)


def coupled_evolve(log: EventLog, initials: Sequence[Configuration],
                   boundaries=None, t_end: float = None) -> list:
    """Evolve several initial configurations on one realization.

    ``boundaries`` may be a single policy or one per initial configuration;
    the default is vacant-outside for all.
    """
    if t_end is None:
        t_end = log.window.t_max
    if boundaries is None:
        boundaries = BoundaryPolicy.VACANT_OUTSIDE
    if isinstance(boundaries, BoundaryPolicy):
        boundaries = [boundaries] * len(initials)
    if len(boundaries) != len(initials):
        raise ParameterError("one boundary policy per initial configuration")
    for cfg in initials:
        if cfg.window != log.window:
            raise ParameterError("all initial configurations must share the log window")
    return [evolve(log, cfg, pol, t_end) for cfg, pol in zip(initials, boundaries)]


class AgreementResult(NamedTuple):
    holds: bool
    last_disagreement_time: Optional[float]
    first_disagreement_time: Optional[float]
    cone_within_window: bool


def agreement_on_cone(trajA: Trajectory, trajB: Trajectory, spec: ConeSpec,
                      t_end: float = None, t_start: float = 0.0) -> AgreementResult:
    """Decide whether xi_A(t) and xi_B(t) agree on I_t for every t in [t_start, t_end].

    Exact: the predicate is evaluated at every state-change time of either
    trajectory and at every instant a cone boundary crosses an integer, plus
    the open intervals in between. Endpoint membership in I_t is inclusive.
    """
    if not trajA.log.same_realization_as(trajB.log):
        raise ParameterError("trajectories come from different logs")
    if trajA.window != trajB.window:
        raise ParameterError("trajectories on different windows")
    if trajA.t_start != 0.0 or trajB.t_start != 0.0:
        raise ParameterError("agreement sweep needs trajectories replayed from time 0")
    if t_end is None:
        t_end = min(trajA.t_end, trajB.t_end)
    if t_end > min(trajA.t_end, trajB.t_end) or t_start < 0 or t_start > t_end:
        raise ParameterError("check interval outside the trajectories' horizons")
    w = trajA.window
    occA = trajA.initial.occupied.copy()
    occB = trajB.initial.occupied.copy()
    ff_i, ff_o, lf_i, lf_o, cone_ok = _kernels.cone_sweep(
        occA, occB, w.n_sites, w.x_min,
        trajA.times, trajA.sites_rel, trajA.values, trajA.n_changes,
        trajB.times, trajB.sites_rel, trajB.values, trajB.n_changes,
        spec.lo_slope, spec.hi_slope, t_start, t_end)
    holds = not (np.isfinite(ff_i) or np.isfinite(ff_o))
    last = max(lf_i, lf_o)
    first = min(ff_i, ff_o)
    return AgreementResult(bool(holds),
                           None if not np.isfinite(last) else float(last),
                           None if not np.isfinite(first) else float(first),
                           bool(cone_ok))


def truncation_certificate(log: EventLog, spec: ConeSpec, t_end: float) -> bool:
    """True iff the full-start process agrees on the cone under both boundary
    policies up to t_end.

    Certifies, realization-wise, that the finite window reproduces the
    infinite-volume full-occupancy process on I_t for t <= t_end: the two
    policies sandwich every possible in-flow of occupation from outside.
    """
    full = Configuration.full(log.window)
    tv = evolve(log, full, BoundaryPolicy.VACANT_OUTSIDE, t_end)
    tf = evolve(log, full, BoundaryPolicy.FROZEN_OCCUPIED_OUTSIDE, t_end)
    res = agreement_on_cone(tv, tf, spec, t_end)
    return res.holds and res.cone_within_window


def default_window(kernel: InteractionKernel, spec: ConeSpec, t_end: float) -> SpaceTimeWindow:
    """Window for full-start cone experiments: generous light-cone margin.

    Half-width (max(|alpha_hat|, |beta_hat|) + total birth rate) * t_end + M;
    every run still carries a truncation certificate, so exactness is checked
    rather than assumed.
    """
    speed = max(abs(spec.alpha_hat), abs(spec.beta_hat)) + kernel.total_birth_rate
    W = math.ceil(speed * t_end) + kernel.range
    return SpaceTimeWindow(-W, W, t_end)


def spread_window(kernel: InteractionKernel, t_end: float, center: int = 0) -> SpaceTimeWindow:
    """Window for finite-start runs with no velocity estimate yet.

    Uses the crude drift bounds plus one as the enclosing speed; runs that
    still touch the boundary must be flagged by the caller.
    """
    left, right = kernel.drift_bound()
    W = math.ceil((1.0 + max(left, right)) * t_end) + kernel.range
    return SpaceTimeWindow(center - W, center + W, t_end)


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Delta records as CSV with columns time, site, new_value."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["time", "site", "new_value"])
        for i in range(traj.n_changes):
            wr.writerow([repr(float(traj.times[i])),
                         int(traj.sites_rel[i]) + traj.window.x_min,
                         int(traj.values[i])])


def trajectory_summary(traj: Trajectory, certificate: Optional[bool] = None) -> dict:
    """JSON-ready run summary: extinction time, final edges, certificate flag."""
    t = traj.t_end
    return {
        "t_start": traj.t_start,
        "t_end": traj.t_end,
        "n_changes": traj.n_changes,
        "extinction_time": traj.extinction_time,
        "final_edges": {
            "r": traj.right_edge(t),
            "l": traj.left_edge(t),
            "R": traj.max_right_edge(t),
            "L": traj.min_left_edge(t),
        },
        "final_count": traj.count_at(t),
        "certificate": certificate,
    }

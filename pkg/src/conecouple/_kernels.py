"""Low-level numba kernels for event generation, replay, and cone sweeps.

Everything here works on flat numpy arrays so that the Monte Carlo layers can
push millions of replicates through without per-event Python overhead. The
object API in `graphical` / `engine` calls the same primitives one realization
at a time, so there is a single source of truth for the dynamics.

RNG design: every Poisson stream (one per site for death marks, one per
(source site, displacement) for arrows) owns a splitmix64-style sequence whose
starting state and gamma are mixed from (log seed, site, displacement). This
is a counter-based split of the master seed: regenerating with a larger time
horizon or a wider window reproduces all previously generated events exactly.
"""

import numpy as np
from numba import njit, prange, uint64, int64, float64

INT_NONE = -(2**31)  # sentinel for "no occupied site" in edge tracking

_TWO53_INV = 1.0 / 9007199254740992.0

# salts keep the site / displacement / replicate keying domains apart
_SITE_OFF = 1 << 41
_DISP_OFF = 1 << 20
_REP_SALT = 0x243F6A8885A308D3
_REV_SALT = 0x452821E638D01377
_GOLDEN = 0x9E3779B97F4A7C15


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> uint64(1)) & uint64(0x5555555555555555))
    x = (x & uint64(0x3333333333333333)) + ((x >> uint64(2)) & uint64(0x3333333333333333))
    x = (x + (x >> uint64(4))) & uint64(0x0F0F0F0F0F0F0F0F)
    return (x * uint64(0x0101010101010101)) >> uint64(56)


@njit(cache=True, inline="always")
def _gamma_of(x):
    # per-stream increment, odd and bit-mixed (SplittableRandom-style guard)
    g = _mix64(x) | uint64(1)
    if _popcount(g ^ (g >> uint64(1))) < uint64(24):
        g = g ^ uint64(0xAAAAAAAAAAAAAAAA)
    return g


@njit(cache=True, inline="always")
def _stream_init(seed, site, disp):
    # site and disp arrive pre-offset to nonnegative ints
    h = _mix64(uint64(seed) ^ (uint64(site) * uint64(0xD1B54A32D192ED03)))
    h = _mix64(h ^ (uint64(disp) * uint64(0x8CB92BA72F3D8DD7)))
    return h, _gamma_of(h ^ uint64(0xFF51AFD7ED558CCD))


@njit(cache=True, inline="always")
def _next_u01(state, gamma):
    state = state + gamma
    u = float64(_mix64(state) >> uint64(11)) * _TWO53_INV
    return state, u


@njit(cache=True)
def derive_seed(master, index):
    """Per-replicate seed: pure function of (master seed, replicate index)."""
    return _mix64((uint64(master) ^ uint64(_REP_SALT)) + uint64(_GOLDEN) * (uint64(index) + uint64(1)))


@njit(cache=True)
def derived_log_seed(seed):
    """Seed attached to logs obtained by transforms (reversal), for boundary streams."""
    return _mix64(uint64(seed) ^ uint64(_REV_SALT))


@njit(cache=True, inline="always")
def _fill_stream(seed, site, disp, rate, t_max, kindval, a, b,
                 times, kind, src, dst, n):
    """Append one Poisson stream's events; returns new count or -1 on overflow."""
    cap = times.shape[0]
    state, gamma = _stream_init(seed, uint64(site + _SITE_OFF), uint64(disp + _DISP_OFF))
    t = 0.0
    inv = 1.0 / rate
    while True:
        state, u = _next_u01(state, gamma)
        t += -np.log(1.0 - u) * inv
        if t > t_max:
            return n
        if n >= cap:
            return -1
        times[n] = t
        kind[n] = kindval
        src[n] = a
        dst[n] = b
        n += 1


@njit(cache=True)
def gen_window_events(seed, x_min, x_max, t_max, displs, rates,
                      times, kind, src, dst):
    """All in-window death marks (rate 1) and birth arrows (rate mu_j).

    Arrows whose target would leave the window are not generated (boundary
    semantics live in the engine's policy). Returns the unsorted event count,
    or -1 if the capacity of the output arrays was exceeded.
    """
    n = 0
    for site in range(x_min, x_max + 1):
        n = _fill_stream(seed, site, 0, 1.0, t_max, 0, site, site,
                         times, kind, src, dst, n)
        if n < 0:
            return -1
        for k in range(displs.shape[0]):
            rate = rates[k]
            if rate <= 0.0:
                continue
            j = displs[k]
            tgt = site + j
            if tgt < x_min or tgt > x_max:
                continue
            n = _fill_stream(seed, site, j, rate, t_max, 1, site, tgt,
                             times, kind, src, dst, n)
            if n < 0:
                return -1
    return n


@njit(cache=True)
def gen_boundary_events(seed, x_min, x_max, t_max, displs, rates,
                        times, kind, src, dst):
    """Arrows fired by the frozen-occupied virtual sites beyond the window.

    Streams are keyed exactly like in-window streams, so enlarging the window
    turns these into the ordinary arrows of the enlarged log with identical
    event times.
    """
    n = 0
    maxd = 0
    for k in range(displs.shape[0]):
        if displs[k] > maxd:
            maxd = displs[k]
        if -displs[k] > maxd:
            maxd = -displs[k]
    for side in range(2):
        for off in range(1, maxd + 1):
            site = x_min - off if side == 0 else x_max + off
            for k in range(displs.shape[0]):
                rate = rates[k]
                if rate <= 0.0:
                    continue
                j = displs[k]
                tgt = site + j
                if tgt < x_min or tgt > x_max:
                    continue
                n = _fill_stream(seed, site, j, rate, t_max, 1, site, tgt,
                                 times, kind, src, dst, n)
                if n < 0:
                    return -1
    return n


@njit(cache=True, inline="always")
def _event_gt(t1, k1, s1, d1, t2, k2, s2, d2):
    # canonical order: time, then death<arrow, then source site, then displacement
    if t1 != t2:
        return t1 > t2
    if k1 != k2:
        return k1 > k2
    if s1 != s2:
        return s1 > s2
    return (d1 - s1) > (d2 - s2)


@njit(cache=True)
def sort_events(times, kind, src, dst, n, t_hi):
    """In-place canonical sort (time asc, ties by death<arrow, site, displacement).

    Bucket pass on the near-uniform times followed by an insertion pass; O(n)
    expected for Poisson event times.
    """
    if n <= 1:
        return
    nb = n
    scale = float64(nb) / t_hi if t_hi > 0.0 else 0.0
    bucket = np.empty(n, np.int64)
    cnt = np.zeros(nb + 1, np.int64)
    for i in range(n):
        b = int64(times[i] * scale)
        if b > nb - 1:
            b = nb - 1
        if b < 0:
            b = 0
        bucket[i] = b
        cnt[b + 1] += 1
    for bix in range(nb):
        cnt[bix + 1] += cnt[bix]
    ot = np.empty(n, times.dtype)
    ok = np.empty(n, kind.dtype)
    osr = np.empty(n, src.dtype)
    ods = np.empty(n, dst.dtype)
    for i in range(n):
        b = bucket[i]
        p = cnt[b]
        cnt[b] = p + 1
        ot[p] = times[i]
        ok[p] = kind[i]
        osr[p] = src[i]
        ods[p] = dst[i]
    for i in range(1, n):
        ti = ot[i]
        ki = ok[i]
        si = osr[i]
        di = ods[i]
        j = i - 1
        while j >= 0 and _event_gt(ot[j], ok[j], osr[j], ods[j], ti, ki, si, di):
            ot[j + 1] = ot[j]
            ok[j + 1] = ok[j]
            osr[j + 1] = osr[j]
            ods[j + 1] = ods[j]
            j -= 1
        ot[j + 1] = ti
        ok[j + 1] = ki
        osr[j + 1] = si
        ods[j + 1] = di
    times[:n] = ot
    kind[:n] = ok
    src[:n] = osr
    dst[:n] = ods


@njit(cache=True)
def merge_events(t1, k1, s1, d1, n1, t2, k2, s2, d2, n2, ot, ok, osr, ods):
    """Merge two canonically sorted event lists; returns n1 + n2."""
    i = 0
    j = 0
    n = 0
    while i < n1 and j < n2:
        if _event_gt(t1[i], k1[i], s1[i], d1[i], t2[j], k2[j], s2[j], d2[j]):
            ot[n] = t2[j]
            ok[n] = k2[j]
            osr[n] = s2[j]
            ods[n] = d2[j]
            j += 1
        else:
            ot[n] = t1[i]
            ok[n] = k1[i]
            osr[n] = s1[i]
            ods[n] = d1[i]
            i += 1
        n += 1
    while i < n1:
        ot[n] = t1[i]
        ok[n] = k1[i]
        osr[n] = s1[i]
        ods[n] = d1[i]
        i += 1
        n += 1
    while j < n2:
        ot[n] = t2[j]
        ok[n] = k2[j]
        osr[n] = s2[j]
        ods[n] = d2[j]
        j += 1
        n += 1
    return n


@njit(cache=True)
def reverse_segment_events(times, kind, src, dst, n, t_lo, t_hi,
                           ot, ok, osr, ods):
    """Events at s in (t_lo, t_hi] mapped to t_hi - s with arrows reversed.

    Output is canonically sorted; returns its length.
    """
    m = 0
    for i in range(n):
        t = times[i]
        if t <= t_lo or t > t_hi:
            continue
        ot[m] = t_hi - t
        ok[m] = kind[i]
        if kind[i] == 0:
            osr[m] = src[i]
            ods[m] = dst[i]
        else:
            osr[m] = dst[i]
            ods[m] = src[i]
        m += 1
    sort_events(ot, ok, osr, ods, m, t_hi - t_lo)
    return m


@njit(cache=True)
def clear_box_events(times, kind, src, dst, n, site_lo, site_hi, box_t,
                     ot, ok, osr, ods):
    """Drop death marks with site in [site_lo, site_hi] and time <= box_t."""
    m = 0
    for i in range(n):
        if kind[i] == 0 and site_lo <= src[i] <= site_hi and times[i] <= box_t:
            continue
        ot[m] = times[i]
        ok[m] = kind[i]
        osr[m] = src[i]
        ods[m] = dst[i]
        m += 1
    return m


@njit(cache=True)
def replay(times, kind, src, dst, n, x_min, n_sites, occ, t_start, t_end,
           dts, dsite, dval, dr, dl, dcnt):
    """Replay events with time in (t_start, t_end] onto occ (mutated in place).

    Deaths vacate occupied sites; arrows occupy a vacant in-window target when
    the source is occupied (sources outside [x_min, x_min + n_sites) count as
    permanently occupied: that is the frozen-boundary merge convention).
    Arrows onto occupied targets and from vacant sources are no-ops.

    Records one row per state change: time, site index, new value, right edge,
    left edge, occupied count (edges are INT_NONE while empty). Returns
    (n_deltas, extinction_time, r, l, count); extinction_time is nan when the
    configuration never becomes empty in the replayed span, t_start when it
    starts empty.
    """
    cnt = 0
    r = INT_NONE
    l = INT_NONE
    for i in range(n_sites):
        if occ[i]:
            cnt += 1
            if r == INT_NONE or i > r:
                r = i
            if l == INT_NONE or i < l:
                l = i
    ext = np.nan
    if cnt == 0:
        ext = t_start
    nd = 0
    i0 = np.searchsorted(times[:n], t_start, side="right")
    for e in range(i0, n):
        t = times[e]
        if t > t_end:
            break
        if kind[e] == 0:
            si = src[e] - x_min
            if 0 <= si < n_sites and occ[si]:
                occ[si] = False
                cnt -= 1
                if cnt == 0:
                    r = INT_NONE
                    l = INT_NONE
                    if np.isnan(ext):
                        ext = t
                else:
                    if si == r:
                        while not occ[r]:
                            r -= 1
                    if si == l:
                        while not occ[l]:
                            l += 1
                dts[nd] = t
                dsite[nd] = si
                dval[nd] = 0
                dr[nd] = r
                dl[nd] = l
                dcnt[nd] = cnt
                nd += 1
        else:
            si = src[e] - x_min
            ti = dst[e] - x_min
            if ti < 0 or ti >= n_sites:
                continue
            src_occ = occ[si] if 0 <= si < n_sites else True
            if src_occ and not occ[ti]:
                occ[ti] = True
                cnt += 1
                if cnt == 1:
                    r = ti
                    l = ti
                else:
                    if ti > r:
                        r = ti
                    if ti < l:
                        l = ti
                dts[nd] = t
                dsite[nd] = ti
                dval[nd] = 1
                dr[nd] = r
                dl[nd] = l
                dcnt[nd] = cnt
                nd += 1
    return nd, ext, r, l, cnt


@njit(cache=True)
def apply_deltas_until(dts, dsite, dval, nd, occ, t):
    """Advance a configuration through recorded deltas with time <= t."""
    i = 0
    while i < nd and dts[i] <= t:
        occ[dsite[i]] = dval[i] == 1
        i += 1
    return i


@njit(cache=True, inline="always")
def _scan_diff(diff, lo, hi, n_sites):
    cnt = 0
    a = lo if lo > 0 else 0
    b = hi if hi < n_sites - 1 else n_sites - 1
    for s in range(a, b + 1):
        if diff[s]:
            cnt += 1
    return cnt


@njit(cache=True)
def cone_sweep(occA, occB, n_sites, x_min,
               dtA, dsA, dvA, nA, dtB, dsB, dvB, nB,
               ls, hs, t0, t1):
    """Exact check of  xi_A(t) ∩ I_t == xi_B(t) ∩ I_t  for every t in [t0, t1].

    occA/occB are the configurations at time 0 (mutated as scratch); the delta
    streams come from replays started at time 0. I_t = {x : ls*t <= x <= hs*t}.
    The predicate only changes at delta times and at the instants a cone
    boundary crosses an integer, so the sweep visits exactly those times plus
    the open intervals between them.

    Returns (ff_inst, ff_open, lf_inst, lf_open, cone_ok):
      ff_inst  first instant the predicate fails (inf if never),
      ff_open  earliest start of an open interval on which it fails (inf),
      lf_inst  last failing instant (-inf), lf_open  supremum of the last
      failing open interval (-inf), cone_ok False if a nonempty I_t ever left
      the window.

    Agreement on [t0, T]  <=>  ff_inst > T and ff_open >= T.
    """
    ia = apply_deltas_until(dtA, dsA, dvA, nA, occA, t0)
    ib = apply_deltas_until(dtB, dsB, dvB, nB, occB, t0)
    diff = np.empty(n_sites, np.bool_)
    for s in range(n_sites):
        diff[s] = occA[s] != occB[s]
    lo = int64(np.ceil(ls * t0)) - x_min
    hi = int64(np.floor(hs * t0)) - x_min
    cone_ok = True
    if lo <= hi and (lo < 0 or hi > n_sites - 1):
        cone_ok = False
    dcnt = _scan_diff(diff, lo, hi, n_sites)

    INF = np.inf
    ff_inst = INF
    ff_open = INF
    lf_inst = -INF
    lf_open = -INF
    if dcnt > 0:
        ff_inst = t0
        lf_inst = t0

    # next boundary-change instants; "enter" changes apply at the instant,
    # "leave" changes apply just after it
    if ls > 0.0:
        t_lo = (lo + x_min) / ls          # site lo leaves after t_lo
        lo_enter = False
    elif ls < 0.0:
        t_lo = (lo + x_min - 1) / ls      # site lo-1 enters at t_lo
        lo_enter = True
    else:
        t_lo = INF
        lo_enter = False
    if hs > 0.0:
        t_hi = (hi + x_min + 1) / hs      # site hi+1 enters at t_hi
        hi_enter = True
    elif hs < 0.0:
        t_hi = (hi + x_min) / hs          # site hi leaves after t_hi
        hi_enter = False
    else:
        t_hi = INF
        hi_enter = True

    t_cur = t0
    while True:
        ta = dtA[ia] if ia < nA else INF
        tb = dtB[ib] if ib < nB else INF
        tau = t1
        if ta < tau:
            tau = ta
        if tb < tau:
            tau = tb
        if t_lo < tau:
            tau = t_lo
        if t_hi < tau:
            tau = t_hi
        if tau < t_cur:
            tau = t_cur

        if tau > t_cur and dcnt > 0:
            # predicate fails on all of (t_cur, tau)
            if ff_open == INF:
                ff_open = t_cur
            lf_open = tau

        # bound changes entering at tau
        moved = False
        while t_lo <= tau and lo_enter:
            lo -= 1
            t_lo = (lo + x_min - 1) / ls
            moved = True
        while t_hi <= tau and hi_enter:
            hi += 1
            t_hi = (hi + x_min + 1) / hs
            moved = True
        if moved:
            if lo <= hi and (lo < 0 or hi > n_sites - 1):
                cone_ok = False
            dcnt = _scan_diff(diff, lo, hi, n_sites)

        # deltas at tau
        while ia < nA and dtA[ia] <= tau:
            s = dsA[ia]
            occA[s] = dvA[ia] == 1
            nd = occA[s] != occB[s]
            if nd != diff[s]:
                diff[s] = nd
                if lo <= s <= hi:
                    dcnt += 1 if nd else -1
            ia += 1
        while ib < nB and dtB[ib] <= tau:
            s = dsB[ib]
            occB[s] = dvB[ib] == 1
            nd = occA[s] != occB[s]
            if nd != diff[s]:
                diff[s] = nd
                if lo <= s <= hi:
                    dcnt += 1 if nd else -1
            ib += 1

        # the predicate at the instant tau
        if dcnt > 0:
            if ff_inst == INF:
                ff_inst = tau
            lf_inst = tau

        if tau >= t1:
            break

        # bound changes leaving just after tau
        moved = False
        while t_lo <= tau and not lo_enter and ls > 0.0:
            lo += 1
            t_lo = (lo + x_min) / ls
            moved = True
        while t_hi <= tau and not hi_enter and hs < 0.0:
            hi -= 1
            t_hi = (hi + x_min) / hs
            moved = True
        if moved:
            if lo <= hi and (lo < 0 or hi > n_sites - 1):
                cone_ok = False
            dcnt = _scan_diff(diff, lo, hi, n_sites)

        t_cur = tau
    return ff_inst, ff_open, lf_inst, lf_open, cone_ok


# ---------------------------------------------------------------------------
# fused per-replicate pipelines (prange drivers)
#
# Each driver writes one row of plain floats per replicate, keyed by replicate
# index, so aggregation downstream is a deterministic fold no matter how many
# threads ran. Buffers live inside the loop body; capacities come from the
# caller, and a capacity overflow is reported via status = -1 so the caller
# can retry the whole batch with larger buffers.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _gen_sorted(seed, x_min, x_max, t_max, displs, rates, times, kind, src, dst):
    n = gen_window_events(seed, x_min, x_max, t_max, displs, rates,
                          times, kind, src, dst)
    if n < 0:
        return -1
    sort_events(times, kind, src, dst, n, t_max)
    return n


@njit(cache=True, inline="always")
def _gen_boundary_sorted(bseed, x_min, x_max, t_max, displs, rates,
                         times, kind, src, dst):
    n = gen_boundary_events(bseed, x_min, x_max, t_max, displs, rates,
                            times, kind, src, dst)
    if n < 0:
        return -1
    sort_events(times, kind, src, dst, n, t_max)
    return n


@njit(cache=True, inline="always")
def _any_and(a, b):
    for i in range(a.shape[0]):
        if a[i] and b[i]:
            return True
    return False


@njit(cache=True, inline="always")
def _any(a):
    for i in range(a.shape[0]):
        if a[i]:
            return True
    return False


# theorem1_batch output columns
T1_STATUS = 0
T1_CERT_FFI = 1
T1_CERT_FFO = 2
T1_CERT_CONEOK = 3
T1_AGR_FFI = 4
T1_AGR_FFO = 5
T1_AGR_LAST = 6
T1_AGR_CONEOK = 7
T1_SURVIVED = 8
T1_EXT_TIME = 9
T1_NCOLS = 10


@njit(cache=True, parallel=True)
def theorem1_batch(master, n_reps, x_min, x_max, T, displs, rates, ls, hs,
                   cap_log, cap_bnd, out):
    """Full-start vs single-site-start cone agreement, with certificates.

    Per replicate: one log at horizon T, replays of the full start under both
    boundary policies (certificate sweep) and of the origin start (agreement
    sweep against the vacant full start), all on [0, T].
    """
    n_sites = x_max - x_min + 1
    for rep in prange(n_reps):
        seed = derive_seed(uint64(master), uint64(rep))
        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T, displs, rates, lt, lk, lsrc, ldst)
        bt = np.empty(cap_bnd, np.float64)
        bk = np.empty(cap_bnd, np.uint8)
        bs = np.empty(cap_bnd, np.int32)
        bd = np.empty(cap_bnd, np.int32)
        nb = _gen_boundary_sorted(seed, x_min, x_max, T, displs, rates, bt, bk, bs, bd)
        if n < 0 or nb < 0:
            out[rep, T1_STATUS] = -1.0
            continue
        mt = np.empty(n + nb, np.float64)
        mk = np.empty(n + nb, np.uint8)
        ms = np.empty(n + nb, np.int32)
        md = np.empty(n + nb, np.int32)
        nm = merge_events(lt, lk, lsrc, ldst, n, bt, bk, bs, bd, nb, mt, mk, ms, md)

        dts = np.empty(max(n, 1), np.float64)
        dsite = np.empty(max(n, 1), np.int32)
        dval = np.empty(max(n, 1), np.uint8)
        dr = np.empty(max(n, 1), np.int32)
        dl = np.empty(max(n, 1), np.int32)
        dcn = np.empty(max(n, 1), np.int32)
        occ = np.ones(n_sites, np.bool_)
        ndv, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occ,
                                 0.0, T, dts, dsite, dval, dr, dl, dcn)

        fts = np.empty(max(nm, 1), np.float64)
        fsite = np.empty(max(nm, 1), np.int32)
        fval = np.empty(max(nm, 1), np.uint8)
        fr = np.empty(max(nm, 1), np.int32)
        fl = np.empty(max(nm, 1), np.int32)
        fcn = np.empty(max(nm, 1), np.int32)
        occf = np.ones(n_sites, np.bool_)
        ndf, _, _, _, _ = replay(mt, mk, ms, md, nm, x_min, n_sites, occf,
                                 0.0, T, fts, fsite, fval, fr, fl, fcn)

        ots = np.empty(max(n, 1), np.float64)
        osite = np.empty(max(n, 1), np.int32)
        oval = np.empty(max(n, 1), np.uint8)
        orr = np.empty(max(n, 1), np.int32)
        oll = np.empty(max(n, 1), np.int32)
        ocn = np.empty(max(n, 1), np.int32)
        occo = np.zeros(n_sites, np.bool_)
        occo[-x_min] = True
        ndo, exto, _, _, cnto = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occo,
                                       0.0, T, ots, osite, oval, orr, oll, ocn)

        a1 = np.ones(n_sites, np.bool_)
        a2 = np.ones(n_sites, np.bool_)
        cffi, cffo, _, _, cok = cone_sweep(a1, a2, n_sites, x_min,
                                           dts, dsite, dval, ndv,
                                           fts, fsite, fval, ndf,
                                           ls, hs, 0.0, T)
        b1 = np.ones(n_sites, np.bool_)
        b2 = np.zeros(n_sites, np.bool_)
        b2[-x_min] = True
        affi, affo, alfi, alfo, aok = cone_sweep(b1, b2, n_sites, x_min,
                                                 dts, dsite, dval, ndv,
                                                 ots, osite, oval, ndo,
                                                 ls, hs, 0.0, T)
        out[rep, T1_STATUS] = 1.0
        out[rep, T1_CERT_FFI] = cffi
        out[rep, T1_CERT_FFO] = cffo
        out[rep, T1_CERT_CONEOK] = 1.0 if cok else 0.0
        out[rep, T1_AGR_FFI] = affi
        out[rep, T1_AGR_FFO] = affo
        out[rep, T1_AGR_LAST] = max(alfi, alfo)
        out[rep, T1_AGR_CONEOK] = 1.0 if aok else 0.0
        out[rep, T1_SURVIVED] = 1.0 if cnto > 0 else 0.0
        out[rep, T1_EXT_TIME] = exto


# decay_batch per-x stride and base columns
DC_STATUS = 0
DC_CERT = 1
DC_O_ALIVE_T = 2
DC_O_ALIVE_2T = 3
DC_BASE = 4
DC_PER_X = 4  # eq1, eq2, violation, dual_alive


@njit(cache=True, parallel=True)
def decay_batch(master, n_reps, x_min, x_max, t_half, displs, rates, ls, hs,
                xs, cap_log, cap_bnd, out):
    """Per replicate at horizon 2*t_half: Eq.(1) and Eq.(2) indicators.

    For each checkpoint site x: eq1 = {xi_O(2t) and xi_Z(2t) differ at x,
    xi_O(2t) nonempty}; the dual from (x, 2t) is evolved on the reversed
    (t, 2t] segment and eq2 = {xi_O(t) and the dual miss each other, both
    nonempty}. violation flags a realization where the crossing event fails
    to force agreement at (x, 2t) (theorem-backed: must never happen).
    """
    n_sites = x_max - x_min + 1
    T2 = 2.0 * t_half
    nx = xs.shape[0]
    for rep in prange(n_reps):
        seed = derive_seed(uint64(master), uint64(rep))
        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T2, displs, rates, lt, lk, lsrc, ldst)
        bt = np.empty(cap_bnd, np.float64)
        bk = np.empty(cap_bnd, np.uint8)
        bs = np.empty(cap_bnd, np.int32)
        bd = np.empty(cap_bnd, np.int32)
        nb = _gen_boundary_sorted(seed, x_min, x_max, T2, displs, rates, bt, bk, bs, bd)
        if n < 0 or nb < 0:
            out[rep, DC_STATUS] = -1.0
            continue
        mt = np.empty(n + nb, np.float64)
        mk = np.empty(n + nb, np.uint8)
        ms = np.empty(n + nb, np.int32)
        md = np.empty(n + nb, np.int32)
        nm = merge_events(lt, lk, lsrc, ldst, n, bt, bk, bs, bd, nb, mt, mk, ms, md)

        # full start, vacant and frozen, for the certificate and xi_Z values
        dts = np.empty(max(n, 1), np.float64)
        dsite = np.empty(max(n, 1), np.int32)
        dval = np.empty(max(n, 1), np.uint8)
        scr1 = np.empty(max(n, 1), np.int32)
        scr2 = np.empty(max(n, 1), np.int32)
        scr3 = np.empty(max(n, 1), np.int32)
        occZ = np.ones(n_sites, np.bool_)
        ndz, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occZ,
                                 0.0, T2, dts, dsite, dval, scr1, scr2, scr3)
        fts = np.empty(max(nm, 1), np.float64)
        fsite = np.empty(max(nm, 1), np.int32)
        fval = np.empty(max(nm, 1), np.uint8)
        fs1 = np.empty(max(nm, 1), np.int32)
        fs2 = np.empty(max(nm, 1), np.int32)
        fs3 = np.empty(max(nm, 1), np.int32)
        occZf = np.ones(n_sites, np.bool_)
        ndf, _, _, _, _ = replay(mt, mk, ms, md, nm, x_min, n_sites, occZf,
                                 0.0, T2, fts, fsite, fval, fs1, fs2, fs3)
        a1 = np.ones(n_sites, np.bool_)
        a2 = np.ones(n_sites, np.bool_)
        cffi, cffo, _, _, cok = cone_sweep(a1, a2, n_sites, x_min,
                                           dts, dsite, dval, ndz,
                                           fts, fsite, fval, ndf,
                                           ls, hs, 0.0, T2)
        cert = (not np.isfinite(cffi)) and (not np.isfinite(cffo)) and cok

        # origin start
        ots = np.empty(max(n, 1), np.float64)
        osite = np.empty(max(n, 1), np.int32)
        oval = np.empty(max(n, 1), np.uint8)
        occO = np.zeros(n_sites, np.bool_)
        occO[-x_min] = True
        ndo, _, _, _, cnto2 = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occO,
                                     0.0, T2, ots, osite, oval, scr1, scr2, scr3)
        occOt = np.zeros(n_sites, np.bool_)
        occOt[-x_min] = True
        apply_deltas_until(ots, osite, oval, ndo, occOt, t_half)
        o_alive_t = _any(occOt)
        o_alive_2t = cnto2 > 0

        # dual segment (t, 2t] reversed, vacant outside
        rt = np.empty(max(n, 1), np.float64)
        rk = np.empty(max(n, 1), np.uint8)
        rs = np.empty(max(n, 1), np.int32)
        rd = np.empty(max(n, 1), np.int32)
        nr = reverse_segment_events(lt, lk, lsrc, ldst, n, t_half, T2, rt, rk, rs, rd)

        out[rep, DC_STATUS] = 1.0
        out[rep, DC_CERT] = 1.0 if cert else 0.0
        out[rep, DC_O_ALIVE_T] = 1.0 if o_alive_t else 0.0
        out[rep, DC_O_ALIVE_2T] = 1.0 if o_alive_2t else 0.0
        for k in range(nx):
            x = xs[k]
            occD = np.zeros(n_sites, np.bool_)
            occD[x - x_min] = True
            ndd, _, _, _, cntd = replay(rt, rk, rs, rd, nr, x_min, n_sites, occD,
                                        0.0, t_half, ots, osite, oval, scr1, scr2, scr3)
            dual_alive = cntd > 0
            inter = _any_and(occOt, occD)
            eq1 = (occO[x - x_min] != occZ[x - x_min]) and o_alive_2t
            eq2 = (not inter) and o_alive_t and dual_alive
            crossing = inter and o_alive_t and dual_alive
            forced = occO[x - x_min] and occZ[x - x_min] and o_alive_2t
            viol = crossing and not forced
            base = DC_BASE + DC_PER_X * k
            out[rep, base + 0] = 1.0 if eq1 else 0.0
            out[rep, base + 1] = 1.0 if eq2 else 0.0
            out[rep, base + 2] = 1.0 if viol else 0.0
            out[rep, base + 3] = 1.0 if dual_alive else 0.0


BC_STATUS = 0
BC_CERT1 = 1
BC_IN_A = 2
BC_CERT2 = 3
BC_TILDE_OK = 4
BC_NCOLS = 5


@njit(cache=True, parallel=True)
def boxclear_batch(master, n_reps, x_min, x_max, T, n0, displs, rates, ls, hs,
                   v_l, v_r, cap_log, cap_bnd, out):
    """Death-mark clearing check for the restart construction.

    Replicates qualifying for the agreement-from-n0 event get their death
    marks cleared in [-v_l, v_r] x [0, n0]; the transformed realization must
    satisfy full-start / box-start cone agreement from time 0 on.
    """
    n_sites = x_max - x_min + 1
    for rep in prange(n_reps):
        seed = derive_seed(uint64(master), uint64(rep))
        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T, displs, rates, lt, lk, lsrc, ldst)
        bt = np.empty(cap_bnd, np.float64)
        bk = np.empty(cap_bnd, np.uint8)
        bs = np.empty(cap_bnd, np.int32)
        bd = np.empty(cap_bnd, np.int32)
        nb = _gen_boundary_sorted(seed, x_min, x_max, T, displs, rates, bt, bk, bs, bd)
        if n < 0 or nb < 0:
            out[rep, BC_STATUS] = -1.0
            continue
        mt = np.empty(n + nb, np.float64)
        mk = np.empty(n + nb, np.uint8)
        ms = np.empty(n + nb, np.int32)
        md = np.empty(n + nb, np.int32)
        nm = merge_events(lt, lk, lsrc, ldst, n, bt, bk, bs, bd, nb, mt, mk, ms, md)

        zt = np.empty(max(n, 1), np.float64)
        zs = np.empty(max(n, 1), np.int32)
        zv = np.empty(max(n, 1), np.uint8)
        s1 = np.empty(max(nm, 1), np.int32)
        s2 = np.empty(max(nm, 1), np.int32)
        s3 = np.empty(max(nm, 1), np.int32)
        occZ = np.ones(n_sites, np.bool_)
        ndz, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occZ,
                                 0.0, T, zt, zs, zv, s1, s2, s3)
        ft = np.empty(max(nm, 1), np.float64)
        fsi = np.empty(max(nm, 1), np.int32)
        fv = np.empty(max(nm, 1), np.uint8)
        occZf = np.ones(n_sites, np.bool_)
        ndf, _, _, _, _ = replay(mt, mk, ms, md, nm, x_min, n_sites, occZf,
                                 0.0, T, ft, fsi, fv, s1, s2, s3)
        a1 = np.ones(n_sites, np.bool_)
        a2 = np.ones(n_sites, np.bool_)
        cffi, cffo, _, _, cok = cone_sweep(a1, a2, n_sites, x_min,
                                           zt, zs, zv, ndz, ft, fsi, fv, ndf,
                                           ls, hs, 0.0, T)
        cert1 = (not np.isfinite(cffi)) and (not np.isfinite(cffo)) and cok
        out[rep, BC_STATUS] = 1.0
        out[rep, BC_CERT1] = 1.0 if cert1 else 0.0
        if not cert1:
            out[rep, BC_IN_A] = 0.0
            continue

        ot = np.empty(max(n, 1), np.float64)
        osi = np.empty(max(n, 1), np.int32)
        ov = np.empty(max(n, 1), np.uint8)
        occO = np.zeros(n_sites, np.bool_)
        occO[-x_min] = True
        ndo, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occO,
                                 0.0, T, ot, osi, ov, s1, s2, s3)
        b1 = np.ones(n_sites, np.bool_)
        b2 = np.zeros(n_sites, np.bool_)
        b2[-x_min] = True
        affi, affo, _, _, aok = cone_sweep(b1, b2, n_sites, x_min,
                                           zt, zs, zv, ndz, ot, osi, ov, ndo,
                                           ls, hs, n0, T)
        in_a = (not np.isfinite(affi)) and (not np.isfinite(affo)) and aok
        out[rep, BC_IN_A] = 1.0 if in_a else 0.0
        if not in_a:
            continue

        # clear death marks in the box on both event sets
        ct = np.empty(max(n, 1), np.float64)
        ck = np.empty(max(n, 1), np.uint8)
        cs = np.empty(max(n, 1), np.int32)
        cd = np.empty(max(n, 1), np.int32)
        nc = clear_box_events(lt, lk, lsrc, ldst, n, -v_l, v_r, n0, ct, ck, cs, cd)
        cmt = np.empty(max(nm, 1), np.float64)
        cmk = np.empty(max(nm, 1), np.uint8)
        cms = np.empty(max(nm, 1), np.int32)
        cmd = np.empty(max(nm, 1), np.int32)
        ncm = clear_box_events(mt, mk, ms, md, nm, -v_l, v_r, n0, cmt, cmk, cms, cmd)

        occZ2 = np.ones(n_sites, np.bool_)
        ndz2, _, _, _, _ = replay(ct, ck, cs, cd, nc, x_min, n_sites, occZ2,
                                  0.0, T, zt, zs, zv, s1, s2, s3)
        occZf2 = np.ones(n_sites, np.bool_)
        ndf2, _, _, _, _ = replay(cmt, cmk, cms, cmd, ncm, x_min, n_sites, occZf2,
                                  0.0, T, ft, fsi, fv, s1, s2, s3)
        c1 = np.ones(n_sites, np.bool_)
        c2 = np.ones(n_sites, np.bool_)
        g1, g2, _, _, gok = cone_sweep(c1, c2, n_sites, x_min,
                                       zt, zs, zv, ndz2, ft, fsi, fv, ndf2,
                                       ls, hs, 0.0, T)
        cert2 = (not np.isfinite(g1)) and (not np.isfinite(g2)) and gok
        out[rep, BC_CERT2] = 1.0 if cert2 else 0.0

        occV = np.zeros(n_sites, np.bool_)
        for x in range(-v_l, v_r + 1):
            occV[x - x_min] = True
        ndv2, _, _, _, _ = replay(ct, ck, cs, cd, nc, x_min, n_sites, occV,
                                  0.0, T, ot, osi, ov, s1, s2, s3)
        d1 = np.ones(n_sites, np.bool_)
        d2 = np.zeros(n_sites, np.bool_)
        for x in range(-v_l, v_r + 1):
            d2[x - x_min] = True
        h1, h2, _, _, hok = cone_sweep(d1, d2, n_sites, x_min,
                                       zt, zs, zv, ndz2, ot, osi, ov, ndv2,
                                       ls, hs, 0.0, T)
        tilde = (not np.isfinite(h1)) and (not np.isfinite(h2)) and hok
        out[rep, BC_TILDE_OK] = 1.0 if tilde else 0.0


VB_STATUS = 0
VB_SURVIVED = 1
VB_R = 2
VB_L = 3
VB_RMAX = 4
VB_LMIN = 5
VB_TOUCHED = 6
VB_EXT = 7
VB_NCOLS = 8


@njit(cache=True, parallel=True)
def velocity_batch(master, n_reps, x_min, x_max, T, displs, rates, cap_log, out):
    """Origin-start runs recording survival, edges at T, running extremes,
    boundary contact and extinction time (vacant boundary)."""
    n_sites = x_max - x_min + 1
    maxd = 0
    for k in range(displs.shape[0]):
        if displs[k] > maxd:
            maxd = displs[k]
        if -displs[k] > maxd:
            maxd = -displs[k]
    for rep in prange(n_reps):
        seed = derive_seed(uint64(master), uint64(rep))
        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T, displs, rates, lt, lk, lsrc, ldst)
        if n < 0:
            out[rep, VB_STATUS] = -1.0
            continue
        dts = np.empty(max(n, 1), np.float64)
        dsite = np.empty(max(n, 1), np.int32)
        dval = np.empty(max(n, 1), np.uint8)
        dr = np.empty(max(n, 1), np.int32)
        dl = np.empty(max(n, 1), np.int32)
        dcn = np.empty(max(n, 1), np.int32)
        occ = np.zeros(n_sites, np.bool_)
        occ[-x_min] = True
        nd, ext, r, l, cnt = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occ,
                                    0.0, T, dts, dsite, dval, dr, dl, dcn)
        rmax = -x_min
        lmin = -x_min
        for i in range(nd):
            if dr[i] != INT_NONE and dr[i] > rmax:
                rmax = dr[i]
            if dl[i] != INT_NONE and dl[i] < lmin:
                lmin = dl[i]
        out[rep, VB_STATUS] = 1.0
        out[rep, VB_SURVIVED] = 1.0 if cnt > 0 else 0.0
        out[rep, VB_R] = float64(r + x_min) if r != INT_NONE else np.nan
        out[rep, VB_L] = float64(l + x_min) if l != INT_NONE else np.nan
        out[rep, VB_RMAX] = float64(rmax + x_min)
        out[rep, VB_LMIN] = float64(lmin + x_min)
        touched = rmax >= n_sites - 1 - maxd or lmin <= maxd
        out[rep, VB_TOUCHED] = 1.0 if touched else 0.0
        out[rep, VB_EXT] = ext


DU_STATUS = 0
DU_HOLDS = 1
DU_CERT = 2
DU_NCOLS = 3


@njit(cache=True, parallel=True)
def duality_batch(master, n_cases, x_min, x_max, t_half, x_half, density,
                  displs, rates, cap_log, cap_bnd, out):
    """Randomized per-realization duality checks.

    Each case draws a random initial set A (density `density` on
    [-x_half, x_half]) and a random apex x, runs the forward process to 2t and
    the dual over the reversed (t, 2t] segment, and tests
    [xi_A(2t)(x) = 1] == [xi_A(t) meets the dual at time t]. The certificate
    re-runs both halves with frozen-occupied boundaries and demands that every
    quantity entering the check is boundary-insensitive.
    """
    n_sites = x_max - x_min + 1
    T2 = 2.0 * t_half
    # dual law mirrors the kernel; its frozen boundary streams must too
    displs_m = -displs
    for case in prange(n_cases):
        seed = derive_seed(uint64(master), uint64(case))
        # separate keying domain so the case randomization never collides
        # with an event stream of the same seed
        aseed = _mix64(seed ^ uint64(0xA5EDA11CE5EDA11))
        state, gamma = _stream_init(aseed, uint64(_SITE_OFF), uint64(_DISP_OFF))
        occA0 = np.zeros(n_sites, np.bool_)
        for x in range(-x_half, x_half + 1):
            state, u = _next_u01(state, gamma)
            if u < density:
                occA0[x - x_min] = True
        state, u = _next_u01(state, gamma)
        xap = int64(u * (2 * x_half + 1)) - x_half
        if xap > x_half:
            xap = x_half

        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T2, displs, rates, lt, lk, lsrc, ldst)
        bt = np.empty(cap_bnd, np.float64)
        bk = np.empty(cap_bnd, np.uint8)
        bs = np.empty(cap_bnd, np.int32)
        bd = np.empty(cap_bnd, np.int32)
        nb = _gen_boundary_sorted(seed, x_min, x_max, T2, displs, rates, bt, bk, bs, bd)
        if n < 0 or nb < 0:
            out[case, DU_STATUS] = -1.0
            continue
        mt = np.empty(n + nb, np.float64)
        mk = np.empty(n + nb, np.uint8)
        ms = np.empty(n + nb, np.int32)
        md = np.empty(n + nb, np.int32)
        nm = merge_events(lt, lk, lsrc, ldst, n, bt, bk, bs, bd, nb, mt, mk, ms, md)

        dts = np.empty(max(nm, 1), np.float64)
        dsite = np.empty(max(nm, 1), np.int32)
        dval = np.empty(max(nm, 1), np.uint8)
        s1 = np.empty(max(nm, 1), np.int32)
        s2 = np.empty(max(nm, 1), np.int32)
        s3 = np.empty(max(nm, 1), np.int32)

        occFv = occA0.copy()
        ndfv, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occFv,
                                  0.0, T2, dts, dsite, dval, s1, s2, s3)
        occFvt = occA0.copy()
        apply_deltas_until(dts, dsite, dval, ndfv, occFvt, t_half)

        occFf = occA0.copy()
        ndff, _, _, _, _ = replay(mt, mk, ms, md, nm, x_min, n_sites, occFf,
                                  0.0, T2, dts, dsite, dval, s1, s2, s3)
        occFft = occA0.copy()
        apply_deltas_until(dts, dsite, dval, ndff, occFft, t_half)

        # dual halves on the reversed segment
        rt = np.empty(max(n, 1), np.float64)
        rk = np.empty(max(n, 1), np.uint8)
        rs = np.empty(max(n, 1), np.int32)
        rd = np.empty(max(n, 1), np.int32)
        nr = reverse_segment_events(lt, lk, lsrc, ldst, n, t_half, T2, rt, rk, rs, rd)
        occDv = np.zeros(n_sites, np.bool_)
        occDv[xap - x_min] = True
        replay(rt, rk, rs, rd, nr, x_min, n_sites, occDv,
               0.0, t_half, dts, dsite, dval, s1, s2, s3)
        bseed = derived_log_seed(seed)
        nbr = _gen_boundary_sorted(bseed, x_min, x_max, t_half, displs_m, rates,
                                   bt, bk, bs, bd)
        if nbr < 0:
            out[case, DU_STATUS] = -1.0
            continue
        nmr = merge_events(rt, rk, rs, rd, nr, bt, bk, bs, bd, nbr, mt, mk, ms, md)
        occDf = np.zeros(n_sites, np.bool_)
        occDf[xap - x_min] = True
        replay(mt, mk, ms, md, nmr, x_min, n_sites, occDf,
               0.0, t_half, dts, dsite, dval, s1, s2, s3)

        iv = _any_and(occFvt, occDv)
        iff = _any_and(occFft, occDf)
        holds = (occFv[xap - x_min] != 0) == iv
        cert = (occFv[xap - x_min] == occFf[xap - x_min]) and (iv == iff) \
            and (_any(occFvt) == _any(occFft)) and (_any(occDv) == _any(occDf))
        out[case, DU_STATUS] = 1.0
        out[case, DU_HOLDS] = 1.0 if holds else 0.0
        out[case, DU_CERT] = 1.0 if cert else 0.0


@njit(cache=True)
def _coupled_union_check(t1, s1, v1, n1, t2, s2, v2, n2, t3, s3, v3, n3,
                         occ1, occ2, occ3, mode):
    """Walk three delta streams in lockstep, verifying after every event time
    that occ3 == occ1 | occ2 (mode 0) or occ1 <= occ2 sitewise (mode 1).
    Only sites touched at each time need rechecking. Returns violations."""
    viol = 0
    ns = occ1.shape[0]
    for s in range(ns):
        if mode == 0:
            if occ3[s] != (occ1[s] or occ2[s]):
                viol += 1
        else:
            if occ1[s] and not occ2[s]:
                viol += 1
    i1 = 0
    i2 = 0
    i3 = 0
    touched = np.empty(8, np.int32)
    while i1 < n1 or i2 < n2 or i3 < n3:
        tau = np.inf
        if i1 < n1 and t1[i1] < tau:
            tau = t1[i1]
        if i2 < n2 and t2[i2] < tau:
            tau = t2[i2]
        if i3 < n3 and t3[i3] < tau:
            tau = t3[i3]
        nt = 0
        while i1 < n1 and t1[i1] <= tau:
            occ1[s1[i1]] = v1[i1] == 1
            if nt < 8:
                touched[nt] = s1[i1]
                nt += 1
            i1 += 1
        while i2 < n2 and t2[i2] <= tau:
            occ2[s2[i2]] = v2[i2] == 1
            if nt < 8:
                touched[nt] = s2[i2]
                nt += 1
            i2 += 1
        while i3 < n3 and t3[i3] <= tau:
            occ3[s3[i3]] = v3[i3] == 1
            if nt < 8:
                touched[nt] = s3[i3]
                nt += 1
            i3 += 1
        for k in range(nt):
            s = touched[k]
            if mode == 0:
                if occ3[s] != (occ1[s] or occ2[s]):
                    viol += 1
            else:
                if occ1[s] and not occ2[s]:
                    viol += 1
    return viol


@njit(cache=True, parallel=True)
def coupling_props_batch(master, n_cases, mode, displs, rates, w_half, T,
                         density, cap_log, cap_bnd, out):
    """Exact per-realization coupling properties on random (log, A, B) triples.

    mode 0: additivity  evolve(A | B) == evolve(A) | evolve(B) at every event
    mode 1: monotonicity  A <= B implies xi_A <= xi_B at every event
    mode 2: Markov restart  replaying to T/2 and continuing equals replaying to T
    Boundary policy alternates between vacant and frozen by case parity.
    """
    x_min = -w_half
    x_max = w_half
    n_sites = 2 * w_half + 1
    for case in prange(n_cases):
        seed = derive_seed(uint64(master), uint64(case))
        aseed = _mix64(seed ^ uint64(0xA5EDA11CE5EDA11))
        state, gamma = _stream_init(aseed, uint64(_SITE_OFF), uint64(_DISP_OFF))
        occA0 = np.zeros(n_sites, np.bool_)
        occB0 = np.zeros(n_sites, np.bool_)
        for s in range(n_sites):
            state, u = _next_u01(state, gamma)
            occA0[s] = u < density
            state, u = _next_u01(state, gamma)
            occB0[s] = u < density
        if mode == 1:
            # force A subset of B
            for s in range(n_sites):
                occA0[s] = occA0[s] and occB0[s]

        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T, displs, rates, lt, lk, lsrc, ldst)
        if n < 0:
            out[case] = -1
            continue
        if case % 2 == 1:
            bt = np.empty(cap_bnd, np.float64)
            bk = np.empty(cap_bnd, np.uint8)
            bs = np.empty(cap_bnd, np.int32)
            bd = np.empty(cap_bnd, np.int32)
            nb = _gen_boundary_sorted(seed, x_min, x_max, T, displs, rates, bt, bk, bs, bd)
            if nb < 0:
                out[case] = -1
                continue
            mt = np.empty(n + nb, np.float64)
            mk = np.empty(n + nb, np.uint8)
            ms = np.empty(n + nb, np.int32)
            md = np.empty(n + nb, np.int32)
            n = merge_events(lt, lk, lsrc, ldst, n, bt, bk, bs, bd, nb, mt, mk, ms, md)
            lt, lk, lsrc, ldst = mt, mk, ms, md

        c = max(n, 1)
        d1t = np.empty(c, np.float64)
        d1s = np.empty(c, np.int32)
        d1v = np.empty(c, np.uint8)
        d2t = np.empty(c, np.float64)
        d2s = np.empty(c, np.int32)
        d2v = np.empty(c, np.uint8)
        e1 = np.empty(c, np.int32)
        e2 = np.empty(c, np.int32)
        e3 = np.empty(c, np.int32)

        if mode == 2:
            occ_direct = occA0.copy()
            replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occ_direct,
                   0.0, T, d1t, d1s, d1v, e1, e2, e3)
            occ_two = occA0.copy()
            replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occ_two,
                   0.0, 0.5 * T, d1t, d1s, d1v, e1, e2, e3)
            replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occ_two,
                   0.5 * T, T, d1t, d1s, d1v, e1, e2, e3)
            viol = 0
            for s in range(n_sites):
                if occ_direct[s] != occ_two[s]:
                    viol += 1
            out[case] = viol
            continue

        d3t = np.empty(c, np.float64)
        d3s = np.empty(c, np.int32)
        d3v = np.empty(c, np.uint8)
        occA = occA0.copy()
        nd1, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occA,
                                 0.0, T, d1t, d1s, d1v, e1, e2, e3)
        occB = occB0.copy()
        nd2, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occB,
                                 0.0, T, d2t, d2s, d2v, e1, e2, e3)
        if mode == 0:
            occU = np.zeros(n_sites, np.bool_)
            for s in range(n_sites):
                occU[s] = occA0[s] or occB0[s]
            nd3, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occU,
                                     0.0, T, d3t, d3s, d3v, e1, e2, e3)
            out[case] = _coupled_union_check(d1t, d1s, d1v, nd1, d2t, d2s, d2v, nd2,
                                             d3t, d3s, d3v, nd3,
                                             occA0.copy(), occB0.copy(),
                                             np.logical_or(occA0, occB0), 0)
        else:
            nd3 = 0
            out[case] = _coupled_union_check(d1t, d1s, d1v, nd1, d2t, d2s, d2v, nd2,
                                             d3t, d3s, d3v, nd3,
                                             occA0.copy(), occB0.copy(),
                                             occB0.copy(), 1)


@njit(cache=True, parallel=True)
def oracle_sim_batch(master, n_reps, x_min, x_max, t_grid, displs, rates,
                     occ0, frozen, cap_log, cap_bnd, out):
    """Replay tiny windows and record the state bitmask at each grid time.

    Bit i of the mask is site x_min + i; out has shape (n_reps, len(t_grid)).
    """
    n_sites = x_max - x_min + 1
    T = t_grid[t_grid.shape[0] - 1]
    for rep in prange(n_reps):
        seed = derive_seed(uint64(master), uint64(rep))
        lt = np.empty(cap_log, np.float64)
        lk = np.empty(cap_log, np.uint8)
        lsrc = np.empty(cap_log, np.int32)
        ldst = np.empty(cap_log, np.int32)
        n = _gen_sorted(seed, x_min, x_max, T, displs, rates, lt, lk, lsrc, ldst)
        if n < 0:
            out[rep, 0] = -1
            continue
        if frozen:
            bt = np.empty(cap_bnd, np.float64)
            bk = np.empty(cap_bnd, np.uint8)
            bs = np.empty(cap_bnd, np.int32)
            bd = np.empty(cap_bnd, np.int32)
            nb = _gen_boundary_sorted(seed, x_min, x_max, T, displs, rates, bt, bk, bs, bd)
            if nb < 0:
                out[rep, 0] = -1
                continue
            mt = np.empty(n + nb, np.float64)
            mk = np.empty(n + nb, np.uint8)
            ms = np.empty(n + nb, np.int32)
            md = np.empty(n + nb, np.int32)
            n = merge_events(lt, lk, lsrc, ldst, n, bt, bk, bs, bd, nb, mt, mk, ms, md)
            lt, lk, lsrc, ldst = mt, mk, ms, md
        c = max(n, 1)
        dts = np.empty(c, np.float64)
        dsite = np.empty(c, np.int32)
        dval = np.empty(c, np.uint8)
        e1 = np.empty(c, np.int32)
        e2 = np.empty(c, np.int32)
        e3 = np.empty(c, np.int32)
        occ = occ0.copy()
        nd, _, _, _, _ = replay(lt, lk, lsrc, ldst, n, x_min, n_sites, occ,
                                0.0, T, dts, dsite, dval, e1, e2, e3)
        cur = occ0.copy()
        i = 0
        for g in range(t_grid.shape[0]):
            tg = t_grid[g]
            while i < nd and dts[i] <= tg:
                cur[dsite[i]] = dval[i] == 1
                i += 1
            mask = 0
            for s in range(n_sites):
                if cur[s]:
                    mask |= 1 << s
            out[rep, g] = mask


@njit(cache=True, parallel=True)
def box_death_batch(master, n_reps, v_count, n0, out):
    """Death-mark counts in a v_count-site box over [0, n0], one per replicate,
    drawn from the same per-site rate-1 streams the log generator uses."""
    for rep in prange(n_reps):
        seed = derive_seed(uint64(master), uint64(rep))
        total = 0
        for site in range(v_count):
            state, gamma = _stream_init(seed, uint64(site + _SITE_OFF), uint64(_DISP_OFF))
            t = 0.0
            while True:
                state, u = _next_u01(state, gamma)
                t += -np.log(1.0 - u)
                if t > n0:
                    break
                total += 1
        out[rep] = total

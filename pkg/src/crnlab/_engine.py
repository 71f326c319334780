"""Event-loop kernels for the exact jump-process simulator.

Direct-method Gillespie: draw an exponential holding time from the total
rate, pick a reaction proportionally to its rate, apply the jump.  The
networks of interest here have a handful of reactions, so a linear scan
beats any dependency-graph machinery.

Randomness is consumed from pre-drawn uniform blocks, two draws per event
(holding time, then selection).  The numba kernel and the pure-Python
mirror walk the same blocks in the same order, so the event path is
reproducible from the seed alone, independent of the engine; only libm
rounding of log() may differ between engines, by at most one ulp in the
jump times.

Kernel status codes:
  0 running (block exhausted, caller refills and resumes)
  1 stop rule fired
  2 max_time reached
  3 event budget exhausted
  4 absorbed (total rate zero)
  5 propensity overflow
Stop modes: 0 none, 1 nth event, 2 coordinate comparison (op 0 '>=',
1 '<=', 2 '=='), 3 jump whose reaction is in a mask (counted), 4 downcross
(coordinate goes from >= level to < level, counted).
"""

from __future__ import annotations

import threading

import numpy as np

RUNNING, STOPPED, TIMED_OUT, EXHAUSTED, ABSORBED, OVERFLOWED = 0, 1, 2, 3, 4, 5
STOP_NONE, STOP_NTH, STOP_COORD, STOP_RTYPE, STOP_DOWN = 0, 1, 2, 3, 4

_TINY = 1e-300  # clamp for u=0 so log() stays finite

# One source text, compiled twice (plain exec and numba.njit) so the two
# engines cannot drift apart.  numba caching is off: exec'd code has no
# backing file, so each process pays one JIT compile (~3 s).
_BODY = '''
def _occ_account(x, t0, t1, occ_mode, occ_proj, occ_tbin, occ_box, occ, occ_over, wsum):
    # Deposit the sojourn [t0, t1) of the current state, split exactly
    # across time bins; time past the last bin edge folds into the last bin.
    if t1 <= t0 or occ_mode == 0:
        return
    n = x.shape[0]
    n_tb = occ.shape[0]
    if occ_mode == 1:
        s_idx = x[occ_proj]
        s_ok = 0 <= s_idx < occ.shape[1]
    else:
        flat = 0
        s_ok = True
        for i in range(n):
            if x[i] >= occ_box[i]:
                s_ok = False
                break
            flat = flat * occ_box[i] + x[i]
        s_idx = flat
    b0 = int(t0 / occ_tbin)
    if b0 > n_tb - 1:
        b0 = n_tb - 1
    while t0 < t1:
        edge = (b0 + 1) * occ_tbin
        if b0 == n_tb - 1 or edge >= t1:
            seg_end = t1
        else:
            seg_end = edge
        d = seg_end - t0
        if s_ok:
            occ[b0, s_idx] += d
        else:
            occ_over[b0] += d
        for i in range(n):
            wsum[b0, i] += d * x[i]
        t0 = seg_end
        if b0 < n_tb - 1 and t0 >= edge:
            b0 += 1


def _run(
    x, t, u, ptr, sources, deltas, kappa, max_time, events_left,
    stop_mode, stop_coord, stop_op, stop_level, stop_count, rmask,
    rec_every, rec_t, rec_x, rec_pos,
    grid, grid_x, grid_pos,
    occ_mode, occ_proj, occ_tbin, occ_box, occ, occ_over, wsum,
    events_done,
):
    n_r = sources.shape[0]
    n = sources.shape[1]
    a = np.empty(n_r)
    nu = u.shape[0]
    while True:
        if events_left <= 0:
            return 3, t, ptr, events_done, stop_count, rec_pos, grid_pos
        if ptr + 2 > nu:
            return 0, t, ptr, events_done, stop_count, rec_pos, grid_pos
        total = 0.0
        for r in range(n_r):
            v = kappa[r]
            for i in range(n):
                yi = sources[r, i]
                if yi > 0:
                    xi = x[i]
                    if xi < yi:
                        v = 0.0
                        break
                    for k in range(yi):
                        v *= xi - k
            a[r] = v
            total += v
        if not np.isfinite(total):
            return 5, t, ptr, events_done, stop_count, rec_pos, grid_pos
        if total == 0.0:
            _occ_account(x, t, max_time, occ_mode, occ_proj, occ_tbin, occ_box, occ, occ_over, wsum)
            while grid_pos < grid.shape[0]:
                for i in range(n):
                    grid_x[grid_pos, i] = x[i]
                grid_pos += 1
            return 4, t, ptr, events_done, stop_count, rec_pos, grid_pos
        u1 = u[ptr]
        ptr += 1
        if u1 < 1e-300:
            u1 = 1e-300
        dt = -np.log(u1) / total
        t_next = t + dt
        if t_next > max_time:
            _occ_account(x, t, max_time, occ_mode, occ_proj, occ_tbin, occ_box, occ, occ_over, wsum)
            while grid_pos < grid.shape[0] and grid[grid_pos] <= max_time:
                for i in range(n):
                    grid_x[grid_pos, i] = x[i]
                grid_pos += 1
            ptr += 1  # selection draw is consumed even on a censored last step
            return 2, max_time, ptr, events_done, stop_count, rec_pos, grid_pos
        while grid_pos < grid.shape[0] and grid[grid_pos] < t_next:
            for i in range(n):
                grid_x[grid_pos, i] = x[i]
            grid_pos += 1
        _occ_account(x, t, t_next, occ_mode, occ_proj, occ_tbin, occ_box, occ, occ_over, wsum)
        u2 = u[ptr]
        ptr += 1
        target = u2 * total
        r = 0
        acc = a[0]
        while acc < target and r < n_r - 1:
            r += 1
            acc += a[r]
        if a[r] == 0.0:
            rr = r
            while rr < n_r - 1 and a[rr] == 0.0:
                rr += 1
            if a[rr] == 0.0:
                rr = r
                while rr > 0 and a[rr] == 0.0:
                    rr -= 1
            r = rr
        if stop_mode == 4:
            pre = x[stop_coord]
        else:
            pre = 0
        for i in range(n):
            x[i] += deltas[r, i]
        t = t_next
        events_done += 1
        events_left -= 1
        if rec_every > 0 and events_done % rec_every == 0 and rec_pos < rec_t.shape[0]:
            rec_t[rec_pos] = t
            for i in range(n):
                rec_x[rec_pos, i] = x[i]
            rec_pos += 1
        if stop_mode == 1:
            stop_count -= 1
            if stop_count <= 0:
                return 1, t, ptr, events_done, stop_count, rec_pos, grid_pos
        elif stop_mode == 2:
            v = x[stop_coord]
            if stop_op == 0:
                hit = v >= stop_level
            elif stop_op == 1:
                hit = v <= stop_level
            else:
                hit = v == stop_level
            if hit:
                return 1, t, ptr, events_done, stop_count, rec_pos, grid_pos
        elif stop_mode == 3:
            if rmask[r]:
                stop_count -= 1
                if stop_count <= 0:
                    return 1, t, ptr, events_done, stop_count, rec_pos, grid_pos
        elif stop_mode == 4:
            if pre >= stop_level and x[stop_coord] < stop_level:
                stop_count -= 1
                if stop_count <= 0:
                    return 1, t, ptr, events_done, stop_count, rec_pos, grid_pos
'''


def _compile_python():
    ns = {"np": np}
    exec(compile(_BODY, __file__ + "::python", "exec"), ns)
    return ns["_run"]


def _compile_numba():
    from numba import njit

    ns = {"np": np}
    exec(compile(_BODY, __file__ + "::numba", "exec"), ns)
    occ = njit(cache=False, nogil=True, inline="always")(ns["_occ_account"])
    ns["_occ_account"] = occ
    return njit(cache=False, nogil=True)(ns["_run"])


_py_run = _compile_python()
_numba_kernel = None
_numba_failed = False
_compile_lock = threading.Lock()


def get_kernel(engine: str = "auto"):
    """Return (kernel callable, engine name) for the requested engine."""
    global _numba_kernel, _numba_failed
    if engine == "python":
        return _py_run, "python"
    if engine in ("auto", "numba"):
        if _numba_kernel is None and not _numba_failed:
            with _compile_lock:
                if _numba_kernel is None and not _numba_failed:
                    try:
                        _numba_kernel = _compile_numba()
                    except Exception:
                        _numba_failed = True
        if _numba_kernel is not None:
            return _numba_kernel, "numba"
        if engine == "numba":
            raise RuntimeError("numba engine requested but numba is unavailable")
        return _py_run, "python"
    raise ValueError(f"unknown engine {engine!r}")

"""Compiled streaming kernels for windowed robustness aggregation.

All kernels take sorted timestamps and operate with two-pointer monotonic
deques, so each sample enters and leaves a deque at most once: O(n) total
work independent of the window width. Back-pops use strict comparison, so
tied values are retained.

Output and scratch buffers are caller-allocated; the evaluator recycles them
across calls, which keeps large evaluations free of per-call page faulting.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def window_extremum(times, values, lo, hi, use_min, idx, out, empty):
    """Extremum of ``values`` over the window [t_i + lo, t_i + hi] per index.

    ``idx`` is the deque scratch (int64, size n); ``out`` receives the
    extremum (identity element for empty windows) and ``empty`` the
    empty-window mask. Returns the peak deque occupancy.
    """
    n = times.size
    head = 0
    tail = 0
    j = 0
    peak = 0
    for i in range(n):
        w_lo = times[i] + lo
        w_hi = times[i] + hi
        while j < n and times[j] <= w_hi:
            v = values[j]
            if use_min:
                while tail > head and values[idx[tail - 1]] > v:
                    tail -= 1
            else:
                while tail > head and values[idx[tail - 1]] < v:
                    tail -= 1
            idx[tail] = j
            tail += 1
            j += 1
        while tail > head and times[idx[head]] < w_lo:
            head += 1
        if tail - head > peak:
            peak = tail - head
        if tail == head:
            empty[i] = True
            out[i] = np.inf if use_min else -np.inf
        else:
            empty[i] = False
            out[i] = values[idx[head]]
    return peak


@njit(cache=True)
def window_any(times, flags, lo, hi, out):
    """out[i] = any flag set inside [t_i + lo, t_i + hi]."""
    n = times.size
    # Prefix counts of set flags make each window query O(log n).
    prefix = np.zeros(n + 1, np.int64)
    for k in range(n):
        prefix[k + 1] = prefix[k] + (1 if flags[k] else 0)
    for i in range(n):
        a = np.searchsorted(times, times[i] + lo, side="left")
        b = np.searchsorted(times, times[i] + hi, side="right")
        out[i] = b > a and prefix[b] - prefix[a] > 0


@njit(cache=True)
def until_sweep(times, rho1, rho2, lo, hi, out):
    """rho of (left until[lo,hi] right) at every index.

    out[i] = sup over witnesses t_j in [t_i+lo, t_i+hi] of
             min(rho2[j], inf of rho1 over [t_i, t_j]).
    The running infimum over rho1 removes the inner loop; empty witness
    windows yield -inf.
    """
    n = times.size
    for i in range(n):
        w_lo = times[i] + lo
        w_hi = times[i] + hi
        run = np.inf
        best = -np.inf
        for j in range(i, n):
            if times[j] > w_hi:
                break
            if rho1[j] < run:
                run = rho1[j]
            if times[j] >= w_lo:
                cand = rho2[j] if rho2[j] < run else run
                if cand > best:
                    best = cand
        out[i] = best


@njit(cache=True)
def since_sweep(times, rho1, rho2, lo, hi, out):
    """rho of (left since[lo,hi] right): witnesses in [t_i-hi, t_i-lo],
    with rho1 held from the witness forward to t_i."""
    n = times.size
    for i in range(n):
        w_lo = times[i] - hi
        w_hi = times[i] - lo
        run = np.inf
        best = -np.inf
        for j in range(i, -1, -1):
            if times[j] < w_lo:
                break
            if rho1[j] < run:
                run = rho1[j]
            if times[j] <= w_hi:
                cand = rho2[j] if rho2[j] < run else run
                if cand > best:
                    best = cand
        out[i] = best

"""Compiled inner loops. All take 0-based marks and sorted, strictly increasing times."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def loglik_terms(times, marks, mu, alpha, beta, horizon):
    """Per-event ``log lambda_{m_k}(t_k)`` and per-dimension compensators.

    State ``E[i, j]`` holds the decayed excitation of dimension ``i`` from past
    events of ``j``; each event costs O(d^2).  The first returned value is
    ``-1`` when all intensities are positive, otherwise the index of the first
    event with nonpositive intensity.
    """
    d = mu.shape[0]
    n = times.shape[0]
    E = np.zeros((d, d))
    logs = np.empty(n)
    bad = -1
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        dt = t - t_prev
        for i in range(d):
            for j in range(d):
                if alpha[i, j] > 0.0:
                    E[i, j] *= np.exp(-beta[i, j] * dt)
        m = marks[k]
        lam = mu[m]
        for j in range(d):
            lam += E[m, j]
        if lam <= 0.0:
            if bad < 0:
                bad = k
            logs[k] = -np.inf
        else:
            logs[k] = np.log(lam)
        for i in range(d):
            E[i, m] += alpha[i, m]
        t_prev = t
    comp = mu * horizon
    for k in range(n):
        m = marks[k]
        tail = horizon - times[k]
        for i in range(d):
            if alpha[i, m] > 0.0:
                comp[i] += alpha[i, m] / beta[i, m] * (1.0 - np.exp(-beta[i, m] * tail))
    return bad, logs, comp


@njit(cache=True, nogil=True)
def decayed_sums(times, marks, d, beta, target):
    """``R[k, j] = sum_{l < k, m_l = j} exp(-beta (t_k - t_l))`` at events of ``target``.

    Uses the one-step recursion ``R <- exp(-beta dt) R`` plus a unit jump in the
    source column after each event.  ``target < 0`` records every event.
    """
    n = times.shape[0]
    count = 0
    for k in range(n):
        if target < 0 or marks[k] == target:
            count += 1
    out = np.empty((count, d))
    state = np.zeros(d)
    t_prev = 0.0
    row = 0
    for k in range(n):
        f = np.exp(-beta * (times[k] - t_prev))
        for j in range(d):
            state[j] *= f
        if target < 0 or marks[k] == target:
            for j in range(d):
                out[row, j] = state[j]
            row += 1
        state[marks[k]] += 1.0
        t_prev = times[k]
    return out


@njit(cache=True, nogil=True)
def compensator_at_events(times, marks, mu, alpha, beta):
    """``Lambda_{m_k}(t_k)``: integrated intensity of each event's own dimension."""
    d = mu.shape[0]
    n = times.shape[0]
    S = np.zeros((d, d))  # decayed sum of exp(-beta_ij (t - t_l)) over past j events
    counts = np.zeros(d)
    out = np.empty(n)
    t_prev = 0.0
    for k in range(n):
        t = times[k]
        dt = t - t_prev
        for i in range(d):
            for j in range(d):
                if alpha[i, j] > 0.0:
                    S[i, j] *= np.exp(-beta[i, j] * dt)
        m = marks[k]
        lam_int = mu[m] * t
        for j in range(d):
            if alpha[m, j] > 0.0:
                lam_int += alpha[m, j] / beta[m, j] * (counts[j] - S[m, j])
        out[k] = lam_int
        for i in range(d):
            S[i, m] += 1.0
        counts[m] += 1.0
        t_prev = t
    return out


@njit(cache=True, nogil=True)
def thinning(mu, alpha, beta, horizon, seed, capacity):
    """Ogata thinning on the exact exponential intensity.

    Between events the total intensity only decays, so its value right after
    the last accepted event bounds it until the next one.  Returns the number
    of events written, or ``-1`` when ``capacity`` was too small.
    """
    np.random.seed(seed)
    d = mu.shape[0]
    E = np.zeros((d, d))
    lam = np.empty(d)
    times = np.empty(capacity)
    marks = np.empty(capacity, dtype=np.int64)
    n = 0
    t = 0.0
    last = 0.0
    bound = 0.0
    for i in range(d):
        bound += mu[i]
    while True:
        if bound <= 0.0:
            break
        w = np.random.exponential(1.0 / bound)
        t_new = t + w
        if t_new > horizon:
            break
        for i in range(d):
            for j in range(d):
                if alpha[i, j] > 0.0:
                    E[i, j] *= np.exp(-beta[i, j] * w)
        t = t_new
        total = 0.0
        for i in range(d):
            lam[i] = mu[i]
            for j in range(d):
                lam[i] += E[i, j]
            total += lam[i]
        u = np.random.random() * bound
        bound = total
        if u > total:
            continue
        if t <= last:
            # floating-point tie with the previous event: redraw the gap
            continue
        acc = 0.0
        m = d - 1
        for i in range(d):
            acc += lam[i]
            if u <= acc:
                m = i
                break
        if n == capacity:
            return -1, times, marks
        times[n] = t
        marks[n] = m
        n += 1
        last = t
        for i in range(d):
            if alpha[i, m] > 0.0:
                E[i, m] += alpha[i, m]
                bound += alpha[i, m]
    return n, times, marks

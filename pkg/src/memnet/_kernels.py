"""Compiled Euler integrators for the switching model.

Writes go through ``integrate``. ``predict_chains`` evaluates many pulse
options at once but repeats the same per-step arithmetic, so its outcomes are
bit-identical to applying each option.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def step_count(width, h):
    n = int(np.floor(width / h))
    rem = width - n * h
    # width/h can land a hair under an integer; absorb that into a full step
    if rem >= h * (1.0 - 1e-9):
        n += 1
        rem = 0.0
    if rem <= h * 1e-9:
        rem = 0.0
    return n, rem


@njit(cache=True)
def integrate(R, gain, bound, positive, width, h, floor):
    if positive:
        if R >= bound:
            return R
    elif R < bound:
        return R
    n, rem = step_count(width, h)
    for k in range(n + 1):
        dt = h if k < n else rem
        if dt == 0.0:
            break
        if positive:
            d = bound - R
            if d <= 0.0:
                break
            R = R + dt * gain * d * d
            if R > bound:
                R = bound
        else:
            d = R - bound
            if d <= 0.0:
                break
            R = R + dt * gain * d * d
            if R < bound:
                R = bound
        if R < floor:
            R = floor
    return R


@njit(cache=True)
def integrate_many(Rs, gain, bound, positive, width, h, floor):
    out = np.empty_like(Rs)
    for i in range(Rs.shape[0]):
        out[i] = integrate(Rs[i], gain, bound, positive, width, h, floor)
    return out


@njit(cache=True)
def _finish(R, gain, bound, positive, rem, stopped, floor):
    """Remainder (partial) step exactly as the tail of ``integrate``."""
    if stopped or rem == 0.0:
        return R
    if positive:
        d = bound - R
        if d <= 0.0:
            return R
        R = R + rem * gain * d * d
        if R > bound:
            R = bound
    else:
        d = R - bound
        if d <= 0.0:
            return R
        R = R + rem * gain * d * d
        if R < bound:
            R = bound
    if R < floor:
        R = floor
    return R


@njit(cache=True)
def predict_chains(R0, gains, bounds, positives, opt_chain, opt_n, opt_rem, order, h, floor):
    """Outcome of every option, integrating each distinct (gain, bound) chain once.

    Options sharing a chain differ only in width, so the chain is advanced in
    full steps and each option is read off (plus its partial step) when its
    step count is reached. All chains advance together in a branch-free
    update that LLVM can vectorise; for a live chain it performs the same
    float operations as ``integrate`` (a zero gap adds exactly zero, which is
    where ``integrate`` would stop), so results are bit-identical.
    """
    m = gains.shape[0]
    R = np.full(m, R0)
    hg = np.empty(m)
    live = np.empty(m, dtype=np.bool_)
    for c in range(m):
        hg[c] = h * gains[c]
        live[c] = R0 < bounds[c] if positives[c] else R0 >= bounds[c]
    out = np.empty(opt_chain.shape[0])
    nxt = 0
    k = 0
    total = order.shape[0]
    while True:
        while nxt < total and opt_n[order[nxt]] == k:
            i = order[nxt]
            c = opt_chain[i]
            out[i] = _finish(R[c], gains[c], bounds[c], positives[c], opt_rem[i], not live[c], floor)
            nxt += 1
        if nxt == total:
            break
        # advance to the next checkpoint in one tight loop
        stop = opt_n[order[nxt]]
        for _ in range(k, stop):
            for c in range(m):
                r = R[c]
                d = bounds[c] - r
                rn = r + hg[c] * d * d
                rn = min(rn, bounds[c]) if positives[c] else max(rn, bounds[c])
                rn = max(rn, floor)
                R[c] = rn if live[c] else r
        k = stop
    return out

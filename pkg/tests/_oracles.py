"""Brute-force reference computations, independent of the library DP paths.

Everything here enumerates renewal configurations directly (exponential in
the system size) and is only ever run at tiny sizes.
"""

import math

import numpy as np


def free_configurations(kernel, n):
    """All subsets of [1, n] realizable as the visited set of a free renewal
    trajectory, with their probabilities.  Yields (points_tuple, prob)."""
    K = kernel.probs
    H = kernel.horizon
    surv = kernel.survival()
    tail = kernel.tail_mass

    def survprob(m):
        return surv[m] if m <= H else tail

    for mask in range(1 << n):
        pts = [i + 1 for i in range(n) if mask >> i & 1]
        prob = 1.0
        prev = 0
        ok = True
        for p in pts:
            gap = p - prev
            if gap > H:
                ok = False
                break
            prob *= K[gap - 1]
            prev = p
        if not ok:
            continue
        yield tuple(pts), prob * survprob(n - prev)


def set_restricted_value(params, env_values, active, kernel):
    """Sum over free configurations with disorder factors on active sites."""
    active = set(int(a) for a in active)
    total = 0.0
    for pts, prob in free_configurations(kernel, params.n):
        weight = 1.0
        for p in pts:
            if p in active:
                weight *= 1.0 + params.beta * env_values[p - 1]
        total += prob * weight
    return total


def gap_truncated_value(intersection, L, n, env_values, beta, h=0.0):
    """Sum over gap-capped intersection-renewal paths pinned at n."""
    kt = intersection.ktilde
    if n == 0:
        return 1.0 + beta * env_values[0]
    total = 0.0

    def walk(pos, weight):
        nonlocal total
        if pos == n:
            total += weight
            return
        for gap in range(1, min(L, n - pos) + 1):
            if gap <= len(kt):
                walk(pos + gap, weight * kt[gap - 1]
                     * (1.0 + beta * env_values[pos + gap]) * math.exp(h))

    walk(0, 1.0 + beta * env_values[0])
    return total


def penalized_value(eta1, eta2, j, kernel):
    """Sum over pinned configurations of exp(-eta1 #off - eta2 #on)."""
    K = kernel.probs
    H = kernel.horizon
    total = 0.0
    for mask in range(1 << (j - 1)):
        pts = [i + 1 for i in range(j - 1) if mask >> i & 1] + [j]
        prob = 1.0
        prev = 0
        ok = True
        for p in pts:
            gap = p - prev
            if gap > H:
                ok = False
                break
            prob *= K[gap - 1]
            prev = p
        if not ok:
            continue
        on = len(pts)
        total += prob * math.exp(-eta2 * on - eta1 * (j - on))
    return total


def pair_second_moment(kernel, n, chi):
    """E over two independent free trajectories of exp(chi * shared points),
    vectorized over all 4**n configuration pairs."""
    masks = []
    probs = []
    for pts, prob in free_configurations(kernel, n):
        mask = 0
        for p in pts:
            mask |= 1 << (p - 1)
        masks.append(mask)
        probs.append(prob)
    masks = np.array(masks, dtype=np.uint64)
    probs = np.array(probs)
    shared = np.bitwise_count(masks[:, None] & masks[None, :])
    return float(probs @ np.exp(chi * shared) @ probs)

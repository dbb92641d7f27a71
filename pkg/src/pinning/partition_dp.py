"""Exact quenched partition functions by dynamic programming.

The constrained partition function obeys the convolution recursion

    Z(0) = 1,   Z(n) = w(n) * sum_{m<n} Z(m) K(n - m),

with site weight ``w(n) = exp(h) * (1 + beta * omega_n)``; the free-boundary
variant sums ``Z(m) * P[first jump > N - m]`` over the last renewal point m.
Values span thousands of orders of magnitude at desk sizes, so the recursion
runs in a scaled linear domain: every replica column carries a running
exponent offset, the live convolution window is renormalized to unit maximum
every few steps, and per-index logs are recorded as they are produced.  The
inner loop is one BLAS matrix-vector product per lattice site, which is what
makes replica-vectorized Monte Carlo affordable.

A brute-force enumeration over renewal configurations (N <= 16) provides the
independent oracle every DP variant is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .disorder import EnvironmentSample
from .renewal import IntersectionKernel, RenewalKernel, RenewalMassTable, mass_table

_RESCALE_EVERY = 128
ENUMERATION_LIMIT = 16


@dataclass(frozen=True)
class PolymerParams:
    """Coupling strength, pinning reward, and system size.

    beta < 1 keeps every site weight positive (the disorder is >= -1)."""

    beta: float
    h: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if self.n < 1:
            raise ValueError("n must be a positive integer")


@dataclass(frozen=True)
class PartitionResult:
    log_z_constrained: float
    log_z_free: float
    expected_contacts: float

    def __post_init__(self):
        # the free sum contains the constrained term with survival factor 1
        if self.log_z_free < self.log_z_constrained - 1e-9:
            raise AssertionError("free-boundary partition below the constrained one")
        if not -1e-9 <= self.expected_contacts:
            raise AssertionError("negative expected contacts")


def _forward_logz(weights: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Scaled-linear forward pass.

    weights: (N+1, R) positive site weights, row 0 ignored (treated as 1).
    K:       (H,) kernel probabilities, K[i] = K(i+1).
    Returns log Z(n) per replica as an (N+1, R) array.
    """
    n_rows, R = weights.shape
    N = n_rows - 1
    H = len(K)
    Kr = np.ascontiguousarray(K[::-1])
    z = np.empty((N + 1, R))
    z[0] = 1.0
    logz = np.empty((N + 1, R))
    logz[0] = 0.0
    offset = np.zeros(R)
    for n in range(1, N + 1):
        w = min(n, H)
        s = Kr[H - w:] @ z[n - w:n]
        zn = s * weights[n]
        z[n] = zn
        logz[n] = np.log(zn) + offset
        if n % _RESCALE_EVERY == 0 and n < N:
            lo = max(0, n + 1 - H)
            m = z[lo: n + 1].max(axis=0)
            if not np.all(np.isfinite(m)) or np.any(m <= 0):
                raise FloatingPointError(
                    f"non-finite partition values at n={n}; aborting DP"
                )
            z[lo: n + 1] /= m
            offset += np.log(m)
    if not np.all(np.isfinite(logz[N])):
        raise FloatingPointError("non-finite log partition at the endpoint")
    return logz


def _site_weights(params: PolymerParams, env_values: np.ndarray) -> np.ndarray:
    """Time-major (N+1, R) weights from (R, N) or (N,) environment values."""
    vals = np.atleast_2d(np.asarray(env_values, dtype=float))
    if vals.shape[1] < params.n:
        raise ValueError("environment shorter than the system size")
    w = np.empty((params.n + 1, vals.shape[0]))
    w[0] = 1.0
    w[1:] = math.exp(params.h) * (1.0 + params.beta * vals[:, : params.n].T)
    return w


def _log_survival(kernel: RenewalKernel, N: int) -> np.ndarray:
    """log P[first jump > j] for j = 0..N (tail mass persists beyond horizon)."""
    surv = kernel.survival()
    out = np.empty(N + 1)
    m = min(N, kernel.horizon)
    with np.errstate(divide="ignore"):
        out[: m + 1] = np.log(surv[: m + 1])
        if N > kernel.horizon:
            out[kernel.horizon + 1:] = (
                np.log(kernel.tail_mass) if kernel.tail_mass > 0 else -np.inf
            )
    return out


def log_partition_batch(params: PolymerParams, env_values: np.ndarray,
                        kernel: RenewalKernel):
    """log Z constrained and free for a batch of environments.

    env_values has shape (R, N) (one replica per row).  Returns a pair of
    (R,) arrays.  This is the workhorse the Monte Carlo estimators call.
    """
    w = _site_weights(params, env_values)
    logz = _forward_logz(w, kernel.probs)
    logsurv = _log_survival(kernel, params.n)
    log_zf = logsumexp(logz + logsurv[::-1, None], axis=0)
    return logz[params.n], log_zf


def partition(params: PolymerParams, env: EnvironmentSample,
              kernel: RenewalKernel) -> PartitionResult:
    """Constrained and free-boundary log partition values plus the expected
    number of renewal points under the constrained polymer measure.

    Contact statistics come from the forward-backward pinch
    P[m in tau] = Z(0..m) * Z(m..N) / Z(N), with the backward table obtained
    by running the same forward recursion on the reversed weight sequence.
    """
    N = params.n
    w = _site_weights(params, env.values)
    logz = _forward_logz(w, kernel.probs)
    logsurv = _log_survival(kernel, N)
    log_zf = float(logsumexp(logz + logsurv[::-1, None], axis=0)[0])
    log_zc = float(logz[N, 0])

    # backward table: D(m) = w(m) * B(m) satisfies the forward recursion on
    # reversed weights, seeded by w(N)
    w_rev = np.empty_like(w)
    w_rev[0] = 1.0
    w_rev[1:] = w[N - 1:: -1]
    logd = _forward_logz(w_rev, kernel.probs) + math.log(w[N, 0])
    with np.errstate(divide="ignore"):
        log_w_sites = np.log(w[1:, 0])
    log_p = logz[1:, 0] + logd[N - 1:: -1, 0] - log_w_sites - log_zc
    contacts = float(np.exp(np.minimum(log_p, 0.0)).sum())
    return PartitionResult(log_z_constrained=log_zc, log_z_free=log_zf,
                           expected_contacts=contacts)


def exp_form_equivalence(params: PolymerParams, env: EnvironmentSample,
                         kernel: RenewalKernel) -> bool:
    """Recompute the DP with weights exp(h + log1p(beta*omega)) and require
    agreement with the product form to 1e-12 in the log domain."""
    N = params.n
    w = _site_weights(params, env.values)
    w_exp = np.empty_like(w)
    w_exp[0] = 1.0
    w_exp[1:] = np.exp(params.h + np.log1p(params.beta * env.values[:N, None]))
    logsurv = _log_survival(kernel, N)
    results = []
    for weights in (w, w_exp):
        logz = _forward_logz(weights, kernel.probs)
        results.append((logz[N, 0], float(logsumexp(logz + logsurv[::-1, None], axis=0)[0])))
    (zc1, zf1), (zc2, zf2) = results
    tol = lambda a, b: abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))
    return tol(zc1, zc2) and tol(zf1, zf2)


def enumerate_partition(params: PolymerParams, env: EnvironmentSample,
                        kernel: RenewalKernel) -> PartitionResult:
    """Brute-force oracle: sum over all renewal configurations on [0, N].

    Exponential in N and deliberately independent of the DP code path;
    refuses N beyond 16.
    """
    N = params.n
    if N > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration oracle only runs for N <= {ENUMERATION_LIMIT}")
    K = kernel.probs
    H = kernel.horizon
    surv = kernel.survival()
    tail = kernel.tail_mass

    def kprob(gap: int) -> float:
        return K[gap - 1] if gap <= H else 0.0

    def survprob(m: int) -> float:
        return surv[m] if m <= H else tail

    w = np.concatenate([[1.0], math.exp(params.h) * (1.0 + params.beta * env.values[:N])])
    z_c = 0.0
    weighted_contacts = 0.0
    z_f = survprob(N)  # empty configuration
    for mask in range(1 << (N - 1)):
        pts = [i + 1 for i in range(N - 1) if mask >> i & 1]
        # constrained: configuration visits pts + [N]
        prob = 1.0
        weight = 1.0
        prev = 0
        for p in pts:
            prob *= kprob(p - prev)
            weight *= w[p]
            prev = p
        term = prob * kprob(N - prev) * weight * w[N]
        z_c += term
        weighted_contacts += term * (len(pts) + 1)
        # free boundary: pts alone is a configuration, survive past N
        if pts:
            z_f += prob * weight * survprob(N - pts[-1])
    z_f += z_c  # configurations whose last point is exactly N
    return PartitionResult(
        log_z_constrained=math.log(z_c),
        log_z_free=math.log(z_f),
        expected_contacts=weighted_contacts / z_c,
    )


def set_restricted_partition(params: PolymerParams, tilted_env: EnvironmentSample,
                             points, kernel: RenewalKernel) -> float:
    """Free-boundary partition value when disorder acts only on a quenched
    point set.

    The walk collects a factor (1 + beta * omega~_p) each time it steps on an
    active point p > 0.  Transitions between consecutive *visited* active
    points use first-passage probabilities that avoid the intermediate active
    points, computed by the exact subtraction recursion
    v(i -> j) = u(p_j - p_i) - sum_{i<l<j} v(i -> l) u(p_j - p_l).
    Defined at h = 0 only.
    """
    pts = np.asarray(points, dtype=np.int64)
    if len(pts) == 0 or pts[0] != 0:
        raise ValueError("points must start at 0")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be strictly increasing")
    if pts[-1] > params.n:
        raise ValueError("points must lie inside [0, n]")
    if params.h != 0.0:
        raise ValueError("the set-restricted partition is defined at h = 0")
    u = mass_table(kernel, params.n).u
    J = len(pts)
    v = np.zeros((J, J))
    for i in range(J):
        for j in range(i + 1, J):
            corr = v[i, i + 1: j] @ u[pts[j] - pts[i + 1: j]] if j > i + 1 else 0.0
            v[i, j] = u[pts[j] - pts[i]] - corr
    phi = 1.0 + params.beta * np.concatenate([[0.0], tilted_env.values])[pts]
    a = np.zeros(J)
    a[0] = 1.0
    for j in range(1, J):
        a[j] = (a[:j] @ v[:j, j]) * phi[j]
    tail = np.maximum(1.0 - v.sum(axis=1), 0.0)
    return float(a @ tail)


def truncated_gap_partition(intersection: IntersectionKernel, L: int, n: int,
                            tilted_env: EnvironmentSample, beta: float,
                            h: float = 0.0) -> float:
    """Constrained partition value on the intersection renewal with every gap
    capped at L.

    The origin always carries its disorder factor (1 + beta * omega~_0); the
    reward exp(h) applies to renewal points in [1, n] only.
    """
    prof = truncated_gap_profile(intersection, L, n,
                                 tilted_env.values[None, : n + 1], beta, h)
    return float(prof[n, 0])


def truncated_gap_profile(intersection: IntersectionKernel, L: int, n_max: int,
                          env_values: np.ndarray, beta: float,
                          h: float = 0.0) -> np.ndarray:
    """All values n = 0..n_max of the gap-capped partition, batched over
    environments.  env_values has shape (R, n_max + 1) (site 0 included)."""
    if L < 1 or L > len(intersection.ktilde):
        raise ValueError("need 1 <= L <= intersection table length")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    kt = intersection.ktilde[:L]
    ktr = np.ascontiguousarray(kt[::-1])
    vals = np.atleast_2d(np.asarray(env_values, dtype=float))
    w = math.exp(h) * (1.0 + beta * vals.T)  # (n_max+1, R)
    g = np.empty((n_max + 1, vals.shape[0]))
    g[0] = 1.0 + beta * vals[:, 0]
    for j in range(1, n_max + 1):
        m = min(j, L)
        g[j] = (ktr[L - m:] @ g[j - m: j]) * w[j]
    return g


def penalized_annealed_partition(eta1: float, eta2: float, j: int,
                                 kernel: RenewalKernel,
                                 mass: RenewalMassTable | None = None) -> float:
    """Averaged partition value under the peak-damping change of measure:
    every site in [1, j] pays exp(-eta1) off renewal points and exp(-eta2) on
    them, with the endpoint pinned.

    Equals exp(-eta1 * j) times the homogeneous constrained partition at
    reward eta1 - eta2.  When eta2 >= eta1 >= 0 the value is at most u(j);
    passing the mass table enables that cross-check.
    """
    if not (math.isfinite(eta1) and math.isfinite(eta2)):
        raise ValueError("eta1 and eta2 must be finite")
    if j < 1:
        raise ValueError("j must be a positive integer")
    K = kernel.probs
    H = kernel.horizon
    Kr = np.ascontiguousarray(K[::-1])
    w = math.exp(eta1 - eta2)
    c = np.zeros(j + 1)
    c[0] = 1.0
    for i in range(1, j + 1):
        m = min(i, H)
        c[i] = (Kr[H - m:] @ c[i - m: i]) * w
    value = math.exp(-eta1 * j) * c[j]
    if mass is not None and eta2 >= eta1 >= 0 and j < len(mass.u):
        assert value <= mass.u[j] * (1.0 + 1e-9)
    return value

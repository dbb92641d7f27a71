"""Monte Carlo and exact estimators for the disordered pinning model.

Everything here reduces to replica-parallel evaluations of the partition DP
plus deterministic reductions.  Replica r of an estimator draws its
environment from the counter-based stream ``(seed, domain, r)``, so results
are independent of batching and worker layout.

Heavy-tailed quantities (fractional moments, anything with order close to
the disorder tail index) are estimated by median of means: the sample is cut
into deterministic contiguous blocks and the median of the block means is
reported, with sign-test order-statistic confidence bounds.  Certificates
always consume the conservative side of those bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .disorder import (DisorderSpec, EnvironmentSample, expect, moment_1plusq,
                       penalty_functionals, sample_env, tilt_sample,
                       TruncationContext)
from .partition_dp import (PolymerParams, log_partition_batch,
                        truncated_gap_profile)
from .renewal import (IntersectionKernel, RenewalKernel, RenewalMassTable,
                      homogeneous_free_energy, mass_table, sample_path)

DEFAULT_BLOCKS = 8
# block count for fractional moments: ceil(2 log(1/0.05))
FRACTIONAL_BLOCKS = math.ceil(2.0 * math.log(1.0 / 0.05))


# ---------------------------------------------------------------------------
# median of means


@dataclass(frozen=True)
class MomResult:
    estimate: float
    ci_low: float
    ci_high: float
    blocks: int


def median_of_means(samples: np.ndarray, blocks: int = DEFAULT_BLOCKS) -> MomResult:
    """Median of block means with sign-test confidence bounds.

    Blocks are contiguous and deterministic (no permutation; the samples are
    already exchangeable).  The interval [min, max] of the block means covers
    the estimand with probability at least 1 - 2**(1-blocks), i.e. >= 95%
    two-sided (and >= 97.5% one-sided) for blocks >= 6.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < blocks:
        raise ValueError("need at least one sample per block")
    means = np.array([b.mean() for b in np.array_split(samples, blocks)])
    return MomResult(estimate=float(np.median(means)), ci_low=float(means.min()),
                     ci_high=float(means.max()), blocks=blocks)


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    n: int
    point_estimate: float
    ci_low: float
    ci_high: float
    replicas: int
    method: str

    def __post_init__(self):
        if not self.ci_low <= self.point_estimate <= self.ci_high:
            raise AssertionError("confidence bounds do not bracket the estimate")


@dataclass(frozen=True)
class FreeEnergyEstimate:
    beta: float
    h: float
    n: int
    value: float        # penalized finite-volume lower bound on the free energy
    stderr: float
    annealed_value: float
    raw_mean: float     # (1/N) mean log Z^f, without the log N / N penalty


@dataclass(frozen=True)
class RhoCertificate:
    beta: float
    h: float
    k: int
    theta: float
    a_values: np.ndarray     # upper confidence bounds on E[(Z_{j,h})^theta]
    rho_upper: float
    certified: bool

    def __post_init__(self):
        a = np.asarray(self.a_values, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "a_values", a)


@dataclass(frozen=True)
class ExponentFit:
    xs: np.ndarray
    ys: np.ndarray
    slope: float
    intercept: float
    stderr: float
    window: str
    residuals: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class CopachiResult:
    holds: bool
    lhs: float   # log P[both copies meet again within N]
    rhs: float   # -2 chi

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class FracmomentProfile:
    ok: bool
    js: np.ndarray
    holder_bound: np.ndarray   # exact, no Monte Carlo
    target: np.ndarray
    mc_a: np.ndarray           # median-of-means point estimates of A_j
    mc_a_low: np.ndarray
    mc_a_high: np.ndarray

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class PaleyZygmundResult:
    holds: bool
    lhs: float
    rhs: float

    def __bool__(self) -> bool:
        return self.holds


@dataclass(frozen=True)
class IrrelevanceCertificate:
    term1: float
    term2: float
    product: float
    certified: bool
    term1_tail_fraction: float   # extrapolated (heuristic) share of term1
    term2_tail_fraction: float   # extrapolated (heuristic) share of term2


# ---------------------------------------------------------------------------
# replica plumbing


def _env_rows(spec: DisorderSpec, replicas: int, n: int, seed: int,
              first: int = 0, beta_tilt: float | None = None) -> np.ndarray:
    rows = np.empty((replicas, n))
    for r in range(replicas):
        if beta_tilt is None:
            rows[r] = sample_env(spec, n, seed, first + r).values
        else:
            rows[r] = tilt_sample(spec, beta_tilt, n, seed, first + r).values
    return rows


def _batched_free_logz(kernel: RenewalKernel, spec: DisorderSpec,
                       params: PolymerParams, replicas: int, seed: int,
                       also_h_zero: bool = False):
    """log Z^f per replica; optionally also at h = 0 on the same disorder."""
    n = params.n
    batch = max(16, min(replicas, int(2.0e7 // (n + 1))))
    out = np.empty(replicas)
    out0 = np.empty(replicas) if also_h_zero else None
    p0 = PolymerParams(beta=params.beta, h=0.0, n=n) if also_h_zero else None
    done = 0
    while done < replicas:
        m = min(batch, replicas - done)
        envs = _env_rows(spec, m, n, seed, first=done)
        _, logzf = log_partition_batch(params, envs, kernel)
        out[done: done + m] = logzf
        if also_h_zero:
            _, logzf0 = log_partition_batch(p0, envs, kernel)
            out0[done: done + m] = logzf0
        done += m
    return (out, out0) if also_h_zero else out


# ---------------------------------------------------------------------------
# free energy


def quenched_free_energy(kernel: RenewalKernel, spec: DisorderSpec, beta: float,
                         h: float, N: int, replicas: int, seed: int) -> FreeEnergyEstimate:
    """Finite-volume lower-bound estimator of the quenched free energy.

    value = (1/N) mean log Z^f - C * log(N)/N with the conservative constant
    C = alpha + 2; raw_mean keeps the unpenalized average.  The annealed
    value is the homogeneous free energy at the same reward (the disorder has
    mean zero, so annealing removes it entirely).
    """
    if replicas < 30:
        raise ValueError("need at least 30 replicas for a usable stderr")
    params = PolymerParams(beta=beta, h=h, n=N)
    logzf = _batched_free_logz(kernel, spec, params, replicas, seed)
    per_rep = logzf / N
    raw_mean = float(per_rep.mean())
    stderr = float(per_rep.std(ddof=1) / math.sqrt(replicas))
    penalty = (kernel.alpha + 2.0) * math.log(N) / N
    return FreeEnergyEstimate(beta=beta, h=h, n=N, value=raw_mean - penalty,
                              stderr=stderr,
                              annealed_value=homogeneous_free_energy(kernel, h),
                              raw_mean=raw_mean)


def free_energy_excess(kernel: RenewalKernel, spec: DisorderSpec, beta: float,
                       h: float, N: int, replicas: int, seed: int):
    """Coupled estimator (1/N) mean[log Z^f_{N,h} - log Z^f_{N,0}].

    Consistent for the free energy when h is off criticality (the h = 0 term
    vanishes at rate 1/N) and much lower-variance than the raw average
    because both partition values share the same disorder.
    Returns (mean, stderr).
    """
    params = PolymerParams(beta=beta, h=h, n=N)
    logzf, logzf0 = _batched_free_logz(kernel, spec, params, replicas, seed,
                                       also_h_zero=True)
    diff = (logzf - logzf0) / N
    return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(max(replicas, 2)))


def annealed_log_partition(kernel: RenewalKernel, N: int, h: float) -> tuple[float, float]:
    """Exact finite-N homogeneous values (log Z_c, log Z^f) at reward h."""
    params = PolymerParams(beta=0.0, h=h, n=N)
    zeros = np.zeros((1, N))
    lzc, lzf = log_partition_batch(params, zeros, kernel)
    return float(lzc[0]), float(lzf[0])


# ---------------------------------------------------------------------------
# moments


def fractional_moment(kernel: RenewalKernel, spec: DisorderSpec, p: float,
                      beta: float, h: float, N: int, replicas: int, seed: int,
                      force: bool = False) -> MomentEstimate:
    """Median-of-means estimate of E[(Z^f_{N,h})^p].

    Orders at or above the disorder tail index have no finite moment and are
    refused unless forced.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    if p >= spec.gamma:
        if not force:
            raise ValueError(
                f"moment order p={p} >= gamma={spec.gamma} is infinite; "
                "pass force=True to evaluate the diverging estimate anyway"
            )
        warnings.warn("estimating an infinite moment: values will not stabilize")
    params = PolymerParams(beta=beta, h=h, n=N)
    logzf = _batched_free_logz(kernel, spec, params, replicas, seed)
    samples = np.exp(p * logzf)
    mom = median_of_means(samples, blocks=FRACTIONAL_BLOCKS)
    return MomentEstimate(p=p, n=N, point_estimate=mom.estimate, ci_low=mom.ci_low,
                          ci_high=mom.ci_high, replicas=replicas,
                          method="median_of_means")


# ---------------------------------------------------------------------------
# truncated-environment second moment


def exact_second_moment_truncated(ctx: TruncationContext,
                                  intersection: IntersectionKernel, N: int) -> float:
    """E[(Z^f at the capped environment and compensating reward)^2], computed
    exactly as a homogeneous pinning value on the intersection renewal with
    per-contact weight exp(chi)."""
    kt = intersection.ktilde
    if N > len(kt):
        raise ValueError("intersection table shorter than N")
    w = math.exp(ctx.chi)
    ktr = np.ascontiguousarray(kt[::-1])
    L = len(kt)
    b = np.zeros(N + 1)
    b[0] = 1.0
    for n in range(1, N + 1):
        m = min(n, L)
        b[n] = (ktr[L - m:] @ b[n - m: n]) * w
    # survival of the (possibly terminating) intersection renewal
    tail = np.concatenate([[1.0], 1.0 - np.cumsum(kt[:N])])
    tail = np.maximum(tail, 0.0)
    return float(b @ tail[::-1])


def copachi_check(ctx: TruncationContext, intersection: IntersectionKernel,
                  N: int | None = None) -> CopachiResult:
    """Compare log P[two copies intersect again within N] against -2*chi."""
    if N is None:
        N = ctx.n_beta
    if N > len(intersection.ktilde):
        raise ValueError("intersection table shorter than N")
    mass_within = float(np.sum(intersection.ktilde[:N]))
    lhs = math.log(mass_within)
    rhs = -2.0 * ctx.chi
    return CopachiResult(holds=lhs <= rhs, lhs=lhs, rhs=rhs)


# ---------------------------------------------------------------------------
# spine / size-biased sampling


def spine_sample(kernel: RenewalKernel, spec: DisorderSpec, beta: float, N: int,
                 seed: int, substream: int = 0):
    """A draw from the size-biased disorder measure, realized as a spine.

    Draw a free renewal trajectory, then tilt the disorder exactly on its
    points in [1, N] and keep the base law elsewhere.  The environment
    marginal is the law reweighted by Z^f_{N,0}.
    Returns (points, EnvironmentSample).
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    points = sample_path(kernel, N, seed, substream)
    base = sample_env(spec, N, seed, substream)
    values = base.values.copy()
    interior = points[points >= 1]
    if len(interior):
        tilted = tilt_sample(spec, beta, len(interior), seed, substream)
        values[interior - 1] = tilted.values
    env = EnvironmentSample(values=values, seed=seed, spec=spec, substream=substream)
    return points, env


# ---------------------------------------------------------------------------
# delocalization certificate (fractional-moment bootstrap)


def _aj_log_samples(kernel: RenewalKernel, spec: DisorderSpec, beta: float,
                    h: float, k: int, replicas: int, seed: int) -> np.ndarray:
    """log Z_{j,h} for j = 0..k-1, replicas in columns: one forward DP pass
    per replica batch."""
    n = k - 1
    params = PolymerParams(beta=beta, h=h, n=max(n, 1))
    batch = max(16, min(replicas, int(2.0e7 // (n + 1))))
    out = np.empty((n + 1, replicas))
    done = 0
    from .partition_dp import _forward_logz, _site_weights
    while done < replicas:
        m = min(batch, replicas - done)
        envs = _env_rows(spec, m, max(n, 1), seed, first=done)
        w = _site_weights(params, envs)
        logz = _forward_logz(w, kernel.probs)
        out[:, done: done + m] = logz[: n + 1]
        done += m
    return out


def _suffix_theta_sums(kernel: RenewalKernel, theta: float) -> np.ndarray:
    """s[m] = sum_{l >= m} K(l)**theta for m = 1..horizon+1 (s[H+1] = 0)."""
    kth = kernel.probs ** theta
    suf = np.zeros(kernel.horizon + 2)
    suf[1: kernel.horizon + 1] = np.cumsum(kth[::-1])[::-1]
    return suf


def rho_certificate(kernel: RenewalKernel, spec: DisorderSpec, beta: float,
                    h: float, k: int, replicas: int, seed: int,
                    blocks: int = DEFAULT_BLOCKS) -> RhoCertificate:
    """Finite-volume delocalization certificate.

    Builds the bootstrap quantity

        rho = E[exp(theta*h) (1 + beta*omega)^theta]
              * sum_{n >= k} sum_{j < k} K(n-j)^theta A_j,

    with theta = 1 - 1/log k, the disorder factor exact by quadrature, the
    kernel sums exact, and each A_j = E[(Z_{j,h})^theta] replaced by a
    conservative one-sided upper confidence bound (the largest of the
    median-of-means block means, coverage >= 1 - 2**-blocks).  rho <= 1
    certifies, up to that Monte Carlo confidence, that the free energy
    vanishes at (beta, h), hence that the critical reward lies above h.
    """
    if k < 3:
        raise ValueError("k must be at least 3 so that theta lies in (0, 1)")
    theta = 1.0 - 1.0 / math.log(k)
    factor = math.exp(theta * h) * expect(spec, lambda w: (1.0 + beta * w) ** theta)
    a_upper = np.empty(k)
    a_upper[0] = 1.0
    if k > 1:
        logz = _aj_log_samples(kernel, spec, beta, h, k, replicas, seed)
        for j in range(1, k):
            mom = median_of_means(np.exp(theta * logz[j]), blocks=blocks)
            a_upper[j] = mom.ci_high
    suf = _suffix_theta_sums(kernel, theta)
    gaps = np.minimum(k - np.arange(k), kernel.horizon + 1)
    rho = float(factor * np.sum(suf[gaps] * a_upper))
    return RhoCertificate(beta=beta, h=h, k=k, theta=theta, a_values=a_upper,
                          rho_upper=rho, certified=bool(rho <= 1.0))


def h2_reference(alpha: float, gamma: float, beta: float, c2: float) -> float:
    """Reference reward for the certificate scan, with its log corrections."""
    b = beta / (abs(math.log(beta)) + 1.0)
    if alpha < 1.0:
        if 1.0 - gamma * (1.0 - alpha) <= 0:
            raise ValueError("alpha must exceed 1 - 1/gamma")
        return c2 * b ** (alpha * gamma / (1.0 - gamma * (1.0 - alpha)))
    if alpha == 1.0:
        return c2 * beta ** gamma / (abs(math.log(beta)) + 1.0) ** (3 * gamma - 2)
    return c2 * b ** gamma


def k_for_reward(h: float, alpha: float) -> int:
    """Window length matched to the reward scale."""
    if h <= 0:
        raise ValueError("h must be positive")
    if alpha < 1.0:
        k = h ** (-1.0 / alpha)
    elif alpha == 1.0:
        k = h ** -1.0 * abs(math.log(h)) ** -2.0
    else:
        k = h ** -1.0
    return max(3, int(math.ceil(k)))


# ---------------------------------------------------------------------------
# penalized fractional-moment profile


def _penalized_profile(eta1: float, eta2: float, k: int,
                       kernel: RenewalKernel) -> np.ndarray:
    """exp(-eta1*j) * homogeneous constrained value at reward eta1 - eta2,
    for all j = 0..k-1 in one pass."""
    K = kernel.probs
    H = kernel.horizon
    Kr = np.ascontiguousarray(K[::-1])
    w = math.exp(eta1 - eta2)
    c = np.zeros(k)
    c[0] = 1.0
    for i in range(1, k):
        m = min(i, H)
        c[i] = (Kr[H - m:] @ c[i - m: i]) * w
    return c * np.exp(-eta1 * np.arange(k))


def fracmoment_profile(kernel: RenewalKernel, spec: DisorderSpec, beta: float,
                       h: float, k: int, eta: float, replicas: int,
                       seed: int) -> FracmomentProfile:
    """Exact penalized upper bounds on A_j = E[(Z_{j,h})^theta] against the
    two-regime target eta*u(j) (far window) and 2e^2*u(j) (short window).

    The exact chain is the change-of-measure inequality
    A_j <= cost^{k(1-theta)} * (exp(-eta1 (k-j)) * penalized value at j)^theta,
    with no Monte Carlo on the bound side; Monte Carlo estimates of A_j are
    returned alongside for comparison (the bound must dominate them).
    """
    if k < 3:
        raise ValueError("k must be at least 3")
    theta = 1.0 - 1.0 / math.log(k)
    eta1, eta2, cost = penalty_functionals(spec, beta, h, k)
    pen = _penalized_profile(eta1, eta2, k, kernel)
    js = np.arange(k)
    holder = cost ** (k * (1.0 - theta)) * (np.exp(-eta1 * (k - js)) * pen) ** theta
    u = mass_table(kernel, k - 1).u
    target = np.where(js >= eta * k, eta * u[js], 2.0 * math.e ** 2 * u[js])
    logz = _aj_log_samples(kernel, spec, beta, h, k, replicas, seed)
    mc = np.empty(k)
    mc_lo = np.empty(k)
    mc_hi = np.empty(k)
    mc[0] = mc_lo[0] = mc_hi[0] = 1.0
    for j in range(1, k):
        mom = median_of_means(np.exp(theta * logz[j]))
        mc[j], mc_lo[j], mc_hi[j] = mom.estimate, mom.ci_low, mom.ci_high
    ok = bool(np.all(holder <= target))
    return FracmomentProfile(ok=ok, js=js, holder_bound=holder, target=target,
                             mc_a=mc, mc_a_low=mc_lo, mc_a_high=mc_hi)


# ---------------------------------------------------------------------------
# irrelevance certificate


def irrelevance_certificate(kernel: RenewalKernel, mass: RenewalMassTable,
                            intersection: IntersectionKernel, spec: DisorderSpec,
                            beta: float, q: float, L: int, n_max: int,
                            replicas: int, seed: int,
                            blocks: int = DEFAULT_BLOCKS) -> IrrelevanceCertificate:
    """Numerical two-factor certificate for uniformly bounded fractional
    moments.

    term1 sums u(m)^(q+1) over gaps m >= L (exact partial sum plus a
    power-law tail extrapolation); term2 sums u(n)^(1-q) times upper
    confidence bounds on the tilted q-moment of the gap-capped partition
    (exact single-site factor at n = 0, Monte Carlo beyond, plus a tail
    extrapolated from the fitted decay).  product < 1 certifies the bound at
    this (beta, q, L); the extrapolated shares are reported because the tails
    are heuristic.
    """
    alpha = kernel.alpha
    if alpha >= 1.0 or alpha / (1.0 - alpha) >= spec.gamma - 1.0:
        raise ValueError(
            "empty admissible q interval: the kernel exponent is not in the "
            "disorder-irrelevant regime"
        )
    if not alpha / (1.0 - alpha) < q < spec.gamma - 1.0:
        raise ValueError(
            f"q={q} outside the admissible interval "
            f"({alpha / (1 - alpha):.4f}, {spec.gamma - 1:.4f})"
        )
    u = mass.u
    M = len(u) - 1
    if L < 1 or L > M or n_max > M:
        raise ValueError("need 1 <= L <= mass table length and n_max within it")

    # tail constant of u from the last decade of the table
    win = np.arange(max(M // 10, 1), M + 1)
    c_prime = float(np.median(u[win] * win ** (1.0 - alpha)))

    def u_power_tail(start: int, expo: float) -> float:
        # sum_{m > start} (c' m^(alpha-1))^expo, converging for
        # (1-alpha)*expo > 1
        decay = (1.0 - alpha) * expo
        assert decay > 1.0
        return c_prime ** expo * start ** (1.0 - decay) / (decay - 1.0)

    term1_exact = float(np.sum(u[L: M + 1] ** (q + 1.0)))
    term1_tail = u_power_tail(M, q + 1.0)
    term1 = term1_exact + term1_tail

    # tilted q-moments of the gap-capped partition values
    site_factor = moment_1plusq(spec, beta, q)  # exact n = 0 term
    ucb = np.empty(n_max + 1)
    ucb[0] = site_factor
    if n_max >= 1:
        batch = max(16, min(replicas, int(2.0e7 // (n_max + 1))))
        samples = np.empty((n_max + 1, replicas))
        done = 0
        while done < replicas:
            m = min(batch, replicas - done)
            envs = _env_rows(spec, m, n_max + 1, seed, first=done, beta_tilt=beta)
            prof = truncated_gap_profile(intersection, L, n_max, envs, beta)
            samples[:, done: done + m] = prof ** q
            done += m
        for n in range(1, n_max + 1):
            ucb[n] = median_of_means(samples[n], blocks=blocks).ci_high
    weights = u[: n_max + 1] ** (1.0 - q)
    term2_exact = float(weights @ ucb)
    # decay-constant fit for the tail beyond n_max: moments should fall like
    # u(n)^(2q), so calibrate C on the top decade of the computed range
    fit_win = np.arange(max(n_max // 2, 1), n_max + 1)
    with np.errstate(divide="ignore"):
        c_fit = float(np.max(ucb[fit_win] / u[fit_win] ** (2.0 * q))) if n_max >= 2 else 1.0
    term2_tail = c_fit * u_power_tail(n_max, 1.0 + q)
    term2 = term2_exact + term2_tail
    product = term1 * term2
    return IrrelevanceCertificate(
        term1=term1, term2=term2, product=product, certified=bool(product < 1.0),
        term1_tail_fraction=term1_tail / term1 if term1 > 0 else 0.0,
        term2_tail_fraction=term2_tail / term2 if term2 > 0 else 0.0,
    )


# ---------------------------------------------------------------------------
# critical point bracketing


def critical_point(kernel: RenewalKernel, spec: DisorderSpec, beta: float,
                   N: int, replicas: int, tol: float, seed: int,
                   h_max: float = 2.0, threshold: float | None = None):
    """Bisection bracket for the critical reward.

    A reward counts as localized when the penalized lower-bound estimate
    clears the positivity threshold by three standard errors; anything else
    counts as delocalized (which can only push the bracket up, never below
    the true critical point).  The lower edge is clamped at 0.
    Returns (h_low, h_high) with h_high - h_low <= tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if threshold is None:
        threshold = 5.0 / math.sqrt(replicas * N)

    def localized(h: float) -> bool:
        est = quenched_free_energy(kernel, spec, beta, h, N, replicas, seed)
        return est.value - 3.0 * est.stderr > threshold

    lo = 0.0
    hi = tol
    while not localized(hi):
        lo = hi
        hi *= 2.0
        if hi > h_max:
            raise RuntimeError(
                f"no localized reward found below h_max={h_max}: increase N, "
                "replicas, or h_max"
            )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if localized(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


# ---------------------------------------------------------------------------
# fits and inequality checks


def fit_exponent(xs, ys, window: str = "") -> ExponentFit:
    """Ordinary least squares slope on the supplied (already log) grids."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 4:
        raise ValueError("need at least 4 points for an exponent fit")
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have equal length")
    if np.ptp(xs) == 0:
        raise ValueError("degenerate xs: no spread to fit against")
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = ys - (slope * xs + intercept)
    dof = max(len(xs) - 2, 1)
    s2 = float(resid @ resid) / dof
    stderr = math.sqrt(s2 / float(np.sum((xs - xs.mean()) ** 2)))
    return ExponentFit(xs=xs, ys=ys, slope=slope, intercept=intercept,
                       stderr=stderr, window=window, residuals=resid)


def paley_zygmund_check(samples, p: float, theta: float) -> PaleyZygmundResult:
    """Plug-in check of the lower-tail inequality
    P[X >= theta E X] >= (1-theta)^(p/(p-1)) E[X]^(p/(p-1)) / E[X^p]^(1/(p-1))
    on empirical moments of a positive sample."""
    x = np.asarray(samples, dtype=float)
    if np.any(x <= 0):
        raise ValueError("samples must be positive")
    if not (p > 1 and 0 < theta < 1):
        raise ValueError("need p > 1 and theta in (0, 1)")
    mean = float(x.mean())
    mom_p = float(np.mean(x ** p))
    lhs = float(np.mean(x >= theta * mean))
    rhs = (1 - theta) ** (p / (p - 1)) * mean ** (p / (p - 1)) / mom_p ** (1 / (p - 1))
    return PaleyZygmundResult(holds=bool(lhs >= rhs), lhs=lhs, rhs=rhs)

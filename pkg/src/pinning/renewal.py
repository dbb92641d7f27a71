"""Power-law renewal kernels, renewal mass functions, and renewal samplers.

The basic object is an integer renewal process whose inter-arrival law decays
like ``n**-(1+alpha)``.  Kernels carry an explicit horizon: jumps longer than
the horizon are pooled into ``tail_mass`` and treated as leaving the system
for good (they never land inside the window under study).  With
``tail_mass == 0`` the kernel is an exactly normalized, recurrent law on
``{1, ..., horizon}``.

Everything downstream (partition functions, intersection renewals, free
energy of the homogeneous model) is built from two tables computed here: the
kernel probabilities ``K(n)`` and the renewal mass function
``u(n) = P[n is a renewal point]``.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import exp1, gamma as gamma_fn, gammaincc, zeta

from . import streams

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class RenewalKernel:
    """Inter-arrival law K(1..horizon) plus the pooled mass of longer jumps.

    ``probs[i]`` is K(i+1).  Invariants: every K(n) > 0 and
    ``sum(probs) + tail_mass == 1`` to within 1e-12.
    """

    alpha: float
    horizon: int
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if self.alpha <= 0:
            raise ValueError("tail exponent alpha must be positive")
        if self.horizon < 1 or len(probs) != self.horizon:
            raise ValueError("probs must have length horizon >= 1")
        if not np.all(probs > 0):
            raise ValueError("every K(n) up to the horizon must be positive")
        total = math.fsum(probs.tolist()) + self.tail_mass
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"kernel mass {total!r} differs from 1 beyond 1e-12")

    def survival(self) -> np.ndarray:
        """P[first jump > m] for m = 0..horizon; constant tail_mass beyond."""
        # reversed cumulative sum keeps the small terms together:
        # rev[m] = K(m+1) + ... + K(horizon)
        rev = np.cumsum(self.probs[::-1])[::-1]
        surv = np.empty(self.horizon + 1)
        surv[: self.horizon] = self.tail_mass + rev
        surv[self.horizon] = self.tail_mass
        surv[0] = 1.0
        return surv


@dataclass(frozen=True)
class RenewalMassTable:
    """u(n) = P[n in tau] for n = 0..N, computed by the renewal recursion."""

    u: np.ndarray
    alpha: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        if u[0] != 1.0:
            raise ValueError("u(0) must equal 1")

    def __len__(self) -> int:
        return len(self.u)


@dataclass(frozen=True)
class IntersectionKernel:
    """Inter-arrival law of the common-points renewal of two independent copies.

    Recovered from ``u(n)**2`` by inverting the renewal equation.  For
    alpha >= 1/2 the intersection renewal is recurrent (total mass tends to
    one); for alpha < 1/2 it terminates and ``total_mass`` stays below one.
    """

    ktilde: np.ndarray
    total_mass: float
    recurrent_flag: bool

    def __post_init__(self):
        kt = np.asarray(self.ktilde, dtype=float)
        kt.setflags(write=False)
        object.__setattr__(self, "ktilde", kt)

    def __len__(self) -> int:
        return len(self.ktilde)


def make_kernel(alpha: float, horizon: int, infinite_normalizer: bool = False) -> RenewalKernel:
    """Build the canonical power-law kernel K(n) = n**-(1+alpha) / Z.

    With ``infinite_normalizer=False`` (default) the normalizer is the finite
    sum over 1..horizon, so the kernel is recurrent and ``tail_mass == 0``.
    With ``infinite_normalizer=True`` the normalizer is the full series
    (Riemann zeta at 1+alpha) and the mass of jumps beyond the horizon is
    kept explicit in ``tail_mass``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    n = np.arange(1, horizon + 1, dtype=float)
    weights = n ** -(1.0 + alpha)
    partial = math.fsum(weights.tolist())
    if infinite_normalizer:
        z = float(zeta(1.0 + alpha))
        assert math.isfinite(z) and z > partial
        probs = weights / z
        tail = 1.0 - math.fsum(probs.tolist())
    else:
        assert math.isfinite(partial)
        probs = weights / partial
        tail = 0.0
    return RenewalKernel(alpha=alpha, horizon=horizon, probs=probs, tail_mass=tail)


def mass_table(kernel: RenewalKernel, N: int) -> RenewalMassTable:
    """Solve u(n) = sum_k K(k) u(n-k) for n = 0..N.

    N may exceed the kernel horizon: jumps pooled in ``tail_mass`` leave the
    window and contribute nothing to u.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    H = kernel.horizon
    K = kernel.probs
    Kr = K[::-1].copy()
    u = np.zeros(N + 1)
    u[0] = 1.0
    for n in range(1, N + 1):
        w = min(n, H)
        u[n] = Kr[H - w:] @ u[n - w:n]
    return RenewalMassTable(u=u, alpha=kernel.alpha)


def renewal_residuals(kernel: RenewalKernel, mass: RenewalMassTable) -> np.ndarray:
    """Residuals u(n) - sum_k K(k) u(n-k), recomputed in the opposite order.

    An independent re-evaluation of the recursion (different summation order)
    used by the verification suite; all entries should sit below 1e-12.
    """
    u = mass.u
    K = kernel.probs
    H = kernel.horizon
    res = np.zeros(len(u))
    for n in range(1, len(u)):
        w = min(n, H)
        conv = K[:w] @ u[n - 1::-1][:w]
        res[n] = u[n] - conv
    return res


def intersection_kernel(mass: RenewalMassTable, L_max: int) -> IntersectionKernel:
    """Invert the renewal equation of ũ(n) = u(n)**2 to recover K̃(1..L_max).

    Tiny negative values (above -1e-9) are round-off from the inversion and
    are clamped to zero; anything more negative signals a genuinely broken
    input table and raises.
    """
    if L_max < 1 or L_max >= len(mass.u):
        raise ValueError("need 1 <= L_max < len(mass table)")
    ut = mass.u[: L_max + 1] ** 2
    kt = np.zeros(L_max + 1)
    for n in range(1, L_max + 1):
        conv = kt[1:n] @ ut[n - 1:0:-1] if n > 1 else 0.0
        val = ut[n] - conv
        if val < -1e-9:
            raise ValueError(
                f"intersection kernel inversion failed at n={n}: K̃={val!r} < -1e-9"
            )
        kt[n] = max(val, 0.0)
    total = math.fsum(kt[1:].tolist())
    return IntersectionKernel(
        ktilde=kt[1:], total_mass=total, recurrent_flag=mass.alpha >= 0.5
    )


def intersection_residuals(ik: IntersectionKernel, mass: RenewalMassTable) -> np.ndarray:
    """Round trip: renewal recursion on K̃ minus u(n)**2, for n = 0..len(K̃)."""
    L = len(ik.ktilde)
    kt = ik.ktilde
    ut = np.zeros(L + 1)
    ut[0] = 1.0
    for n in range(1, L + 1):
        ut[n] = kt[:n] @ ut[n - 1::-1][:n]
    return ut - mass.u[: L + 1] ** 2


def overlap_sum(mass: RenewalMassTable, exponent: float, N: int) -> float:
    """Partial sum of u(n)**exponent over n = 1..N.

    Bounded partial sums in the appropriate exponent range are the diagnostic
    for when two independent copies share enough points to matter.
    """
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    if N >= len(mass.u):
        raise ValueError("N exceeds mass table length")
    return float(np.sum(mass.u[1: N + 1] ** exponent))


def sample_path(kernel: RenewalKernel, N: int, seed: int, substream: int = 0) -> np.ndarray:
    """One renewal trajectory on [0, N], starting at 0.

    Gaps are drawn from K by inverse CDF; a draw landing in ``tail_mass``
    exits beyond N and ends the path.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    rng = streams.stream(seed, streams.PATH, substream)
    cum = np.cumsum(kernel.probs)
    inside = cum[-1]  # == 1 - tail_mass
    points = [0]
    pos = 0
    while pos < N:
        r = rng.random()
        if r >= inside:
            break  # jump pooled beyond the horizon: gone for good
        gap = int(np.searchsorted(cum, r, side="right")) + 1
        pos += gap
        if pos > N:
            break
        points.append(pos)
    return np.array(points, dtype=np.int64)


def sample_bridge(mass: RenewalMassTable, N: int, seed: int, substream: int = 0,
                  kernel: RenewalKernel | None = None) -> np.ndarray:
    """One renewal trajectory conditioned to visit N (0 and N included).

    Sequential sampling from the exact conditional gap law
    P[gap = k | m left] = K(k) u(m-k) / u(m); requires a kernel consistent
    with the mass table.  The bridge marginal P[m in path] equals
    u(m) u(N-m) / u(N).
    """
    if kernel is None:
        raise ValueError("sample_bridge needs the kernel the mass table was built from")
    if N >= len(mass.u):
        raise ValueError("N exceeds mass table length")
    u = mass.u
    if not u[N] > 0:
        raise AssertionError("u(N) must be positive to condition on hitting N")
    rng = streams.stream(seed, streams.BRIDGE, substream)
    K = kernel.probs
    points = [0]
    m = N
    while m > 0:
        w = min(m, kernel.horizon)
        gap_weights = K[:w] * u[m - 1::-1][:w]
        total = gap_weights.sum()
        r = rng.random() * total
        gap = int(np.searchsorted(np.cumsum(gap_weights), r, side="right")) + 1
        gap = min(gap, w)
        points.append(points[-1] + gap)
        m -= gap
    return np.array(points, dtype=np.int64)


def homogeneous_g(kernel: RenewalKernel, x: float) -> float:
    """-log of the exponentially discounted kernel mass at rate x >= 0.

    ``tail_mass`` is folded in as an atom at horizon + 1 so that the value at
    x = 0 is exactly zero and the function is strictly increasing.
    """
    if x < 0:
        raise ValueError("x must be nonnegative")
    n = np.arange(1, kernel.horizon + 1, dtype=float)
    s = float(np.exp(-x * n) @ kernel.probs)
    if kernel.tail_mass > 0:
        s += kernel.tail_mass * math.exp(-x * (kernel.horizon + 1))
    return -math.log(s)


def homogeneous_free_energy(kernel: RenewalKernel, h: float) -> float:
    """Free energy of the homogeneous model: 0 for h <= 0, else the unique
    root of g(x) = h, located by bracketed root finding to 1e-12."""
    if h <= 0:
        return 0.0
    n = np.arange(1, kernel.horizon + 1, dtype=float)
    probs = kernel.probs
    tail = kernel.tail_mass
    h_tail = kernel.horizon + 1

    def g(x: float) -> float:
        s = float(np.exp(-x * n) @ probs)
        if tail > 0:
            s += tail * math.exp(-x * h_tail)
        return -math.log(s)

    hi = 1.0
    while g(hi) < h:
        hi *= 2.0
        if hi > 1e8:
            raise RuntimeError("failed to bracket the free energy root")
    root = brentq(lambda x: g(x) - h, 0.0, hi, xtol=1e-300, rtol=8.9e-16, maxiter=300)
    if abs(g(root) - h) > 1e-12 * max(1.0, abs(h)):
        raise RuntimeError("free energy root did not reach the 1e-12 target")
    return float(root)


def _upper_gamma(a: float, z: float) -> float:
    """Upper incomplete gamma for a <= 1, by recursion onto (0, 1]."""
    if a > 0:
        return float(gamma_fn(a) * gammaincc(a, z))
    if a == 0.0:
        return float(exp1(z))
    return (_upper_gamma(a + 1.0, z) - z ** a * math.exp(-z)) / a


def ideal_free_energy(alpha: float, h: float, n_exact: int = 1 << 16) -> float:
    """Free energy of the untruncated power-law renewal with the full zeta
    normalizer.

    The discounted kernel sum is a partial sum over n <= n_exact plus a
    midpoint integral tail expressed through the upper incomplete gamma
    function, so no horizon bends the small-h behavior.  Used where the
    asymptotic critical exponent itself is under test.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if h <= 0:
        return 0.0
    z_norm = float(zeta(1.0 + alpha))
    n = np.arange(1, n_exact + 1, dtype=float)
    weights = n ** -(1.0 + alpha)
    m_half = n_exact + 0.5

    def g(x: float) -> float:
        s = float(np.exp(-x * n) @ weights)
        s += x ** alpha * _upper_gamma(-alpha, m_half * x) if x > 0 else m_half ** -alpha / alpha
        return -math.log(s / z_norm)

    hi = 1.0
    while g(hi) < h:
        hi *= 2.0
        if hi > 1e8:
            raise RuntimeError("failed to bracket the free energy root")
    root = brentq(lambda x: g(x) - h, 0.0, hi, xtol=1e-300, rtol=8.9e-16, maxiter=300)
    return float(root)


def write_kernel_csv(kernel: RenewalKernel, path: str, n_max: int | None = None) -> None:
    """Write columns n, K(n), u(n) for n = 0..n_max (default: the horizon)."""
    if n_max is None:
        n_max = kernel.horizon
    mass = mass_table(kernel, n_max)
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "K", "u"])
        writer.writerow([0, repr(0.0), repr(1.0)])
        for n in range(1, n_max + 1):
            k = kernel.probs[n - 1] if n <= kernel.horizon else 0.0
            writer.writerow([n, repr(float(k)), repr(float(mass.u[n]))])
    os.replace(tmp, path)

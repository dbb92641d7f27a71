"""Heavy-tailed site disorder: the shifted-Pareto family and its functionals.

The environment is IID with law

    omega = (gamma - 1) * P - gamma,      P ~ Pareto(index gamma, minimum 1),

for tail index ``gamma`` in (1, 2).  This family pins down everything in
closed form: support exactly [-1, inf), mean exactly zero, survival
``P[omega > x] = ((x + gamma) / (gamma - 1))**-gamma``, and tail constant
``c_p = (gamma - 1)**gamma``.  The closed-form survival makes quadrature
oracles available for every scalar expectation used by the certificates,
which keeps Monte Carlo noise out of them.

Capping from above (``min(omega, T)``) discards the heavy right tail; the
capped mean is strictly negative, which is what makes the compensating
pinning reward ``h_beta`` positive.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import streams

_QUAD_OPTS = dict(epsabs=1e-10, epsrel=1e-10, limit=400)


@dataclass(frozen=True)
class DisorderSpec:
    """Law of one disorder variable. family is fixed to 'shifted_pareto'."""

    gamma: float
    family: str = "shifted_pareto"

    def __post_init__(self):
        if not 1.0 < self.gamma < 2.0:
            raise ValueError("gamma must lie strictly between 1 and 2")
        if self.family != "shifted_pareto":
            raise ValueError(f"unknown disorder family {self.family!r}")

    @property
    def c_p(self) -> float:
        """Tail constant: x**gamma * P[omega >= x] -> c_p."""
        return (self.gamma - 1.0) ** self.gamma

    def survival(self, x):
        """P[omega > x]; equals 1 for x <= -1."""
        g = self.gamma
        x = np.asarray(x, dtype=float)
        out = np.where(x <= -1.0, 1.0, ((np.maximum(x, -1.0) + g) / (g - 1.0)) ** -g)
        return out if out.ndim else float(out)

    def density(self, x):
        g = self.gamma
        x = np.asarray(x, dtype=float)
        out = np.where(x < -1.0, 0.0, g * self.c_p * (np.maximum(x, -1.0) + g) ** -(g + 1.0))
        return out if out.ndim else float(out)

    def isf(self, u):
        """Inverse survival: the x with P[omega > x] = u, for u in (0, 1]."""
        g = self.gamma
        u = np.asarray(u, dtype=float)
        out = (g - 1.0) * u ** (-1.0 / g) - g
        return out if out.ndim else float(out)

    def mean_capped(self, cap: float) -> float:
        """E[min(omega, cap)]; strictly negative for any finite cap > -1."""
        g = self.gamma
        if cap <= -1.0:
            return -1.0
        return -((g - 1.0) ** (g - 1.0)) * (cap + g) ** (1.0 - g)

    def second_moment_capped(self, cap: float) -> float:
        """E[min(omega, cap)**2], by the closed-form piecewise integral."""
        g = self.gamma
        if cap <= -1.0:
            return 1.0
        c = self.c_p
        a, b = g - 1.0, cap + g
        body = g * c * (
            (b ** (2.0 - g) - a ** (2.0 - g)) / (2.0 - g)
            - 2.0 * g * (a ** (1.0 - g) - b ** (1.0 - g)) / (g - 1.0)
            + g * (a ** -g - b ** -g)
        )
        return body + cap * cap * c * b ** -g

    def mean_above(self, level: float) -> float:
        """E[omega ; omega > level] for level >= -1."""
        g = self.gamma
        s = self.survival(level)
        return level * s + (g - 1.0) ** (g - 1.0) * (level + g) ** (1.0 - g)


@dataclass(frozen=True)
class EnvironmentSample:
    """One IID realization, reproducible from (spec, seed, substream, length)."""

    values: np.ndarray
    seed: int
    spec: DisorderSpec
    substream: int = 0
    tilt_acceptance: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and v.min() < -1.0:
            raise ValueError("environment values must lie in [-1, inf)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


def make_spec(gamma: float) -> DisorderSpec:
    return DisorderSpec(gamma=gamma)


def expect(spec: DisorderSpec, fn, breakpoints=None, **quad_kw) -> float:
    """Adaptive quadrature of E[fn(omega)] on the probability scale.

    Substituting u = survival(omega) maps the expectation to an integral over
    (0, 1] with the heavy tail compressed into the left endpoint.  Kinks of
    fn (caps, indicators) must be announced through ``breakpoints`` (values
    of omega), otherwise the adaptive rule can step over them.
    """
    opts = dict(_QUAD_OPTS)
    opts.update(quad_kw)
    if breakpoints is not None:
        opts["points"] = sorted(float(spec.survival(b)) for b in breakpoints)
    val, err = quad(lambda u: fn(spec.isf(u)), 0.0, 1.0, **opts)
    return float(val)


def sample_env(spec: DisorderSpec, N: int, seed: int, substream: int = 0) -> EnvironmentSample:
    """Draw N IID disorder values by inverse CDF."""
    rng = streams.stream(seed, streams.ENV, substream)
    u = 1.0 - rng.random(N)  # in (0, 1]
    return EnvironmentSample(values=spec.isf(u), seed=seed, spec=spec, substream=substream)


def _sample_tilted_values(spec: DisorderSpec, n: int, rng) -> tuple[np.ndarray, float]:
    """Exact draws from the reweighted law (1 + beta*x) P[dx] need only the
    size-bias component: the mixture split is done by the caller."""
    g = spec.gamma
    a = g - 1.0
    out = np.empty(n)
    filled = 0
    proposed = 0
    accepted = 0
    while filled < n:
        m = max(64, int((n - filled) * g * 1.3))
        y = a * rng.random(m) ** (-1.0 / a)  # Pareto(index gamma-1) proposal
        keep = rng.random(m) * y >= a  # accept w.p. 1 - a/y
        proposed += m
        accepted += int(keep.sum())
        take = y[keep][: n - filled]
        out[filled: filled + len(take)] = take - g
        filled += len(take)
    return out, accepted / max(proposed, 1)


def tilt_sample(spec: DisorderSpec, beta: float, N: int, seed: int,
                substream: int = 0) -> EnvironmentSample:
    """Draw N IID values from the tilted law (1 + beta*x) P[omega in dx].

    Uses the exact mixture (1 - beta) * base + beta * Q, where Q is the
    size-bias of (1 + omega) (a probability law since omega >= -1 and
    E[1 + omega] = 1).  Q is sampled by rejection from a Pareto proposal with
    acceptance probability 1/gamma, reported on the returned sample.
    """
    if not 0.0 <= beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    rng = streams.stream(seed, streams.TILT, substream)
    pick = rng.random(N) < beta
    base = spec.isf(1.0 - rng.random(N))
    values = base
    acc = 1.0
    n_q = int(pick.sum())
    if n_q:
        qvals, acc = _sample_tilted_values(spec, n_q, rng)
        values = base.copy()
        values[pick] = qvals
    return EnvironmentSample(values=values, seed=seed, spec=spec,
                             substream=substream, tilt_acceptance=acc)


def cap_environment(env: EnvironmentSample, cutoff: float) -> EnvironmentSample:
    """Cap every value at ``cutoff`` from above (keeps the -1 floor intact)."""
    return EnvironmentSample(values=np.minimum(env.values, cutoff), seed=env.seed,
                             spec=env.spec, substream=env.substream,
                             tilt_acceptance=env.tilt_acceptance)


@dataclass(frozen=True)
class TruncationContext:
    """Reference size, cap, compensating reward and contact weight for the
    truncated-environment second-moment computation."""

    beta: float
    n_beta: int
    cutoff: float
    h_beta: float
    chi: float
    spec: DisorderSpec


def truncation_context(spec: DisorderSpec, kernel_alpha: float, beta: float,
                       c1: float, delta: float = 0.0) -> TruncationContext:
    """Pick the reference size ``n_beta``, cap the disorder at
    ``n_beta**(1/gamma)``, and compute h_beta and chi in closed form.

    The reference size has three branches in ``kernel_alpha`` (above, at, and
    below 1/2); the branch below 1/2 needs ``delta > 0``.  Requires
    ``kernel_alpha > 1 - 1/gamma`` so that the shift exponents are positive.
    """
    g = spec.gamma
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    denom = 1.0 - g * (1.0 - kernel_alpha)
    if kernel_alpha > 0.5:
        if denom <= 0:
            raise ValueError("kernel_alpha must exceed 1 - 1/gamma")
        n_real = c1 * beta ** (-g / denom)
    elif kernel_alpha == 0.5:
        n_real = c1 * (beta * beta * abs(math.log(beta))) ** (-g / (2.0 - g))
    else:
        if denom <= 0:
            raise ValueError("kernel_alpha must exceed 1 - 1/gamma")
        n_real = c1 * beta ** (-g * (1.0 - delta) / denom)
    n_beta = int(n_real)
    if n_beta < 2:
        raise ValueError(
            f"reference size {n_real:.3g} < 2: beta too large for c1={c1}"
        )
    cutoff = n_beta ** (1.0 / g)
    h_beta = -math.log1p(beta * spec.mean_capped(cutoff))
    chi = math.log1p(beta * beta * spec.second_moment_capped(cutoff))
    assert h_beta > 0 and chi >= 0
    return TruncationContext(beta=beta, n_beta=n_beta, cutoff=cutoff,
                             h_beta=h_beta, chi=chi, spec=spec)


def moment_1plusq(spec: DisorderSpec, beta: float, q: float) -> float:
    """E[(1 + beta*omega)**(1+q)], finite exactly when q < gamma - 1."""
    g = spec.gamma
    if q <= 0:
        raise ValueError("q must be positive")
    if q >= g - 1.0:
        raise ValueError(f"moment of order 1+q={1 + q} is infinite for gamma={g}")
    if beta == 0.0:
        return 1.0
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in [0, 1)")
    # survival substitution u = t**gamma turns the tail into an integrable
    # power singularity at t = 0
    def integrand(t):
        x = (g - 1.0) / t - g
        return (1.0 + beta * x) ** (1.0 + q) * g * t ** (g - 1.0)

    val, _ = quad(integrand, 0.0, 1.0, **_QUAD_OPTS)
    return float(val)


def moment_budget_beta(spec: DisorderSpec, q: float, eps: float) -> float:
    """Largest beta with E[(1 + beta*omega)**(1+q)] <= 1 + eps, by bisection.

    The moment is continuous, increasing in beta and equals 1 at beta = 0."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    hi = 1.0 - 1e-9
    if moment_1plusq(spec, hi, q) <= 1.0 + eps:
        return hi
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == 0.0 or moment_1plusq(spec, mid, q) <= 1.0 + eps:
            lo = mid
        else:
            hi = mid
    return lo


def penalty_functionals(spec: DisorderSpec, beta: float, h: float, k: int):
    """Per-site rates of the change of measure that damps large disorder peaks.

    The penalty multiplies each site with ``omega >= k**(1/gamma)`` by
    ``exp(-1/log k)``.  Returns

    * ``eta1``: -log E[g(omega)]                      (off renewal points)
    * ``eta2``: -log E[g(omega)(1 + beta*omega)] - h  (on renewal points)
    * ``cost``: E[g(omega)**(-theta/(1-theta))] with theta = 1 - 1/log k,
      the exact per-site price of the measure change.
    """
    if k < 3:
        raise ValueError("k must be at least 3 so that log k > 1")
    g = spec.gamma
    logk = math.log(k)
    level = k ** (1.0 / g)
    p = spec.survival(level)
    damp = math.exp(-1.0 / logk)
    eta1 = -math.log1p(-p * (1.0 - damp))
    mean_tail = spec.mean_above(level)  # E[omega; omega >= level]
    e_g_weighted = 1.0 - (1.0 - damp) * (p + beta * mean_tail)
    eta2 = -math.log(e_g_weighted) - h
    theta = 1.0 - 1.0 / logk
    cost = 1.0 - p + p * math.exp(theta)
    return eta1, eta2, cost


def save_spec(spec: DisorderSpec, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump({"gamma": spec.gamma, "family": spec.family}, fh, sort_keys=True)
    os.replace(tmp, path)


def load_spec(path: str) -> DisorderSpec:
    with open(path) as fh:
        data = json.load(fh)
    return DisorderSpec(gamma=float(data["gamma"]), family=data["family"])


def export_env(env: EnvironmentSample, path: str) -> None:
    """Write a sample to disk; .npy gets the raw array, anything else CSV
    with columns n, omega_n."""
    if path.endswith(".npy"):
        np.save(path, env.values)
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "omega_n"])
        for i, v in enumerate(env.values, start=1):
            writer.writerow([i, repr(float(v))])
    os.replace(tmp, path)


def import_env(path: str, spec: DisorderSpec, seed: int = -1) -> EnvironmentSample:
    if path.endswith(".npy"):
        values = np.load(path)
    else:
        with open(path) as fh:
            reader = csv.reader(fh)
            next(reader)
            values = np.array([float(row[1]) for row in reader])
    return EnvironmentSample(values=values, seed=seed, spec=spec)

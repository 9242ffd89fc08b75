"""Finite gamma-mixture fading model with integer cluster/shadowing parameters.

A channel power gain is distributed as a mixture of N+1 gamma components
with integer shapes ``m - j`` and a common scale ``omega``; the mixture is
unit-mean by construction. The number of clusters ``mu`` doubles as the
number of beacon antennas when the per-antenna gains are combined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .numerics import digamma_integer, log_gamma


@dataclass(frozen=True)
class FadingParams:
    """Parameter set (rician_k, mu, m) plus derived mixture constants."""

    rician_k: float
    mu: int
    m: int
    n_mix: int = field(init=False)
    omega: float = field(init=False)
    weights: tuple = field(init=False)
    shapes: tuple = field(init=False)

    def __post_init__(self):
        if self.rician_k <= 0.0 or not math.isfinite(self.rician_k):
            raise ValueError(f"rician_k must be a positive real, got {self.rician_k}")
        if int(self.mu) != self.mu or self.mu < 1:
            raise ValueError(f"mu must be a positive integer, got {self.mu}")
        if int(self.m) != self.m or self.m < self.mu:
            raise ValueError(
                f"m must be an integer with m >= mu, got m={self.m}, mu={self.mu}"
            )
        mu, m, k = int(self.mu), int(self.m), float(self.rician_k)
        n_mix = m - mu
        omega = (mu * k + m) / (m * mu * (1.0 + k))
        p = m / (mu * k + m)
        q = mu * k / (mu * k + m)
        weights = tuple(
            math.comb(n_mix, j) * p**j * q ** (n_mix - j) for j in range(n_mix + 1)
        )
        shapes = tuple(m - j for j in range(n_mix + 1))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_mix", n_mix)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "shapes", shapes)

    @cached_property
    def _weights_arr(self) -> np.ndarray:
        return np.asarray(self.weights)

    @cached_property
    def _shapes_arr(self) -> np.ndarray:
        return np.asarray(self.shapes, dtype=np.int64)

    @cached_property
    def _tail_weights(self) -> np.ndarray:
        # w[r] = sum of mixture weights whose shape exceeds r, for r = 0..m-1;
        # collapses the double sum of the CDF/survival into a single sum over r.
        w = np.zeros(self.m)
        for cj, mj in zip(self.weights, self.shapes):
            w[:mj] += cj
        return w

    def _with_scaled_omega(self, factor: float) -> "FadingParams":
        # Fault-injection hook for the validation suite; deliberately breaks
        # the unit-mean invariant. Not part of the public surface.
        corrupted = object.__new__(FadingParams)
        for name in ("rician_k", "mu", "m", "n_mix", "weights", "shapes"):
            object.__setattr__(corrupted, name, getattr(self, name))
        object.__setattr__(corrupted, "omega", self.omega * factor)
        return corrupted


def _as_nonnegative_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("gain argument must be nonnegative")
    return arr


def pdf(p: FadingParams, x):
    """Mixture density at x; accepts scalars or arrays."""
    arr = _as_nonnegative_array(x)
    out = np.zeros_like(arr)
    pos = arr > 0.0
    xv = arr[pos]
    for cj, mj in zip(p.weights, p.shapes):
        log_term = (
            (mj - 1) * np.log(xv) - xv / p.omega - mj * math.log(p.omega) - log_gamma(mj)
        )
        out[pos] += cj * np.exp(log_term)
    if p.shapes[-1] == 1:
        # the unit-shape component is the only one with mass density at 0
        out[~pos] = p.weights[-1] / p.omega
    return out if np.ndim(x) else float(out)


def survival(p: FadingParams, x):
    """Complementary CDF at x; accepts scalars or arrays."""
    arr = _as_nonnegative_array(x)
    flat = np.atleast_1d(arr)
    t = flat / p.omega
    r = np.arange(p.m, dtype=float)
    log_fact = np.array([log_gamma(k + 1.0) for k in r])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_terms = r[:, None] * np.log(t[None, :]) - log_fact[:, None] - t[None, :]
    # at t = 0 only the r = 0 term survives (it equals 1)
    terms = np.where(
        t[None, :] == 0.0, (r[:, None] == 0.0).astype(float), np.exp(log_terms)
    )
    sf = (p._tail_weights[:, None] * terms).sum(axis=0)
    sf[t == 0.0] = 1.0  # exact, avoids the rounding of the summed weights
    sf = np.clip(sf, 0.0, 1.0).reshape(arr.shape)
    return sf if np.ndim(x) else float(sf)


def cdf(p: FadingParams, x):
    """Distribution function at x; accepts scalars or arrays."""
    return 1.0 - survival(p, x)


def log_moment(p: FadingParams) -> float:
    """Expected log-gain; strictly negative for any unit-mean fading law."""
    return math.fsum(
        cj * (digamma_integer(mj) + math.log(p.omega))
        for cj, mj in zip(p.weights, p.shapes)
    )


def sample(p: FadingParams, gen: np.random.Generator, size=None):
    """Draw gains by component choice followed by an integer-shape gamma."""
    j = gen.choice(p.n_mix + 1, p=p._weights_arr, size=size)
    draws = gen.gamma(shape=p._shapes_arr[j], scale=p.omega, size=size)
    return draws if size is not None else float(draws)


def sum_params(p: FadingParams, l: int) -> FadingParams:
    """Parameter set assigned to the l-fold combined gain: mu is replaced by l.

    Note the returned law is unit-mean like every FadingParams, which differs
    from the mean-l law of a literal sum of l independent unit-mean gains; the
    simulator exposes the literal empirical sum for comparison.
    """
    if l < 1 or l > p.m:
        raise ValueError(f"l must satisfy 1 <= l <= m={p.m}, got {l}")
    return FadingParams(p.rician_k, int(l), p.m)

"""Closed-form performance engine for the harvesting-constrained secondary link.

Computes the effective harvesting range, the two-branch transmission
probability (closed form and quadrature oracle), outage probability and
effective throughput, including the hardware-imperfection variant where the
buffer threshold is inflated by amplifier inefficiency and circuit drain.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from . import fading, numerics
from .fading import FadingParams
from .numerics import AccuracySpec


def _default_link() -> FadingParams:
    return FadingParams(rician_k=7.0, mu=1, m=20)


@dataclass(frozen=True)
class SystemConfig:
    """Full parameter set of beacon, secondary link, geometry and hardware."""

    p_beacon: float = numerics.dbm_to_watts(33.0)
    p_st: float = numerics.dbm_to_watts(20.0)
    eta: float = 0.85
    tau: float = 0.5
    t_frame: float = 1.0
    noise_power: float = numerics.dbm_to_watts(-101.0)
    rate: float = 1.0
    alpha_pb_st: float = 2.4
    alpha_st_sr: float = 3.0
    d_min: float = 1.0
    d_max: float = 15.0
    d_st_sr: float = 30.0
    rho: float = 1.2
    p_circuit: float = numerics.dbm_to_watts(-30.0)
    ideal: bool = True
    fading_pb_st: FadingParams = field(default_factory=_default_link)
    fading_st_sr: FadingParams = field(default_factory=_default_link)

    def __post_init__(self):
        if self.p_beacon <= 0.0 or self.p_st <= 0.0:
            raise ValueError("transmit powers must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must be in (0, 1), got {self.tau}")
        if self.t_frame <= 0.0:
            raise ValueError("t_frame must be positive")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be positive")
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")
        if self.alpha_pb_st <= 0.0 or self.alpha_st_sr <= 0.0:
            raise ValueError("path-loss exponents must be positive")
        if not 0.0 < self.d_min <= self.d_max:
            raise ValueError(
                f"need 0 < d_min <= d_max, got d_min={self.d_min}, d_max={self.d_max}"
            )
        if self.d_st_sr <= 0.0:
            raise ValueError("d_st_sr must be positive")
        if self.rho < 1.0:
            raise ValueError(f"rho must be >= 1, got {self.rho}")
        if self.p_circuit < 0.0:
            raise ValueError("p_circuit must be nonnegative")

    @property
    def gamma_th(self) -> float:
        """SNR threshold implied by the target rate."""
        return 2.0**self.rate - 1.0

    @property
    def p_st_eff(self) -> float:
        """Power the buffer must supply per unit transmit time."""
        if self.ideal:
            return self.p_st
        return self.rho * self.p_st + self.p_circuit

    def with_tau(self, tau: float) -> "SystemConfig":
        return dataclasses.replace(self, tau=tau)


@dataclass(frozen=True)
class MetricPoint:
    """Analytic outputs at one parameter setting."""

    d_star: float
    phi1: float
    phi2: float
    p_tr: float
    f_snr: float
    p_out: float
    throughput: float


def capacity_lower_bound(cfg: SystemConfig, d_pbst: float) -> float:
    """Log-moment (Jensen) lower bound on capacity with harvested power."""
    if d_pbst <= 0.0:
        raise ValueError("d_pbst must be positive")
    e_p = fading.log_moment(cfg.fading_pb_st)
    e_s = fading.log_moment(cfg.fading_st_sr)
    snr = (
        cfg.eta
        * cfg.p_beacon
        * (1.0 - cfg.tau)
        * math.exp(e_p + e_s)
        / (cfg.tau * cfg.noise_power * d_pbst**cfg.alpha_pb_st * cfg.d_st_sr**cfg.alpha_st_sr)
    )
    return cfg.tau * math.log2(1.0 + snr)


def benchmark_capacity_lower_bound(cfg: SystemConfig) -> float:
    """Jensen lower bound on capacity with the fixed secondary transmit power."""
    e_s = fading.log_moment(cfg.fading_st_sr)
    snr = cfg.p_st * math.exp(e_s) / (cfg.noise_power * cfg.d_st_sr**cfg.alpha_st_sr)
    return cfg.tau * math.log2(1.0 + snr)


def effective_range(cfg: SystemConfig) -> float:
    """Beacon distance at which the two capacity lower bounds coincide."""
    e_p = fading.log_moment(cfg.fading_pb_st)
    base = (
        cfg.eta * cfg.p_beacon * (1.0 - cfg.tau) / (cfg.tau * cfg.p_st_eff)
    ) * math.exp(e_p)
    return base ** (1.0 / cfg.alpha_pb_st)


def snr_outage_cdf(cfg: SystemConfig) -> float:
    """Probability the data-link SNR falls below the rate threshold.

    Transmission always radiates p_st; hardware overhead raises the buffer
    threshold, not the radiated power.
    """
    x = cfg.gamma_th * cfg.noise_power * cfg.d_st_sr**cfg.alpha_st_sr / cfg.p_st
    return fading.cdf(cfg.fading_st_sr, x)


def _stable_regularized_diff(s: float, a: float, b: float) -> float:
    # P(s, b) - P(s, a) for a <= b, picking the tail that avoids cancellation.
    pb = numerics.regularized_lower_gamma(s, b)
    if pb <= 0.5:
        return pb - numerics.regularized_lower_gamma(s, a)
    qa = numerics.regularized_upper_gamma(s, a)
    if qa <= 0.5:
        return qa - numerics.regularized_upper_gamma(s, b)
    return pb - numerics.regularized_lower_gamma(s, a)


def _phi_closed_form(cfg: SystemConfig, threshold_coeff: float, lo: float, hi: float) -> float:
    # Sum over survival-series terms of the gain law, each integrated in
    # closed form against the annulus distance density on [lo, hi].
    if hi <= lo:
        return 0.0
    p = cfg.fading_pb_st
    alpha = cfg.alpha_pb_st
    c = threshold_coeff / p.omega
    a = c * lo**alpha
    b = c * hi**alpha
    two_over_alpha = 2.0 / alpha
    norm = cfg.d_max**2 - cfg.d_min**2
    total = 0.0
    for r, w in enumerate(p._tail_weights):
        s = r + two_over_alpha
        gamma_diff = math.exp(numerics.log_gamma(s) - numerics.log_gamma(r + 1.0))
        gamma_diff *= _stable_regularized_diff(s, a, b)
        total += 2.0 * w * c ** (-two_over_alpha) * gamma_diff / (alpha * norm)
    return total


def phi1(cfg: SystemConfig) -> float:
    """Probability of transmitting from inside the effective range."""
    d_star = effective_range(cfg)
    if d_star < cfg.d_min:
        return 0.0
    coeff = cfg.tau * cfg.p_st_eff / (cfg.eta * cfg.p_beacon * (1.0 - cfg.tau))
    return _phi_closed_form(cfg, coeff, cfg.d_min, min(d_star, cfg.d_max))


def phi2(cfg: SystemConfig) -> float:
    """Probability of transmitting from beyond the effective range."""
    d_star = effective_range(cfg)
    if d_star > cfg.d_max:
        return 0.0
    coeff = cfg.tau * cfg.p_st_eff / (cfg.eta * cfg.p_beacon)
    return _phi_closed_form(cfg, coeff, max(d_star, cfg.d_min), cfg.d_max)


def _phi_quadrature(cfg: SystemConfig, threshold_coeff: float, lo: float, hi: float,
                    acc: AccuracySpec) -> float:
    if hi <= lo:
        return 0.0
    p = cfg.fading_pb_st
    alpha = cfg.alpha_pb_st
    norm = cfg.d_max**2 - cfg.d_min**2

    def integrand(x: float) -> float:
        return fading.survival(p, threshold_coeff * x**alpha) * 2.0 * x / norm

    return numerics.integrate_adaptive(integrand, lo, hi, acc)


def phi1_quadrature(cfg: SystemConfig, acc: AccuracySpec = AccuracySpec(1e-10, 200)) -> float:
    """Independent quadrature route for phi1 (oracle, not the fast path)."""
    d_star = effective_range(cfg)
    if d_star < cfg.d_min:
        return 0.0
    coeff = cfg.tau * cfg.p_st_eff / (cfg.eta * cfg.p_beacon * (1.0 - cfg.tau))
    return _phi_quadrature(cfg, coeff, cfg.d_min, min(d_star, cfg.d_max), acc)


def phi2_quadrature(cfg: SystemConfig, acc: AccuracySpec = AccuracySpec(1e-10, 200)) -> float:
    """Independent quadrature route for phi2 (oracle, not the fast path)."""
    d_star = effective_range(cfg)
    if d_star > cfg.d_max:
        return 0.0
    coeff = cfg.tau * cfg.p_st_eff / (cfg.eta * cfg.p_beacon)
    return _phi_quadrature(cfg, coeff, max(d_star, cfg.d_min), cfg.d_max, acc)


def j_correction(cfg: SystemConfig, l: int, d: float) -> float:
    """Probability that exactly the l-th consecutive harvest-only slot refills.

    Uses the combined-gain parameterization in which every sum law stays
    unit-mean; this is the term the closed-form transmission probability
    neglects.
    """
    if l < 2 or l > cfg.fading_pb_st.m:
        raise ValueError(f"l must satisfy 2 <= l <= m={cfg.fading_pb_st.m}, got {l}")
    if d <= 0.0:
        raise ValueError("d must be positive")
    x = cfg.tau * cfg.p_st_eff * d**cfg.alpha_pb_st / (cfg.eta * cfg.p_beacon)
    shorter = fading.cdf(fading.sum_params(cfg.fading_pb_st, l - 1), x)
    longer = fading.cdf(fading.sum_params(cfg.fading_pb_st, l), x)
    return max(0.0, shorter - longer)


def transmission_probability(cfg: SystemConfig) -> float:
    """Two-branch closed-form transmission probability, clamped to [0, 1]."""
    return min(1.0, max(0.0, phi1(cfg) + phi2(cfg)))


def outage_probability(cfg: SystemConfig) -> float:
    """Outage: silent slot, or transmission below the SNR threshold."""
    p_tr = transmission_probability(cfg)
    return p_tr * snr_outage_cdf(cfg) + (1.0 - p_tr)


def average_throughput(cfg: SystemConfig) -> float:
    """Effective throughput in bps/Hz; bounded above by tau * rate."""
    return cfg.tau * cfg.rate * (1.0 - outage_probability(cfg))


def evaluate(cfg: SystemConfig) -> MetricPoint:
    """All analytic metrics at the configured switching time."""
    d_star = effective_range(cfg)
    v1 = phi1(cfg)
    v2 = phi2(cfg)
    p_tr = min(1.0, max(0.0, v1 + v2))
    f_snr = snr_outage_cdf(cfg)
    p_out = p_tr * f_snr + (1.0 - p_tr)
    throughput = cfg.tau * cfg.rate * (1.0 - p_out)
    return MetricPoint(
        d_star=d_star,
        phi1=v1,
        phi2=v2,
        p_tr=p_tr,
        f_snr=f_snr,
        p_out=p_out,
        throughput=throughput,
    )


def sweep(cfg: SystemConfig, tau_grid) -> list[MetricPoint]:
    """One MetricPoint per switching-time value."""
    return [evaluate(cfg.with_tau(float(t))) for t in tau_grid]

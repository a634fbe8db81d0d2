"""Closed-form sensing, collision and throughput expressions.

Everything in this module is a pure, deterministic function of a
:class:`SystemParams` record.  The simulator (``simkernel``) estimates the
same quantities by Monte Carlo; ``metrics.compare`` puts the two side by
side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from enum import Enum

from scipy.special import erfc

__all__ = [
    "SystemParams",
    "AnalyticReport",
    "CollisionScheme",
    "ThroughputVariant",
    "ParamError",
    "q_tail",
    "prob_false_alarm",
    "prob_detection",
    "fuse_or",
    "per_instantaneous",
    "per_average_sis",
    "fer",
    "priors",
    "p_reappear",
    "collision_prob",
    "collision_duration_pdf",
    "mean_durations",
    "rates",
    "throughput",
    "analytic_report",
]


class ParamError(ValueError):
    """A SystemParams invariant is violated; message names the offending fields."""


class CollisionScheme(Enum):
    ASYNC = "async"
    LBT = "lbt"


class ThroughputVariant(Enum):
    FRAME = "frame"      # per-frame average, conditioned on transmitting
    AVG = "avg"          # mode-averaged form with unnormalized durations
    ASYNC = "async"      # staggered full-duplex network average
    SYNC = "sync"        # aligned full-duplex network average


@dataclass(frozen=True)
class SystemParams:
    """One validated record holding every model parameter.

    Rates are 1/s, times in seconds, SNRs and thresholds linear. ``lambda_rate``
    is the reciprocal mean of the licensed user's OFF (idle) durations and
    ``mu_rate`` of its ON (busy) durations.  ``eps0`` is the presence-detection
    energy threshold and ``eps1`` the mode-selection threshold, both on the
    same scale as ``noise_var``.  ``sis_beta`` is the residual
    self-interference fraction after cancellation.
    """

    lambda_rate: float
    mu_rate: float
    frame_T: float
    sense_Ts: float
    sample_fs: float
    noise_var: float
    eps0: float
    eps1: float
    sis_beta: float
    snr_su_mean: float
    snr_pu_mean: float
    per_alpha: float
    per_g: float
    per_gamma_t: float
    packets_per_frame: int

    def __post_init__(self):
        bad = []
        if not self.lambda_rate > 0:
            bad.append("lambda_rate must be > 0")
        if not self.mu_rate > 0:
            bad.append("mu_rate must be > 0")
        if not self.sense_Ts > 0:
            bad.append("sense_Ts must be > 0")
        if not self.frame_T > self.sense_Ts:
            bad.append("frame_T must exceed sense_Ts")
        if not self.sample_fs > 0:
            bad.append("sample_fs must be > 0")
        if not self.noise_var > 0:
            bad.append("noise_var must be > 0")
        if not self.eps0 > 0:
            bad.append("eps0 must be > 0")
        if not self.eps0 < self.eps1:
            bad.append("eps0 must be < eps1")
        if not 0.0 <= self.sis_beta <= 1.0:
            bad.append("sis_beta must be in [0, 1]")
        if self.snr_su_mean < 0:
            bad.append("snr_su_mean must be >= 0")
        if self.snr_pu_mean < 0:
            bad.append("snr_pu_mean must be >= 0")
        if not self.per_alpha > 0:
            bad.append("per_alpha must be > 0")
        if not self.per_g > 0:
            bad.append("per_g must be > 0")
        if self.per_gamma_t < 0:
            bad.append("per_gamma_t must be >= 0")
        if self.packets_per_frame < 1:
            bad.append("packets_per_frame must be >= 1")
        if bad:
            raise ParamError("; ".join(bad))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class AnalyticReport:
    """All closed-form outputs for one parameter point."""

    pf: float            # per-node false alarm at eps0
    pd: float            # per-node detection at eps0, mean licensed-user SNR
    pf1: float           # cooperative (OR-fused) false alarm
    pd1: float           # cooperative (OR-fused) detection
    per_avg: float       # average packet error rate with residual SI
    fer: float           # average frame error rate; doubles as in-session false alarm prob
    p_tau: float         # licensed user reappears within one frame
    p_h0: float          # stationary probability the channel is idle
    p_h1: float          # stationary probability the channel is busy
    pcol_async: float
    pcol_lbt: float
    tau_bar: float       # mean collision duration per colliding frame (seconds)
    theta_bar: float     # mean collision-free duration per colliding frame (seconds)
    r0: float            # sum spectral efficiency, no interference (bit/s/Hz)
    r1: float            # sum spectral efficiency during collision
    r_frame: float
    r_async: float
    r_sync: float
    params: dict = field(repr=False, default_factory=dict)


_SQRT2 = math.sqrt(2.0)


def q_tail(x: float) -> float:
    """Standard Gaussian upper-tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    if not math.isfinite(x):
        raise ValueError("q_tail requires a finite argument")
    return 0.5 * erfc(x / _SQRT2)


def prob_false_alarm(p: SystemParams, eps: float) -> float:
    """False alarm probability of a single energy detector at threshold eps."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    return q_tail((eps / p.noise_var - 1.0) * math.sqrt(p.sample_fs * p.sense_Ts))


def prob_detection(p: SystemParams, eps: float, gamma: float) -> float:
    """Detection probability at threshold eps for received linear SNR gamma."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    scale = math.sqrt(p.sample_fs * p.sense_Ts / (2.0 * gamma + 1.0))
    return q_tail((eps / p.noise_var - gamma - 1.0) * scale)


def fuse_or(p_single: float) -> float:
    """OR fusion of two independent detectors: 2p - p^2."""
    if not 0.0 <= p_single <= 1.0:
        raise ValueError("p_single must be in [0, 1]")
    return 2.0 * p_single - p_single * p_single


def per_instantaneous(p: SystemParams, gamma: float) -> float:
    """Instantaneous packet error rate at linear SINR gamma.

    Certain error below the fit threshold, exponential fit above it; the
    fitted branch is clamped to 1 (some published fits exceed 1 near the
    threshold).
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if gamma < p.per_gamma_t:
        return 1.0
    return min(1.0, p.per_alpha * math.exp(-p.per_g * gamma))


def per_average_sis(p: SystemParams) -> float:
    """Packet error rate averaged over Rayleigh fading, with residual SI.

    The receive SINR is the faded link SNR divided by (1 + beta * mean self
    SNR); both node pairs share the same mean, so a single expression covers
    either direction.  A zero mean link SNR is the always-error limit.
    """
    gbar = p.snr_su_mean
    if gbar == 0.0:
        return 1.0
    c = 1.0 + p.sis_beta * gbar
    ratio = p.per_g * gbar / (c + p.per_g * gbar)
    return 1.0 - ratio * math.exp(-c * p.per_gamma_t / gbar)


def fer(per_avg: float, n_f: int) -> float:
    """Frame error rate for n_f packets erring independently at rate per_avg."""
    if not 0.0 <= per_avg <= 1.0:
        raise ValueError("per_avg must be in [0, 1]")
    if n_f < 1:
        raise ValueError("n_f must be >= 1")
    return 1.0 - (1.0 - per_avg) ** n_f


def priors(p: SystemParams) -> tuple[float, float]:
    """Stationary (idle, busy) probabilities of the licensed channel."""
    s = p.lambda_rate + p.mu_rate
    return p.mu_rate / s, p.lambda_rate / s


def p_reappear(p: SystemParams) -> float:
    """Probability the licensed user returns within one frame of length T."""
    return -math.expm1(-p.lambda_rate * p.frame_T)


def _pf2(p: SystemParams) -> float:
    return fer(per_average_sis(p), p.packets_per_frame)


def collision_prob(p: SystemParams, scheme: CollisionScheme) -> float:
    """Per frame-length window collision probability for either access scheme.

    Both schemes share the misdetection term p_h1 * (1 - pd1); they differ in
    how a transmitting window can be lost to a false alarm before the
    licensed user's return.
    """
    p_h0, p_h1 = priors(p)
    pd1 = fuse_or(prob_detection(p, p.eps0, p.snr_pu_mean))
    ptau = p_reappear(p)
    miss_term = p_h1 * (1.0 - pd1)
    if scheme is CollisionScheme.ASYNC:
        pf2 = _pf2(p)
        return p_h0 * (1.0 - pf2 * p.sense_Ts / p.frame_T) * ptau + miss_term
    pf1 = fuse_or(prob_false_alarm(p, p.eps0))
    return p_h0 * (1.0 - pf1) * ptau + miss_term


def collision_duration_pdf(p: SystemParams, tau: float) -> float:
    """Density of the staggered-mode collision duration, supported on (0, T/2]."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    half = 0.5 * p.frame_T
    if tau > half:
        return 0.0
    lam = p.lambda_rate
    return lam * math.exp(-lam * (half - tau)) / (-math.expm1(-lam * half))


# Cancellation-free numerators for the mean-duration ratios.  For small x both
# x + exp(-x) - 1 and (2x+1)(1-exp(-x)) - x lose all leading digits, so below
# the crossover they are evaluated from their alternating series instead.
_SERIES_X = 1e-3


def _n_of_x(x: float) -> float:
    """x + exp(-x) - 1, accurate for all x >= 0."""
    if x >= _SERIES_X:
        return x + math.expm1(-x)
    acc, term = 0.0, 1.0
    for k in range(2, 8):
        term = (-x) ** k
        acc += term / math.factorial(k)
    return acc


def _m_of_x(x: float) -> float:
    """(2x+1)(1 - exp(-x)) - x, accurate for all x >= 0."""
    u = -math.expm1(-x)
    if x >= _SERIES_X:
        return (2.0 * x + 1.0) * u - x
    acc = 0.0
    for k in range(2, 8):
        acc += (-1.0) ** k * (2 * k - 1) * x**k / math.factorial(k)
    return acc


def mean_durations(p: SystemParams) -> tuple[float, float]:
    """Mean collision and collision-free durations of a colliding frame.

    Returns (tau_bar, theta_bar) in seconds with tau_bar + theta_bar == T as
    an algebraic identity, preserved numerically to ~1e-15 relative.
    """
    x = p.lambda_rate * p.frame_T
    denom = 2.0 * x * (-math.expm1(-x))
    tau_bar = p.frame_T * _n_of_x(x) / denom
    theta_bar = p.frame_T * _m_of_x(x) / denom
    return tau_bar, theta_bar


def rates(p: SystemParams) -> tuple[float, float]:
    """Sum spectral efficiencies without and with licensed-user interference."""
    r0 = 2.0 * math.log2(1.0 + p.snr_su_mean / (1.0 + p.sis_beta))
    r1 = 2.0 * math.log2(
        1.0 + p.snr_su_mean / (1.0 + p.snr_pu_mean + p.sis_beta)
    )
    return r0, r1


def _prefactor(p: SystemParams) -> float:
    """Shared leading factor of the mode-averaged throughput forms.

    The 2*Ts/lambda term is kept exactly as printed in the source formula
    even though its units are seconds squared; see the project notes.
    """
    p_h0, _ = priors(p)
    pf1 = fuse_or(prob_false_alarm(p, p.eps0))
    pf2 = _pf2(p)
    inner = (
        1.0
        + (2.0 * p.sense_Ts / p.lambda_rate) * (pf2 - pf1)
        - (2.0 * p.sense_Ts / p.frame_T) * pf2
    )
    return 2.0 * p_h0 * inner


def throughput(p: SystemParams, variant: ThroughputVariant) -> float:
    """Average throughput under the requested accounting variant."""
    r0, r1 = rates(p)
    ptau = p_reappear(p)
    if variant is ThroughputVariant.FRAME:
        tau_bar, theta_bar = mean_durations(p)
        return (
            ptau * (r0 * theta_bar / p.frame_T + r1 * tau_bar / p.frame_T)
            + r0 * (1.0 - ptau)
        )
    if variant is ThroughputVariant.AVG:
        tau_bar, theta_bar = mean_durations(p)
        inner = ptau * (r0 * theta_bar + r1 * tau_bar) + r0 * (1.0 - ptau)
        return _prefactor(p) * inner
    x = p.lambda_rate * p.frame_T
    # 1 - x - exp(-x) == -(x + expm1(-x)); shares the series-protected helper
    deficit = -_n_of_x(x)
    div = 2.0 * x if variant is ThroughputVariant.ASYNC else x
    bracket = (r0 - r1) * deficit / div + r0
    return _prefactor(p) * bracket


def analytic_report(p: SystemParams) -> AnalyticReport:
    """Evaluate every closed form at one parameter point."""
    pf = prob_false_alarm(p, p.eps0)
    pd = prob_detection(p, p.eps0, p.snr_pu_mean)
    per_avg = per_average_sis(p)
    p_h0, p_h1 = priors(p)
    tau_bar, theta_bar = mean_durations(p)
    r0, r1 = rates(p)
    return AnalyticReport(
        pf=pf,
        pd=pd,
        pf1=fuse_or(pf),
        pd1=fuse_or(pd),
        per_avg=per_avg,
        fer=fer(per_avg, p.packets_per_frame),
        p_tau=p_reappear(p),
        p_h0=p_h0,
        p_h1=p_h1,
        pcol_async=collision_prob(p, CollisionScheme.ASYNC),
        pcol_lbt=collision_prob(p, CollisionScheme.LBT),
        tau_bar=tau_bar,
        theta_bar=theta_bar,
        r0=r0,
        r1=r1,
        r_frame=throughput(p, ThroughputVariant.FRAME),
        r_async=throughput(p, ThroughputVariant.ASYNC),
        r_sync=throughput(p, ThroughputVariant.SYNC),
        params=p.as_dict(),
    )

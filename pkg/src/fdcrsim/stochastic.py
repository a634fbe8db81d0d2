"""All randomness used by the simulator, reproducible from one 64-bit seed.

Every noise source owns an independent substream, so changing how often one
source is sampled never perturbs the others.  Draw sequences are a pure
function of (seed, stream id).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .analytic import SystemParams, per_instantaneous

__all__ = [
    "STREAM_IDS",
    "RngBank",
    "PuState",
    "OnOffTrace",
    "InitialState",
    "gen_onoff_trace",
    "sample_detector_energy",
    "sample_link_snr",
    "draw_frame_error",
]

# One substream per noise source; the index in this tuple is the spawn key.
STREAM_IDS = (
    "pu_process",
    "fading_s1s2",
    "fading_s2s1",
    "fading_pu_s1",
    "fading_pu_s2",
    "detector_s1",
    "detector_s2",
    "frame_errors",
)


class RngBank:
    """Independent per-source generators derived from a single seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams = {
            name: np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(i,)))
            for i, name in enumerate(STREAM_IDS)
        }

    def stream(self, name: str) -> np.random.Generator:
        return self._streams[name]


class PuState:
    OFF = 0
    ON = 1


class InitialState:
    STATIONARY = "stationary"
    FORCE_ON = "force_on"
    FORCE_OFF = "force_off"


@dataclass
class OnOffTrace:
    """Alternating licensed-user activity timeline on integer-nanosecond ticks.

    ``starts[i]`` is the start of segment i, segments tile [0, horizon_ns)
    with strictly alternating states; ``states[i]`` is PuState.ON or OFF.
    ``cum_on_ns[i]`` is the total ON time before ``starts[i]``, enabling O(log n)
    overlap queries.
    """

    starts: np.ndarray            # int64 ns, first element 0
    states: np.ndarray            # int8
    horizon_ns: int
    cum_on_ns: np.ndarray         # int64 ns, same length as starts

    def _index(self, t_ns: int) -> int:
        if t_ns < 0 or t_ns >= self.horizon_ns:
            raise ValueError(f"t={t_ns} ns outside trace horizon [0, {self.horizon_ns})")
        return bisect.bisect_right(self.starts, t_ns) - 1

    def state_at(self, t_ns: int) -> int:
        """State of the segment containing t (half-open [start, end) convention)."""
        return int(self.states[self._index(t_ns)])

    def segment_end(self, t_ns: int) -> int:
        """End tick of the segment containing t."""
        i = self._index(t_ns)
        return int(self.starts[i + 1]) if i + 1 < len(self.starts) else self.horizon_ns

    def on_measure(self, a_ns: int, b_ns: int) -> int:
        """Total ON time within [a, b), clipped to the horizon."""
        a = max(0, min(a_ns, self.horizon_ns))
        b = max(0, min(b_ns, self.horizon_ns))
        if b <= a:
            return 0
        return self._cum_at(b) - self._cum_at(a)

    def _cum_at(self, t_ns: int) -> int:
        if t_ns <= 0:
            return 0
        i = bisect.bisect_right(self.starts, t_ns - 1) - 1
        base = int(self.cum_on_ns[i])
        if self.states[i] == PuState.ON:
            base += t_ns - int(self.starts[i])
        return base

    def on_intervals(self, a_ns: int, b_ns: int) -> list[tuple[int, int]]:
        """Maximal ON intervals intersected with [a, b)."""
        a = max(0, min(a_ns, self.horizon_ns))
        b = max(0, min(b_ns, self.horizon_ns))
        if b <= a:
            return []
        out = []
        i = self._index(a)
        n = len(self.starts)
        while i < n and int(self.starts[i]) < b:
            seg_start = int(self.starts[i])
            seg_end = int(self.starts[i + 1]) if i + 1 < n else self.horizon_ns
            if self.states[i] == PuState.ON:
                lo, hi = max(seg_start, a), min(seg_end, b)
                if hi > lo:
                    out.append((lo, hi))
            i += 1
        return out

    def segments(self):
        """Yield (state, start_ns, end_ns) triples."""
        n = len(self.starts)
        for i in range(n):
            end = int(self.starts[i + 1]) if i + 1 < n else self.horizon_ns
            yield int(self.states[i]), int(self.starts[i]), end

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write("state,start_s,end_s\n")
            for state, a, b in self.segments():
                name = "ON" if state == PuState.ON else "OFF"
                fh.write(f"{name},{a / 1e9:.9f},{b / 1e9:.9f}\n")


def gen_onoff_trace(
    p: SystemParams,
    rng: np.random.Generator,
    horizon_s: float,
    initial: str = InitialState.STATIONARY,
) -> OnOffTrace:
    """Draw an alternating ON/OFF timeline out to the horizon.

    OFF durations are exponential with mean 1/lambda_rate, ON durations with
    mean 1/mu_rate.  Under the stationary start the first state is ON with
    probability lambda/(lambda+mu).
    """
    if horizon_s <= 0:
        raise ValueError("horizon must be > 0")
    horizon_ns = int(round(horizon_s * 1e9))
    if initial == InitialState.STATIONARY:
        p_on = p.lambda_rate / (p.lambda_rate + p.mu_rate)
        state = PuState.ON if rng.random() < p_on else PuState.OFF
    elif initial == InitialState.FORCE_ON:
        state = PuState.ON
    elif initial == InitialState.FORCE_OFF:
        state = PuState.OFF
    else:
        raise ValueError(f"unknown initial state {initial!r}")

    mean_ns = {
        PuState.OFF: 1e9 / p.lambda_rate,
        PuState.ON: 1e9 / p.mu_rate,
    }
    starts, states = [0], [state]
    t = 0
    while t < horizon_ns:
        dur = max(1, int(round(rng.exponential(mean_ns[state]))))
        t += dur
        state = PuState.ON if state == PuState.OFF else PuState.OFF
        if t < horizon_ns:
            starts.append(t)
            states.append(state)

    starts_arr = np.asarray(starts, dtype=np.int64)
    states_arr = np.asarray(states, dtype=np.int8)
    seg_ends = np.append(starts_arr[1:], horizon_ns)
    on_len = np.where(states_arr == PuState.ON, seg_ends - starts_arr, 0)
    cum = np.concatenate(([0], np.cumsum(on_len[:-1]))).astype(np.int64)
    return OnOffTrace(starts=starts_arr, states=states_arr, horizon_ns=horizon_ns, cum_on_ns=cum)


def sample_detector_energy(
    p: SystemParams,
    pu_on: bool,
    gamma: float,
    rng: np.random.Generator,
    size: int | None = None,
):
    """Draw the normalized detector statistic E_d / sigma_u^2 for one slot.

    Under OFF the statistic is Normal(1, 1/(fs*Ts)); under ON it is
    Normal(1 + gamma, (2*gamma + 1)/(fs*Ts)).  This Gaussian model is the one
    under which the closed-form false alarm / detection expressions are
    exact.  Negative draws clamp to 0.
    """
    m = p.sample_fs * p.sense_Ts
    if m < 100:
        raise ValueError("sample_fs * sense_Ts must be >= 100 for the Gaussian model")
    if pu_on:
        mean, var = 1.0 + gamma, (2.0 * gamma + 1.0) / m
    else:
        mean, var = 1.0, 1.0 / m
    draw = rng.normal(mean, math.sqrt(var), size=size)
    return float(max(draw, 0.0)) if size is None else np.maximum(draw, 0.0)


def sample_link_snr(mean: float, rng: np.random.Generator, size: int | None = None):
    """Exponential (Rayleigh power) fading draw with the given linear mean."""
    if mean < 0:
        raise ValueError("mean must be >= 0")
    if mean == 0.0:
        return 0.0 if size is None else np.zeros(size)
    draw = rng.exponential(mean, size=size)
    return float(draw) if size is None else draw


def draw_frame_error(
    p: SystemParams,
    sinr: float,
    rng: np.random.Generator,
    n_packets: int | None = None,
) -> bool:
    """Bernoulli frame error: packets err independently at PER(sinr).

    The frame errs with probability 1 - (1 - PER(sinr))**n, matching the
    closed-form frame error rate when the per-packet rate is deterministic
    at the given SINR.
    """
    if sinr < 0:
        raise ValueError("sinr must be >= 0")
    n = p.packets_per_frame if n_packets is None else n_packets
    per = per_instantaneous(p, sinr)
    if per >= 1.0:
        return True
    if per <= 0.0:
        return False
    return bool((rng.random(n) < per).any())

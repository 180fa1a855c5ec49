"""Point-to-point quintic legs with optional constant-velocity cruise.

With blend_fraction = 1 a leg is the pure rest-to-rest quintic

    s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5,   tau = t / T

For blend_fraction < 1 the two halves of a quintic accelerate and brake over
blend_fraction * T in total and the leg cruises at constant velocity between
them. Position, velocity and acceleration stay continuous at every junction.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .exceptions import NonpositiveDuration

PEAK_VELOCITY_RATIO = 1.875  # max ds/dtau of the quintic


def _profile(tau: float) -> Tuple[float, float, float]:
    """Normalized quintic and its first two derivatives in tau"""
    tau = min(max(tau, 0.0), 1.0)
    t2 = tau * tau
    t3 = t2 * tau
    s = t3 * (10.0 - 15.0 * tau + 6.0 * t2)
    ds = 30.0 * t2 * (1.0 - tau) ** 2
    dds = 60.0 * tau - 180.0 * t2 + 120.0 * t3
    return s, ds, dds


@dataclass(frozen=True)
class QuinticSegment:
    q0: np.ndarray
    q1: np.ndarray
    duration: float
    coefficients: np.ndarray  # (n_axes, 6), ascending powers of t, of the blend quintic
    blend_fraction: float = 1.0
    _blend: float = field(default=0.0, repr=False)
    _share: float = field(default=0.5, repr=False)

    @property
    def delta(self) -> np.ndarray:
        return self.q1 - self.q0

    def _scalar(self, t: float) -> Tuple[float, float, float]:
        """Normalized path fraction s(t) in [0, 1] with its time derivatives"""
        T = self.duration
        t = min(max(t, 0.0), T)
        if self.blend_fraction >= 1.0:
            s, ds, dds = _profile(t / T)
            return s, ds / T, dds / T ** 2
        tb, share = self._blend, self._share
        span = 2.0 * tb  # duration of the quintic whose halves form the blends
        cruise = PEAK_VELOCITY_RATIO * 2.0 * share / span
        if t < tb:
            s, ds, dds = _profile(t / span)
            return 2.0 * share * s, 2.0 * share * ds / span, 2.0 * share * dds / span ** 2
        if t > T - tb:
            s, ds, dds = _profile((T - t) / span)
            return 1.0 - 2.0 * share * s, 2.0 * share * ds / span, -2.0 * share * dds / span ** 2
        return share + cruise * (t - tb), cruise, 0.0

    def sample(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        s, ds, dds = self._scalar(t)
        delta = self.delta
        return self.q0 + delta * s, delta * ds, delta * dds


def _coefficients(delta: np.ndarray, q0: np.ndarray, T: float) -> np.ndarray:
    coeffs = np.zeros((delta.size, 6))
    coeffs[:, 0] = q0
    coeffs[:, 3] = 10.0 * delta / T ** 3
    coeffs[:, 4] = -15.0 * delta / T ** 4
    coeffs[:, 5] = 6.0 * delta / T ** 5
    return coeffs


def quintic_segment(q0: Sequence[float], q1: Sequence[float], T: float,
                    blend_fraction: float = 1.0) -> QuinticSegment:
    """Rest-to-rest leg from q0 to q1 in T seconds"""
    if not T > 0.0:
        raise NonpositiveDuration(T)
    if not 0.0 < blend_fraction <= 1.0:
        raise ValueError(f"blend_fraction must lie in (0, 1], got {blend_fraction}")
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    q1 = np.atleast_1d(np.asarray(q1, dtype=float))
    if q0.shape != q1.shape:
        raise ValueError(f"endpoint shapes differ: {q0.shape} vs {q1.shape}")
    tb = 0.5 * blend_fraction * T
    # path share covered by each blend so the cruise closes the remaining gap
    share = 1.0 / (2.0 + PEAK_VELOCITY_RATIO * (T - 2.0 * tb) / tb)
    coefficients = _coefficients(2.0 * share * (q1 - q0), q0, 2.0 * tb)
    return QuinticSegment(q0, q1, float(T), coefficients, float(blend_fraction), tb, share)


def sample(seg: QuinticSegment, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(position, velocity, acceleration) at time t, clamped to [0, T]"""
    return seg.sample(t)


class SegmentChain:
    """Consecutive legs placed back to back on one clock"""

    def __init__(self, segments: Sequence[QuinticSegment], start_time: float = 0.0):
        if not segments:
            raise ValueError("a segment chain needs at least one leg")
        self.segments: List[QuinticSegment] = list(segments)
        durations = np.array([seg.duration for seg in self.segments])
        self.start_times = start_time + np.concatenate([[0.0], np.cumsum(durations)[:-1]])
        self.end_time = float(start_time + durations.sum())

    @property
    def start_time(self) -> float:
        return float(self.start_times[0])

    def locate(self, t: float) -> int:
        index = int(np.searchsorted(self.start_times, t, side="right")) - 1
        return min(max(index, 0), len(self.segments) - 1)

    def sample(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        index = self.locate(t)
        return self.segments[index].sample(t - self.start_times[index])

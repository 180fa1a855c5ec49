import logging
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import WindowNotFull
from .sonar import SonarReading

logger = logging.getLogger(__name__)

STOP_RADIUS = 0.5
CLEAR_TIME = 1.0
WALL_MATCH_TOLERANCE = 0.10

IMU_RATE = 200.0
IMU_WINDOW = 2.0
IMU_BLOCK = 0.1
NOMINAL_VIBRATION_BAND = (2.5, 10.0)

CUP_CAPACITY = 600.0


class GuardStatus(str, Enum):
    CLEAR = "Clear"
    PAUSE_REQUIRED = "PauseRequired"


class CupStatus(str, Enum):
    FULL = "Full"
    EMPTY = "Empty"


def _close_readings(
    readings: Iterable[SonarReading],
    stop_radius: float,
    expected: Optional[Mapping[str, float]] = None,
    tolerance: float = WALL_MATCH_TOLERANCE,
) -> list:
    close = []
    for reading in readings:
        if not reading.valid or reading.value >= stop_radius:
            continue
        wall = (expected or {}).get(reading.name)
        if wall is not None and abs(reading.value - wall) <= tolerance:
            continue
        close.append(reading)
    return close


def obstacle_guard(
    readings: Iterable[SonarReading],
    stop_radius: float = STOP_RADIUS,
    expected: Optional[Mapping[str, float]] = None,
) -> GuardStatus:
    """Instantaneous decision; readings that match a known wall distance are ignored"""
    if _close_readings(readings, stop_radius, expected):
        return GuardStatus.PAUSE_REQUIRED
    return GuardStatus.CLEAR


@dataclass(frozen=True)
class ObstacleGuard:
    """Stop-and-wait guard: clearing needs clear_time of uninterrupted clear readings"""
    stop_radius: float = STOP_RADIUS
    clear_time: float = CLEAR_TIME
    status: GuardStatus = GuardStatus.CLEAR
    clear_since: Optional[float] = None

    def update(self, readings: Iterable[SonarReading], t: float,
               expected: Optional[Mapping[str, float]] = None) -> 'ObstacleGuard':
        instant = obstacle_guard(readings, self.stop_radius, expected)
        if instant is GuardStatus.PAUSE_REQUIRED:
            if self.status is GuardStatus.CLEAR:
                logger.info("obstacle inside %.2f m at t=%.2f", self.stop_radius, t)
            return replace(self, status=GuardStatus.PAUSE_REQUIRED, clear_since=None)
        if self.status is GuardStatus.CLEAR:
            return self
        since = self.clear_since if self.clear_since is not None else t
        if t - since >= self.clear_time - 1e-9:
            logger.info("obstacle cleared at t=%.2f", t)
            return replace(self, status=GuardStatus.CLEAR, clear_since=None)
        return replace(self, clear_since=since)


class ImuWindow:
    """Sliding window of tip-frame acceleration samples"""

    def __init__(self, duration: float = IMU_WINDOW, rate: float = IMU_RATE) -> None:
        self.duration = duration
        self.rate = rate
        self.capacity = int(round(duration * rate))
        self._samples: deque = deque(maxlen=self.capacity)

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def full(self) -> bool:
        return len(self._samples) == self.capacity

    def push(self, sample: Sequence[float]) -> None:
        self._samples.append(np.asarray(sample, dtype=float).reshape(3))

    def extend(self, samples: Iterable[Sequence[float]]) -> None:
        for sample in samples:
            self.push(sample)

    def clear(self) -> None:
        self._samples.clear()

    def samples(self) -> np.ndarray:
        return np.array(self._samples).reshape(-1, 3)

    def rms(self) -> float:
        if not self.full:
            raise WindowNotFull(len(self), self.capacity)
        data = self.samples()
        return float(np.sqrt(np.mean(np.sum(data ** 2, axis=1))))

    def block_rms(self, block: float = IMU_BLOCK) -> np.ndarray:
        if not self.full:
            raise WindowNotFull(len(self), self.capacity)
        size = max(1, int(round(block * self.rate)))
        data = self.samples()
        blocks = data[: (len(data) // size) * size].reshape(-1, size, 3)
        return np.sqrt(np.mean(np.sum(blocks ** 2, axis=2), axis=1))


def detect_empty_cup(window: ImuWindow, low: float = NOMINAL_VIBRATION_BAND[0]) -> CupStatus:
    """Empty when most short blocks of the window vibrate below the nominal band"""
    quiet = window.block_rms() < low
    return CupStatus.EMPTY if np.count_nonzero(quiet) * 2 > quiet.size else CupStatus.FULL


@dataclass
class PaintCup:
    """Ground-truth paint level, consumed while the gun sprays"""
    capacity: float = CUP_CAPACITY
    remaining: float = CUP_CAPACITY

    @property
    def level(self) -> float:
        return self.remaining / self.capacity

    @property
    def empty(self) -> bool:
        return self.remaining <= 0.0

    def consume(self, dt: float) -> None:
        self.remaining = max(0.0, self.remaining - dt)

    def refill(self) -> None:
        logger.info("paint cup refilled")
        self.remaining = self.capacity

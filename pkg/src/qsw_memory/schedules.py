"""Classical control-field schedules Omega(t) with analytic derivatives."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .fock import InvalidParameterError


class ScheduleKind(enum.Enum):
    LINEAR_RAMP = "linear"
    COSINE_RAMP = "cosine"
    HOLD = "hold"
    PIECEWISE_SAMPLES = "samples"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class PulseSchedule:
    """Omega(t) on [0, duration]; evaluated values are clamped outside."""

    kind: ScheduleKind
    duration: float
    omega_start: float = 0.0
    omega_end: float = 0.0
    times: Optional[Tuple[float, ...]] = None
    values: Optional[Tuple[float, ...]] = None
    parts: Tuple["PulseSchedule", ...] = field(default=())

    def __post_init__(self):
        if self.duration < 0 or not math.isfinite(self.duration):
            raise InvalidParameterError(f"schedule duration must be finite and >= 0, got {self.duration}")
        if self.kind is ScheduleKind.PIECEWISE_SAMPLES:
            t = np.asarray(self.times, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if t.shape != v.shape or t.size < 2:
                raise InvalidParameterError("sampled schedule needs matching times/values (>= 2)")
            if np.any(np.diff(t) <= 0) or t[0] != 0.0:
                raise InvalidParameterError("sample times must start at 0 and increase")
            if np.any(v < 0):
                raise InvalidParameterError("Rabi frequency samples must be >= 0")
        elif self.kind is ScheduleKind.COMPOSITE:
            if not self.parts:
                raise InvalidParameterError("composite schedule needs at least one part")
            for left, right in zip(self.parts, self.parts[1:]):
                if not math.isclose(left.end_value, right.start_value, rel_tol=1e-12, abs_tol=1e-12):
                    raise InvalidParameterError(
                        f"composite parts discontinuous: {left.end_value} -> {right.start_value}"
                    )
        elif min(self.omega_start, self.omega_end) < 0:
            raise InvalidParameterError("Rabi frequency must be >= 0")

    # constructors
    @classmethod
    def linear(cls, omega_start, omega_end, duration):
        return cls(ScheduleKind.LINEAR_RAMP, float(duration), float(omega_start), float(omega_end))

    @classmethod
    def cosine(cls, omega_start, omega_end, duration):
        return cls(ScheduleKind.COSINE_RAMP, float(duration), float(omega_start), float(omega_end))

    @classmethod
    def hold(cls, omega, duration):
        return cls(ScheduleKind.HOLD, float(duration), float(omega), float(omega))

    @classmethod
    def samples(cls, times: Sequence[float], values: Sequence[float]):
        times = tuple(float(t) for t in times)
        values = tuple(float(v) for v in values)
        return cls(ScheduleKind.PIECEWISE_SAMPLES, times[-1], values[0], values[-1], times, values)

    @classmethod
    def composite(cls, parts: Sequence["PulseSchedule"]):
        parts = tuple(parts)
        return cls(ScheduleKind.COMPOSITE, sum(p.duration for p in parts),
                   parts[0].start_value, parts[-1].end_value, parts=parts)

    @property
    def start_value(self) -> float:
        return float(self.omega(0.0))

    @property
    def end_value(self) -> float:
        return float(self.omega(self.duration))

    @property
    def max_value(self) -> float:
        if self.kind is ScheduleKind.PIECEWISE_SAMPLES:
            return float(max(self.values))
        if self.kind is ScheduleKind.COMPOSITE:
            return max(p.max_value for p in self.parts)
        return max(self.omega_start, self.omega_end)

    def _fraction(self, t):
        if self.duration == 0:
            return np.ones_like(t)
        return np.clip(t / self.duration, 0.0, 1.0)

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        kind = self.kind
        if kind is ScheduleKind.HOLD:
            out = np.full_like(t, self.omega_start)
        elif kind is ScheduleKind.LINEAR_RAMP:
            out = self.omega_start + (self.omega_end - self.omega_start) * self._fraction(t)
        elif kind is ScheduleKind.COSINE_RAMP:
            s = self._fraction(t)
            out = self.omega_end + (self.omega_start - self.omega_end) * 0.5 * (1.0 + np.cos(np.pi * s))
        elif kind is ScheduleKind.PIECEWISE_SAMPLES:
            out = np.interp(t, self.times, self.values)
        else:
            out = self._composite(t, "omega")
        return out if out.ndim else float(out)

    def omega_dot(self, t):
        t = np.asarray(t, dtype=float)
        kind = self.kind
        inside = (t >= 0) & (t <= self.duration)
        if kind is ScheduleKind.HOLD or self.duration == 0:
            out = np.zeros_like(t)
        elif kind is ScheduleKind.LINEAR_RAMP:
            out = np.where(inside, (self.omega_end - self.omega_start) / self.duration, 0.0)
        elif kind is ScheduleKind.COSINE_RAMP:
            s = self._fraction(t)
            rate = -(self.omega_start - self.omega_end) * 0.5 * np.pi / self.duration
            out = np.where(inside, rate * np.sin(np.pi * s), 0.0)
        elif kind is ScheduleKind.PIECEWISE_SAMPLES:
            tt = np.asarray(self.times)
            slopes = np.diff(self.values) / np.diff(tt)
            idx = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, len(slopes) - 1)
            out = np.where(inside, slopes[idx], 0.0)
        else:
            out = self._composite(t, "omega_dot")
        return out if out.ndim else float(out)

    def _composite(self, t, method):
        out = np.empty_like(t)
        offset = 0.0
        remaining = np.ones(t.shape, dtype=bool)
        for i, part in enumerate(self.parts):
            last = i == len(self.parts) - 1
            sel = remaining & ((t < offset + part.duration) | last)
            out[sel] = getattr(part, method)(t[sel] - offset)
            remaining &= ~sel
            offset += part.duration
        return out

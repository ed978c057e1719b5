"""Simulation clock shared by the emulated controllers and the adapters.

Two modes: realtime_scaled maps wall time to sim time through a scale
factor; stepped only advances on explicit step() calls, which is what the
deterministic tests and the scenario simulations use.
"""

from __future__ import annotations

import asyncio
import time

REALTIME_SCALED = "realtime_scaled"
STEPPED = "stepped"


class SimClock:
    def __init__(self, mode: str = REALTIME_SCALED, scale: float = 1.0):
        if mode not in (REALTIME_SCALED, STEPPED):
            raise ValueError(f"unknown clock mode {mode!r}")
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.mode = mode
        self.scale = scale
        self._stepped_now = 0.0
        self._wall_start: float | None = None
        self._advanced = asyncio.Event()

    def _wall(self) -> float:
        return time.monotonic()

    @property
    def now_s(self) -> float:
        if self.mode == STEPPED:
            return self._stepped_now
        if self._wall_start is None:
            self._wall_start = self._wall()
        return (self._wall() - self._wall_start) * self.scale

    def step(self, dt_s: float) -> None:
        """Advance sim time (stepped mode only) and wake waiters."""
        if self.mode != STEPPED:
            raise RuntimeError("step() is only valid in stepped mode")
        if dt_s <= 0:
            raise ValueError("dt_s must be positive")
        self._stepped_now += dt_s
        waiters, self._advanced = self._advanced, asyncio.Event()
        waiters.set()

    async def wait_until(self, t_s: float) -> None:
        if self.mode == STEPPED:
            while self._stepped_now < t_s:
                event = self._advanced
                if self._stepped_now >= t_s:
                    break
                await event.wait()
        else:
            remaining = (t_s - self.now_s) / self.scale
            if remaining > 0:
                await asyncio.sleep(remaining)

    async def sleep(self, duration_s: float) -> None:
        await self.wait_until(self.now_s + duration_s)

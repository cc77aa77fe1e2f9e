from __future__ import annotations

import asyncio
import contextlib
from typing import Any, AsyncIterator, Dict, List, Optional

ScanEvent = Dict[str, Any]

# sentinel ending every subscription
_CLOSED: ScanEvent = {"type": "bus.closed"}


class EventBus:
    """In-process fan-out of scan progress events to async subscribers."""

    def __init__(self) -> None:
        self._subscribers: List[asyncio.Queue] = []
        self._lock = asyncio.Lock()
        self._closed = False
        self.published = 0

    async def publish(self, event: ScanEvent) -> None:
        if self._closed:
            return
        self.published += 1
        async with self._lock:
            for q in list(self._subscribers):
                _offer(q, event)

    async def close(self) -> None:
        """Ends every open subscription once its queue drains."""
        self._closed = True
        async with self._lock:
            for q in list(self._subscribers):
                _offer(q, _CLOSED)

    async def subscribe(self, maxsize: int = 256) -> AsyncIterator[ScanEvent]:
        q: asyncio.Queue = asyncio.Queue(maxsize=maxsize)
        async with self._lock:
            if self._closed:
                return
            self._subscribers.append(q)
        try:
            while True:
                ev = await q.get()
                if ev is _CLOSED:
                    break
                yield ev
        finally:
            async with self._lock:
                with contextlib.suppress(ValueError):
                    self._subscribers.remove(q)

    async def wait_for_subscribers(self, count: int = 1, timeout: Optional[float] = 1.0) -> bool:
        """Yield to the loop until ``count`` subscribers registered (or timeout)."""
        loop = asyncio.get_running_loop()
        deadline = None if timeout is None else loop.time() + timeout
        while len(self._subscribers) < count:
            if deadline is not None and loop.time() >= deadline:
                return False
            await asyncio.sleep(0)
        return True


def _offer(q: asyncio.Queue, event: ScanEvent) -> None:
    try:
        q.put_nowait(event)
    except asyncio.QueueFull:
        # drop oldest to keep fresh
        with contextlib.suppress(asyncio.QueueEmpty, asyncio.QueueFull):
            q.get_nowait()
            q.put_nowait(event)

from __future__ import annotations

import asyncio

from twophoton.scan import EventBus


async def _drain(bus: EventBus, out: list, **kw) -> None:
    async for ev in bus.subscribe(**kw):
        out.append(ev)


def test_fan_out_reaches_every_subscriber():
    async def run():
        bus = EventBus()
        a, b = [], []
        tasks = [asyncio.create_task(_drain(bus, a)), asyncio.create_task(_drain(bus, b))]
        assert await bus.wait_for_subscribers(2)
        for i in range(3):
            await bus.publish({"type": "scan.point", "index": i})
        await bus.close()
        await asyncio.gather(*tasks)
        return bus, a, b

    bus, a, b = asyncio.run(run())
    assert [ev["index"] for ev in a] == [0, 1, 2]
    assert a == b
    assert bus.published == 3


def test_publish_after_close_is_ignored():
    async def run():
        bus = EventBus()
        await bus.close()
        await bus.publish({"type": "scan.started"})
        seen = []
        await _drain(bus, seen)
        return bus, seen

    bus, seen = asyncio.run(run())
    assert bus.published == 0
    assert seen == []


def test_slow_subscriber_keeps_newest_events():
    async def run():
        bus = EventBus()
        seen = []
        task = asyncio.create_task(_drain(bus, seen, maxsize=2))
        await bus.wait_for_subscribers()
        # no yield between publishes: the queue overflows
        for i in range(5):
            await bus.publish({"type": "scan.point", "index": i})
        await bus.close()
        await task
        return seen

    seen = asyncio.run(run())
    # the close sentinel displaced the oldest survivor
    assert [ev["index"] for ev in seen] == [4]


def test_wait_for_subscribers_times_out():
    async def run():
        return await EventBus().wait_for_subscribers(timeout=0.01)

    assert asyncio.run(run()) is False

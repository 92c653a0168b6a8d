"""Wall and CPU time accounting that includes worker processes."""
from __future__ import annotations

import os
import time

import psutil


class _CpuSnapshot:
    def __init__(self):
        me = psutil.Process()
        self.own = time.process_time()
        t = os.times()
        self.reaped = t.children_user + t.children_system
        self.live = {}
        for child in me.children(recursive=True):
            try:
                ct = child.cpu_times()
                self.live[child.pid] = ct.user + ct.system
            except psutil.Error:
                pass


def _cpu_delta(a: _CpuSnapshot, b: _CpuSnapshot) -> float:
    total = (b.own - a.own) + (b.reaped - a.reaped)
    for pid, cpu in b.live.items():
        total += cpu - a.live.get(pid, 0.0)
    # children alive at the start and reaped since are counted in full by
    # the reaped total; take off what they had already used
    for pid, cpu in a.live.items():
        if pid not in b.live:
            total -= cpu
    return max(total, 0.0)


def time_algorithm(fn, *args, **kwargs) -> tuple:
    """Run ``fn``; return (wall seconds, cpu seconds, result).

    CPU time sums this process, its live descendants and reaped children.
    """
    before = _CpuSnapshot()
    t0 = time.monotonic()
    result = fn(*args, **kwargs)
    wall = time.monotonic() - t0
    after = _CpuSnapshot()
    return wall, _cpu_delta(before, after), result

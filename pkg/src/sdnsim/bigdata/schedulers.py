"""Per-VM task schedulers.

Both schedulers track the remaining million instructions (MI) of every
resident task.  ``step(dt)`` advances them by ``dt`` seconds at the current
rates and returns the ids that finished; ``next_completion()`` gives the
time until the next one finishes at current rates.
"""

from __future__ import annotations

from collections import OrderedDict
from typing import Optional

_EPS = 1e-9


class VmScheduler:
    name = "abstract"

    def __init__(self, pes: int, mips_per_pe: float):
        self.pes = pes
        self.mips_per_pe = mips_per_pe
        self.remaining: OrderedDict[str, float] = OrderedDict()
        self._length: dict[str, float] = {}

    def submit(self, task_id: str, length_mi: float) -> None:
        self.remaining[task_id] = float(length_mi)
        self._length[task_id] = float(length_mi)

    def rates(self) -> dict[str, float]:
        raise NotImplementedError

    def used_mips(self) -> float:
        return sum(self.rates().values())

    def step(self, dt: float) -> list[str]:
        if dt < 0:
            raise ValueError(f"negative time step {dt}")
        done = []
        rates = self.rates()
        for task_id, rate in rates.items():
            left = self.remaining[task_id]
            if left <= _EPS * max(1.0, self._length[task_id]):
                done.append(task_id)
                continue
            if rate == 0 or dt == 0:
                continue
            after = left - rate * dt
            if after <= _EPS * max(1.0, self._length[task_id]) or left / rate <= dt:
                done.append(task_id)
            else:
                self.remaining[task_id] = after
        for task_id in done:
            del self.remaining[task_id]
            del self._length[task_id]
        return done

    def next_completion(self) -> Optional[float]:
        times = [self.remaining[t] / r for t, r in self.rates().items() if r > 0]
        return min(times) if times else None

    def __len__(self):
        return len(self.remaining)


class TimeShared(VmScheduler):
    """All resident tasks split the whole VM capacity equally."""

    name = "time_shared"

    def rates(self):
        if not self.remaining:
            return {}
        share = self.pes * self.mips_per_pe / len(self.remaining)
        return {t: share for t in self.remaining}


class SpaceShared(VmScheduler):
    """At most ``pes`` tasks run, one PE each; the rest wait in arrival order."""

    name = "space_shared"

    def rates(self):
        rates = {}
        for i, task_id in enumerate(self.remaining):
            rates[task_id] = self.mips_per_pe if i < self.pes else 0.0
        return rates


SCHEDULERS = {cls.name: cls for cls in (TimeShared, SpaceShared)}


def make_scheduler(name: str, pes: int, mips_per_pe: float) -> VmScheduler:
    try:
        return SCHEDULERS[name](pes, mips_per_pe)
    except KeyError:
        raise ValueError(f"unknown VM scheduler {name!r}") from None

"""Periodic task model.

Periods and deadlines are whole milliseconds.  Execution times are exact
rationals on a microsecond grid, so every instant the scheduler produces is an
integer number of microseconds (``US_PER_MS`` per millisecond).
"""

from dataclasses import dataclass, replace
from fractions import Fraction
from math import lcm

US_PER_MS = 1000

REGULAR = "regular"
CONTROLLER = "controller"

# Hyper-periods past this many milliseconds (~28 h) are refused; nothing in a
# sampling-period study needs them and the simulator would never finish.
HYPER_PERIOD_LIMIT_MS = 10**8


class HyperPeriodOverflow(ValueError):
    def __init__(self, periods):
        self.periods = tuple(periods)
        super().__init__(
            f"hyper-period of periods {self.periods} exceeds {HYPER_PERIOD_LIMIT_MS} ms"
        )


def _as_wcet(value):
    c = Fraction(value) if not isinstance(value, float) else Fraction(str(value))
    if (c * US_PER_MS).denominator != 1:
        raise ValueError(f"execution time {value} ms is not on the microsecond grid")
    return c


@dataclass(frozen=True)
class Task:
    """A periodic task.

    ``priority`` follows the convention that a lower number means a higher
    priority; ``None`` means not yet assigned.
    """

    id: str
    period: int
    wcet: Fraction
    deadline: int = None
    priority: int = None
    kind: str = REGULAR

    def __post_init__(self):
        if isinstance(self.period, bool) or not isinstance(self.period, int):
            raise TypeError(f"task {self.id}: period must be an integer number of ms")
        if self.period <= 0:
            raise ValueError(f"task {self.id}: period must be positive")
        object.__setattr__(self, "wcet", _as_wcet(self.wcet))
        if self.wcet <= 0:
            raise ValueError(f"task {self.id}: execution time must be positive")
        if self.deadline is None:
            object.__setattr__(self, "deadline", self.period)
        if isinstance(self.deadline, bool) or not isinstance(self.deadline, int):
            raise TypeError(f"task {self.id}: deadline must be an integer number of ms")
        if self.deadline <= 0:
            raise ValueError(f"task {self.id}: deadline must be positive")
        if self.kind not in (REGULAR, CONTROLLER):
            raise ValueError(f"task {self.id}: unknown kind {self.kind!r}")
        if self.kind == CONTROLLER and self.deadline != self.period:
            raise ValueError(f"controller {self.id}: deadline must equal period")

    @property
    def is_controller(self):
        return self.kind == CONTROLLER

    @property
    def utilization(self):
        return self.wcet / self.period

    def with_priority(self, priority):
        return replace(self, priority=priority)


@dataclass(frozen=True)
class TaskSet:
    tasks: tuple

    def __post_init__(self):
        tasks = tuple(self.tasks)
        object.__setattr__(self, "tasks", tasks)
        ids = [t.id for t in tasks]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate task ids in {ids}")
        prios = [t.priority for t in tasks if t.priority is not None]
        if len(set(prios)) != len(prios):
            raise ValueError(f"duplicate priorities in {prios}")
        n_ctrl = sum(t.is_controller for t in tasks)
        if n_ctrl != 1:
            raise ValueError(f"task set needs exactly one controller task, found {n_ctrl}")

    def __iter__(self):
        return iter(self.tasks)

    def __len__(self):
        return len(self.tasks)

    @property
    def controller(self):
        return next(t for t in self.tasks if t.is_controller)

    @property
    def regular(self):
        return tuple(t for t in self.tasks if not t.is_controller)

    def get(self, task_id):
        for t in self.tasks:
            if t.id == task_id:
                return t
        raise KeyError(task_id)

    def by_priority(self):
        if any(t.priority is None for t in self.tasks):
            raise ValueError("task set has unassigned priorities")
        return sorted(self.tasks, key=lambda t: t.priority)

    def higher_or_equal(self, priority):
        """Tasks whose priority is ``priority`` or higher, highest first."""
        return [t for t in self.by_priority() if t.priority <= priority]


def utilization(tasks, include_controller=True):
    """Sum of C_i / T_i as an exact fraction."""
    return sum(
        (t.utilization for t in tasks if include_controller or not t.is_controller),
        Fraction(0),
    )


def lcm_periods(periods):
    periods = list(periods)
    h = 1
    for p in periods:
        h = lcm(h, p)
        if h > HYPER_PERIOD_LIMIT_MS:
            raise HyperPeriodOverflow(periods)
    return h


def hyper_period(ts, upto_priority=None):
    """LCM of the periods of all tasks with priority at or above ``upto_priority``.

    Defaults to the controller's priority, i.e. the controller together with
    every task that can preempt it.
    """
    if upto_priority is None:
        upto_priority = ts.controller.priority
        if upto_priority is None:
            raise ValueError("controller priority is not assigned")
    return lcm_periods(t.period for t in ts.higher_or_equal(upto_priority))


def assign_rm_priorities(tasks, first=1):
    """Rate-monotonic priorities: shorter period first, ties broken by id."""
    ordered = sorted(tasks, key=lambda t: (t.period, t.id))
    return [t.with_priority(first + i) for i, t in enumerate(ordered)]

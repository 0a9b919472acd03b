"""Event-driven fixed-priority preemptive scheduling on one processor.

All releases are synchronous at t = 0.  Late jobs are never aborted: they run
to completion and later jobs of the same task queue behind them (FIFO).  Time
is integer microseconds throughout, so traces are exact and reproducible.
"""

import bisect
import csv
from collections import deque
from dataclasses import dataclass
from math import ceil

import numpy as np

from .taskmodel import US_PER_MS, TaskSet, hyper_period

# Hyper-periods simulated before declaring the backlog divergent.
MAX_HYPER_PERIODS = 64


class DivergenceError(RuntimeError):
    """The backlog never settles into a periodic steady state."""


@dataclass(frozen=True, slots=True)
class JobRecord:
    """One finished job.  Times are integer microseconds."""

    task: str
    index: int
    release: int
    deadline: int
    finish: int

    @property
    def missed(self):
        return self.finish > self.deadline

    @property
    def response(self):
        return self.finish - self.release


@dataclass(frozen=True)
class MissPattern:
    """Deadline outcome of the controller's jobs over one steady hyper-period."""

    bits: tuple

    def __len__(self):
        return len(self.bits)

    @property
    def misses(self):
        return sum(self.bits)


@dataclass(frozen=True)
class DelaySequence:
    """Delay factors over one steady hyper-period.

    ``p[i]`` is the delay factor observed at the deadline of the i-th
    controller job of the window (sampling instant ``i + 1``).  The sequence
    is periodic with period ``n_jobs``.
    """

    p: tuple

    @property
    def n_jobs(self):
        return len(self.p)

    @property
    def p_hat(self):
        return max(self.p)


@dataclass(frozen=True)
class WeaklyHardConstraint:
    m: int
    K: int

    def __post_init__(self):
        if self.K < 1 or not 0 <= self.m <= self.K:
            raise ValueError(f"invalid (m, K) = ({self.m}, {self.K})")

    def satisfied_by(self, pattern):
        return mine_mK(pattern, self.K) <= self.m


@dataclass(frozen=True)
class SteadyState:
    pattern: MissPattern
    delays: DelaySequence
    records: tuple  # controller jobs of the steady window, times relative to its start
    window_start: int  # microseconds
    hyper_period: int  # milliseconds
    worst_response: int  # microseconds
    transient_windows: int


class _Engine:
    """Incremental simulator state; tasks are given highest priority first."""

    def __init__(self, tasks):
        self.ids = [t.id for t in tasks]
        self.period = [t.period * US_PER_MS for t in tasks]
        self.deadline = [t.deadline * US_PER_MS for t in tasks]
        self.wcet = [int(t.wcet * US_PER_MS) for t in tasks]
        self.n = len(tasks)
        self.next_release = [0] * self.n
        self.next_index = [0] * self.n
        self.pending = [deque() for _ in range(self.n)]  # [index, release, remaining]
        self.t = 0
        self.records = [[] for _ in range(self.n)]

    def _release_due(self):
        t = self.t
        for i in range(self.n):
            while self.next_release[i] <= t:
                self.pending[i].append([self.next_index[i], self.next_release[i], self.wcet[i]])
                self.next_index[i] += 1
                self.next_release[i] += self.period[i]

    def advance_to(self, t_stop, until_done=None):
        """Run until ``t_stop``; releases at exactly ``t_stop`` are not made.

        With ``until_done=(task, index)`` the run instead continues until that
        job has finished; ``t_stop`` is then a safety limit.
        """
        pending, records = self.pending, self.records
        while True:
            if until_done is None:
                if self.t >= t_stop:
                    return
            else:
                i_task, idx = until_done
                recs = records[i_task]
                if recs and recs[-1].index >= idx:
                    return
                if self.t >= t_stop:
                    raise DivergenceError(
                        f"job {idx} of task {self.ids[i_task]} unfinished at "
                        f"t = {self.t / US_PER_MS} ms"
                    )
            self._release_due()
            nr = min(self.next_release)
            limit = min(nr, t_stop)
            for i in range(self.n):
                if pending[i]:
                    break
            else:
                self.t = limit
                continue
            job = pending[i][0]
            end = self.t + job[2]
            if end <= limit:
                self.t = end
                pending[i].popleft()
                records[i].append(
                    JobRecord(self.ids[i], job[0], job[1], job[1] + self.deadline[i], end)
                )
            else:
                job[2] -= limit - self.t
                self.t = limit

    def snapshot(self):
        """Backlog relative to the current instant (used at hyper-period boundaries)."""
        t = self.t
        return tuple(
            tuple((job[1] - t, job[2]) for job in q) for q in self.pending
        )


def _ordered(tasks):
    tasks = list(tasks)
    if any(t.priority is None for t in tasks):
        raise ValueError("all tasks need an assigned priority")
    prios = [t.priority for t in tasks]
    if len(set(prios)) != len(prios):
        raise ValueError(f"duplicate priorities {prios}")
    return sorted(tasks, key=lambda t: t.priority)


def simulate_schedule(tasks, horizon):
    """Trace every job released in ``[0, horizon)`` (horizon in ms).

    The simulation runs past the horizon, with later releases still competing
    for the processor, until each of those jobs has completed.  Records come
    back grouped by priority, in release order within each task.
    """
    ordered = _ordered(tasks)
    eng = _Engine(ordered)
    h_us = horizon * US_PER_MS
    guard = MAX_HYPER_PERIODS * max(h_us, max(eng.period))
    for i in range(len(ordered)):
        last = ceil(h_us / eng.period[i]) - 1
        if last >= 0:
            eng.advance_to(guard, until_done=(i, last))
    out = []
    for recs in eng.records:
        out.extend(r for r in recs if r.release < h_us)
    return out


def steady_state_pattern(ts, max_hyper_periods=MAX_HYPER_PERIODS):
    """Controller miss pattern and delay factors over a steady hyper-period.

    Only the controller and tasks that can preempt it are simulated.  Windows
    of one hyper-period are simulated until the backlog at two consecutive
    window boundaries coincides; the window that follows is reported.
    """
    if not isinstance(ts, TaskSet):
        ts = TaskSet(tuple(ts))
    ctrl = ts.controller
    H = hyper_period(ts)
    subset = ts.higher_or_equal(ctrl.priority)
    eng = _Engine(subset)
    ci = len(subset) - 1
    H_us = H * US_PER_MS
    Tc_us = ctrl.period * US_PER_MS
    n_jobs = H // ctrl.period

    prev = eng.snapshot()
    for b in range(1, max_hyper_periods + 1):
        eng.advance_to(b * H_us)
        snap = eng.snapshot()
        if snap == prev:
            break
        prev = snap
    else:
        raise DivergenceError(
            f"controller {ctrl.id} (T={ctrl.period} ms) shows no steady state within "
            f"{max_hyper_periods} hyper-periods of {H} ms"
        )

    start = b * H_us
    first = b * n_jobs
    eng.advance_to((b + max_hyper_periods) * H_us, until_done=(ci, first + n_jobs - 1))
    recs = eng.records[ci]
    finishes = [r.finish for r in recs]

    window = recs[first : first + n_jobs]
    assert [r.index for r in window] == list(range(first, first + n_jobs))
    bits = tuple(r.missed for r in window)
    p = []
    for i in range(n_jobs):
        t = start + (i + 1) * Tc_us
        # FIFO: finish times are increasing in job index.
        j = bisect.bisect_right(finishes, t) - 1
        if j < 0:
            raise DivergenceError("no controller output available at a steady deadline")
        p.append(first + i + 1 - recs[j].index)

    rel = tuple(
        JobRecord(r.task, r.index - first, r.release - start, r.deadline - start, r.finish - start)
        for r in window
    )
    return SteadyState(
        pattern=MissPattern(bits),
        delays=DelaySequence(tuple(p)),
        records=rel,
        window_start=start,
        hyper_period=H,
        worst_response=max(r.response for r in window),
        transient_windows=b - 1,
    )


def mine_mK(pattern, K):
    """Smallest m such that every K consecutive jobs contain at most m misses.

    The pattern is treated as periodic, so windows wrap around its end.
    """
    bits = np.asarray(pattern.bits if isinstance(pattern, MissPattern) else pattern, dtype=int)
    n = len(bits)
    if n == 0:
        raise ValueError("empty miss pattern")
    if K < 1:
        raise ValueError("K must be positive")
    reps = -(-K // n) + 1
    ext = np.concatenate([[0], np.cumsum(np.tile(bits, reps))])
    starts = np.arange(n)
    return int(np.max(ext[starts + K] - ext[starts]))


def worst_response_time(records, task_id):
    resp = [r.finish - r.release for r in records if r.task == task_id]
    if not resp:
        raise KeyError(f"no records for task {task_id!r}")
    return max(resp)


def delay_bound(worst_response_us, period_ms):
    """ceil(R / T) for a response time in microseconds."""
    return -(-worst_response_us // (period_ms * US_PER_MS))


@dataclass(frozen=True)
class Placement:
    feasible: bool
    taskset: TaskSet = None
    position: int = None  # number of regular tasks above the controller
    violated: str = None  # regular task that misses when the controller is lowest


def _regular_misses(ts):
    """First regular task (by priority) that misses a deadline, or None.

    With synchronous release and deadlines not exceeding periods, the job
    released at t = 0 sees the worst interference (critical instant), so a
    task meets every deadline iff its first job does.  Only the first job of
    each task is simulated.
    """
    ordered = ts.by_priority()
    if any(t.deadline > t.period for t in ordered if not t.is_controller):
        # Critical-instant shortcut does not hold; check full hyper-periods.
        return _regular_misses_full(ts)
    eng = _Engine(ordered)
    for i, t in enumerate(ordered):
        if t.is_controller:
            continue
        d = t.deadline * US_PER_MS
        eng.advance_to(d)
        recs = eng.records[i]
        if not recs or recs[0].finish > d:
            return t.id
    return None


def _regular_misses_full(ts):
    ordered = ts.by_priority()
    H = max(hyper_period(ts, t.priority) for t in ordered)
    recs = simulate_schedule(ordered, 2 * H)
    for t in ordered:
        if t.is_controller:
            continue
        if any(r.missed for r in recs if r.task == t.id):
            return t.id
    return None


def place_controller_priority(regular, ctrl):
    """Insert the controller at the highest priority keeping all regular tasks hard.

    ``regular`` must already be priority-ordered (e.g. rate monotonic).
    Positions are tried from the top; priorities are renumbered 1..n+1.
    """
    regular = sorted(regular, key=lambda t: t.priority if t.priority is not None else 0)
    violated = None
    for pos in range(len(regular) + 1):
        order = regular[:pos] + [ctrl] + regular[pos:]
        ts = TaskSet(tuple(t.with_priority(i + 1) for i, t in enumerate(order)))
        violated = _regular_misses(ts)
        if violated is None:
            return Placement(True, ts, pos)
    return Placement(False, violated=violated)


def write_trace_csv(records, path_or_file):
    """Per-job trace, times in milliseconds."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "index", "release", "finish", "deadline", "missed"])
        for r in records:
            w.writerow([
                r.task,
                r.index,
                _ms(r.release),
                _ms(r.finish),
                _ms(r.deadline),
                int(r.missed),
            ])
    finally:
        if own:
            fh.close()


def _ms(us):
    q, r = divmod(us, US_PER_MS)
    return str(q) if r == 0 else f"{us / US_PER_MS:.3f}"

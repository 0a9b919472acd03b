"""A two-task schedule small enough to check by hand.

A high-priority task (T = 4 ms, C = 2 ms) shares the CPU with a controller
(T = 6 ms, C = 3 ms).  Over the 12 ms hyper-period the controller's first
job is preempted twice and finishes at 7 ms, one millisecond late; the
second job finishes exactly on its deadline.
"""

from weaklyhard.scheduler import mine_mK, simulate_schedule, steady_state_pattern
from weaklyhard.taskmodel import CONTROLLER, Task, TaskSet

ts = TaskSet(
    (
        Task("hi", 4, 2, priority=1),
        Task("ctrl", 6, 3, priority=2, kind=CONTROLLER),
    )
)

print("job trace over one hyper-period (ms):")
for r in sorted(simulate_schedule(ts.tasks, 12), key=lambda r: (r.release, r.task)):
    flag = "MISS" if r.missed else "ok"
    print(f"  {r.task:>4} #{r.index}  release {r.release / 1000:>4g}  "
          f"finish {r.finish / 1000:>4g}  deadline {r.deadline / 1000:>4g}  {flag}")

ss = steady_state_pattern(ts)
print()
print("steady-state miss pattern:", ["miss" if b else "met" for b in ss.pattern.bits])
# At t = 6 the newest finished output is from before the window's first job,
# so the plant is driven by a command two samples old; at t = 12 it is fresh.
print("delay factors p_k:", ss.delays.p, " p_hat =", ss.delays.p_hat)
print("worst response time:", ss.worst_response / 1000, "ms")

# The pattern repeats forever: miss, met, miss, met, ...
for K in (1, 2, 3, 10):
    print(f"tightest (m, K) with K = {K}: m = {mine_mK(ss.pattern, K)}")

"""Co-design of a control task and a fixed-priority schedule under weakly-hard deadlines.

Modules:

- :mod:`numerics`: matrix exponential, eigenvalues, DARE and LQR gains
- :mod:`taskmodel`: periodic tasks, task sets, hyper-periods
- :mod:`scheduler`: preemptive fixed-priority simulation, miss patterns, (m, K) mining
- :mod:`control`: ZOH discretization, LET augmentation, norm-bounded LQR
- :mod:`stability`: hyper-period switched-system stability test
- :mod:`perfsim`: closed-loop simulation and control cost
- :mod:`config`, :mod:`sweep`, :mod:`cli`: study configuration and period sweep
"""

__version__ = "0.1.0"

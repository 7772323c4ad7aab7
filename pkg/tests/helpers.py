"""Shared constants and small utilities for the test-suite."""

import dataclasses

REFERENCE_DT = 1.0 / 512
REFERENCE_T_END = 0.5

# filled by the acceptance tests, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def subsample(traj, stride: int):
    """Trajectory restricted to every ``stride``-th monitor time."""
    return dataclasses.replace(
        traj,
        times=traj.times[::stride],
        moments=traj.moments[::stride],
        densities=traj.densities[::stride],
        casimir=traj.casimir[::stride],
        decay_ratios=traj.decay_ratios[::stride],
    )


def order_or_floor(coarse: float, fine: float, ratio: float, floor: float) -> bool:
    """True when ``coarse / fine >= ratio`` or both values already sit at the round-off ``floor``."""
    if coarse <= floor and fine <= floor:
        return True
    return fine > 0 and coarse / fine >= ratio

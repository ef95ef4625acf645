"""
Low-storage explicit Runge-Kutta time integration.

Carpenter-Kennedy five-stage fourth-order scheme in 2N-storage form, and a
fixed-final-time driver shared by the full and reduced models.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import PositivityError

logger = logging.getLogger(__name__)

_RK4A = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
]

_RK4B = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
]

_RK4C = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
]

Rhs = Callable[[float, np.ndarray], np.ndarray]
Observer = Callable[[int, float, float, np.ndarray], None]


class LowStorageRK45:
    """Carpenter-Kennedy LSRK4(5)"""

    stages = 5
    order = 4

    def step(
        self,
        y: np.ndarray,
        t: float,
        dt: float,
        rhs: Rhs,
        after_first_stage: Optional[Callable[[], None]] = None,
    ) -> np.ndarray:
        residual = np.zeros_like(y)
        for i, (a, b, c) in enumerate(zip(_RK4A, _RK4B, _RK4C)):
            residual = a * residual + dt * rhs(t + c * dt, y)
            if i == 0 and after_first_stage is not None:
                after_first_stage()
            y = y + b * residual
        return y


def cfl_step(cfl: float, dx: float, wavespeed: float) -> float:
    """CFL step ``cfl * dx / wavespeed``; infinite when nothing moves."""
    if not wavespeed > 0.0:
        return np.inf
    return cfl * dx / wavespeed


def integrate(
    y0: np.ndarray,
    rhs: Rhs,
    final_time: float,
    dt_rule: Callable[[np.ndarray], float],
    stride: int = 1,
    fixed_dt: Optional[float] = None,
    max_steps: Optional[int] = None,
    observer: Optional[Observer] = None,
) -> Tuple[List[float], List[np.ndarray], int]:
    """Advance y0 to final_time, recording every ``stride`` steps and the final state.

    Args:
        y0: Initial state
        rhs: rhs(t, y) -> dy/dt
        final_time: End time; the last step is clipped to hit it exactly
        dt_rule: Stable step for state y (ignored when fixed_dt is given)
        stride: Recording stride in steps
        fixed_dt: Constant step size
        max_steps: Optional cap on the number of steps
        observer: Called as observer(step, t, dt, y) right after the first
            RK stage of every step, i.e. with the RHS just evaluated at y

    Returns:
        (times, states, steps_taken)

    Raises:
        PositivityError: annotated with the step number and time
    """
    stepper = LowStorageRK45()
    t = 0.0
    y = np.array(y0, dtype=np.float64, copy=True)
    times, states = [t], [y.copy()]
    steps = 0
    t_eps = 1e-14 * max(final_time, 1.0)

    while final_time - t > t_eps:
        if max_steps is not None and steps >= max_steps:
            break
        dt = fixed_dt if fixed_dt is not None else dt_rule(y)
        if not dt > 0.0:
            raise ValueError(f"invalid time step {dt} at t = {t}")
        # an infinite step covers the rest of the interval
        last = t + dt >= final_time - t_eps
        if last:
            dt = final_time - t

        hook = None
        if observer is not None:
            step_now, t_now, dt_now, y_now = steps, t, dt, y
            hook = lambda: observer(step_now, t_now, dt_now, y_now)  # noqa: E731

        try:
            y = stepper.step(y, t, dt, rhs, after_first_stage=hook)
        except PositivityError as e:
            raise e.at_step(steps + 1, t) from e

        steps += 1
        t = final_time if last else t + dt
        if steps % stride == 0 or last:
            times.append(t)
            states.append(y.copy())

    if times[-1] != t:
        times.append(t)
        states.append(y.copy())
    logger.debug("integrated %d steps to t = %.6g", steps, t)
    return times, states, steps

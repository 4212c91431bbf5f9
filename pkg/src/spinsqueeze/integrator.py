"""Adaptive embedded Runge-Kutta driver shared by the density-matrix and
moment integrators."""
from __future__ import annotations

import numpy as np
from scipy.integrate import DOP853, RK45

_METHODS = {"DOP853": DOP853, "RK45": RK45}


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last good time {last_time:.6g} s)")
        self.last_time = last_time


def check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at >= 0 and increase strictly")
    return times


def integrate(fun, y0: np.ndarray, times: np.ndarray, on_output, rtol: float, atol: float,
              method: str = "DOP853") -> int:
    """Drive an embedded Runge-Kutta pair, calling ``on_output(k, y)`` per time.

    Outputs between steps come from the solver's dense interpolant, so the
    step sequence does not depend on the output grid. Returns accepted steps.
    """
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(_METHODS)}")
    on_output(0, y0)
    if times.size == 1:
        return 0
    solver = _METHODS[method](fun, times[0], y0, times[-1], rtol=rtol, atol=atol)
    k, steps = 1, 0
    while k < times.size:
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed: {message}", solver.t_old or times[0])
        steps += 1
        if solver.t >= times[k]:
            dense = solver.dense_output()
            while k < times.size and times[k] <= solver.t:
                y = solver.y if times[k] == solver.t else dense(times[k])
                on_output(k, y)
                k += 1
    return steps

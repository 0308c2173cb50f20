"""Regulation metrics computed from uniformly sampled traces.

Conventions: the settling band is a fraction of the step magnitude
``|target - signal[0]|`` (falling back to ``|target|`` when the signal starts
on target), integrals use the trapezoidal rule, and the steady-state value is
the RMS of the error over a trailing window.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

DEFAULT_BAND = 0.02
DEFAULT_WINDOW = 1.0


@dataclass(frozen=True)
class Settling:
    time: float
    settled: bool


@dataclass(frozen=True)
class IntegralIndices:
    ISE: float
    IAE: float
    ITSE: float
    ITAE: float


def _check_grid(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape:
        raise ValueError("time grid and signal must be 1-d arrays of equal length")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("time grid must be strictly increasing")
    return t, y


def band_width(signal, target, band_pct=DEFAULT_BAND, reference=None) -> float:
    """Half-width of the settling band around ``target``."""
    ref = reference
    if ref is None:
        ref = abs(target - float(np.asarray(signal)[0]))
        if ref == 0.0:
            ref = abs(target)
    return band_pct * ref


def settling_time(t, signal, target, band_pct=DEFAULT_BAND, reference=None) -> Settling:
    """Earliest time after which ``signal`` stays within the band for good.

    A signal still outside the band at the last sample is reported as
    unsettled with ``time = inf``.
    """
    t, y = _check_grid(t, signal)
    width = band_width(y, target, band_pct, reference)
    outside = np.abs(y - target) > width
    if not outside.any():
        return Settling(float(t[0]), True)
    last = int(np.flatnonzero(outside)[-1])
    if last == y.size - 1:
        return Settling(math.inf, False)
    return Settling(float(t[last + 1]), True)


def overshoot(signal, target, initial=None) -> tuple[float, bool]:
    """Percent overshoot past ``target`` and a flag that is True when ``target == 0``.

    The excursion is measured in the direction of travel, from ``initial``
    (default: the first sample) towards the target.  For a zero target the
    absolute excursion is returned instead of a percentage.
    """
    y = np.asarray(signal, dtype=float)
    y0 = float(y[0]) if initial is None else float(initial)
    direction = 1.0 if target >= y0 else -1.0
    excess = max(0.0, float(np.max(direction * (y - target))))
    if target == 0.0:
        return excess, True
    return 100.0 * excess / abs(target), False


def _trapezoid(y, t):
    if t.size < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def integral_indices(t, error) -> IntegralIndices:
    t, e = _check_grid(t, error)
    e2 = e * e
    ae = np.abs(e)
    return IntegralIndices(ISE=_trapezoid(e2, t), IAE=_trapezoid(ae, t),
                           ITSE=_trapezoid(t * e2, t), ITAE=_trapezoid(t * ae, t))


def steady_state_norm(t, error, window=DEFAULT_WINDOW) -> float:
    """RMS of ``error`` over the trailing ``window`` seconds."""
    t, e = _check_grid(t, error)
    if window <= 0:
        raise ValueError("window must be positive")
    if window > t[-1] - t[0] + 1e-12:
        raise ValueError("window longer than the trace")
    tail = e[t >= t[-1] - window - 1e-12]
    return float(np.sqrt(np.mean(tail * tail)))


@dataclass(frozen=True)
class MetricsReport:
    settling_time_tip: float
    settling_time_joint: float
    settled_tip: bool
    settled_joint: bool
    overshoot_pct: float
    steady_state_norm_tip: float
    steady_state_norm_joint: float
    tip: IntegralIndices
    joint: IntegralIndices

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity
        for k in ("settling_time_tip", "settling_time_joint"):
            if not math.isfinite(d[k]):
                d[k] = None
        return d


def compute_metrics(trace, band_pct=DEFAULT_BAND, window=DEFAULT_WINDOW) -> MetricsReport:
    """Tip and joint metrics of a :class:`~flexlink.sim.SimTrace`."""
    td = trace.theta_d
    ref = abs(td - float(trace.theta_t[0])) or abs(td)
    st_tip = settling_time(trace.t, trace.theta_t, td, band_pct, ref)
    st_joint = settling_time(trace.t, trace.theta_c, td, band_pct, ref)
    e_tip = trace.theta_t - td
    e_joint = trace.theta_c - td
    win = min(window, float(trace.t[-1] - trace.t[0])) or None
    return MetricsReport(
        settling_time_tip=st_tip.time, settling_time_joint=st_joint.time,
        settled_tip=st_tip.settled, settled_joint=st_joint.settled,
        overshoot_pct=overshoot(trace.theta_t, td)[0],
        steady_state_norm_tip=steady_state_norm(trace.t, e_tip, win) if win else float(abs(e_tip[-1])),
        steady_state_norm_joint=steady_state_norm(trace.t, e_joint, win) if win else float(abs(e_joint[-1])),
        tip=integral_indices(trace.t, e_tip),
        joint=integral_indices(trace.t, e_joint),
    )

"""Nested non-singular terminal sliding-mode controller for a fourth-order chain.

The plant seen by the controller is the canonical chain
``z1' = z2, z2' = z3, z3' = z4, z4' = f(z) + u + delta`` with ``f(z) = -f . z``.
Starting from the position error ``s0 = z1 - z_d1`` three surfaces are stacked,

    s_{i+1} = s_i' + alpha_i s_i + kappa_i1 phi_eps(s_i) + kappa_i2 |s_i|^gamma2 sgn(s_i),

and the last one is driven to zero by a fixed-time reaching law.  The time
derivatives needed by the stack are obtained by propagating truncated Taylor
series of the error through the recursion (see :mod:`flexlink.taylor`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import taylor

# below this magnitude the higher derivatives of |s|^gamma sgn(s) are set to 0
POWER_CLAMP = 1e-12


@dataclass(frozen=True)
class ControllerGains:
    alpha: tuple[float, float, float] = (2.0, 2.0, 2.0)
    kappa1: tuple[float, float, float] = (1.0, 1.0, 1.0)
    kappa2: tuple[float, float, float] = (2.0, 2.0, 2.0)
    gamma1: float = 0.6
    gamma2: float = 2.0
    eps: float = 0.05
    c1: float = 15.0
    c2: float = 15.0
    p: float = 0.6
    q: float = 1.5
    eta: float = 0.6
    d_bar: float = 0.5
    boundary_layer: float = 1e-4

    def __post_init__(self):
        for name in ("alpha", "kappa1", "kappa2"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 3 or min(v) <= 0:
                raise ValueError(f"{name} must hold three positive gains, got {v}")
            object.__setattr__(self, name, v)
        if not 0 < self.gamma1 < 1 < self.gamma2:
            raise ValueError("need 0 < gamma1 < 1 < gamma2")
        if not 0 < self.p < 1 < self.q:
            raise ValueError("need 0 < p < 1 < q")
        if not (self.eps > 0 and self.c1 > 0 and self.c2 > 0):
            raise ValueError("eps, c1 and c2 must be positive")
        if not self.eta > self.d_bar >= 0:
            raise ValueError(f"switching gain eta={self.eta} must exceed the "
                             f"disturbance bound d_bar={self.d_bar}")
        if self.boundary_layer < 0:
            raise ValueError("boundary_layer must be non-negative")


@dataclass(frozen=True)
class SurfaceStack:
    """Surface values ``s0..s3`` and the feed-forward term ``Phi``.

    ``series[i]`` keeps the Taylor coefficients of ``s_i`` computed with the
    highest-derivative channel ``z4'`` set to zero; ``Phi`` is ``series[3][1]``.
    """

    s: tuple[float, float, float, float]
    phi: float
    series: tuple = field(repr=False, default=())


# --- scalar maps ---------------------------------------------------------------

def phi_eps(x, gamma1, eps):
    """Smooth surrogate of ``|x|^gamma1 sgn(x)``, linear near the origin."""
    return x * (x * x + eps * eps) ** ((gamma1 - 1.0) / 2.0)


def phi_eps_derivative(x, gamma1, eps, order):
    """Exact derivatives of :func:`phi_eps` of order 1, 2 or 3."""
    a = (gamma1 - 1.0) / 2.0
    e2 = eps * eps
    x2 = x * x
    r = x2 + e2
    if order == 1:
        return r ** (a - 1.0) * (gamma1 * x2 + e2)
    if order == 2:
        return (gamma1 - 1.0) * x * r ** (a - 2.0) * (gamma1 * x2 + 3.0 * e2)
    if order == 3:
        return (gamma1 - 1.0) * r ** (a - 3.0) * (
            (gamma1 - 2.0) * (gamma1 * x2 * x2 + 6.0 * e2 * x2) + 3.0 * e2 * e2)
    raise ValueError(f"order must be 1, 2 or 3, got {order}")


def sig(x, gamma):
    """Signed power ``|x|^gamma sgn(x)``."""
    return math.copysign(abs(x) ** gamma, x) if x != 0.0 else 0.0


def sig_derivative(x, gamma, order):
    ax = abs(x)
    if order == 1:
        return gamma * ax ** (gamma - 1.0) if ax > 0.0 else (0.0 if gamma > 1.0 else math.inf)
    if ax < POWER_CLAMP:
        return 0.0
    coef = gamma
    for k in range(1, order):
        coef *= gamma - k
    if coef == 0.0:
        return 0.0
    v = coef * ax ** (gamma - order)
    # even orders are odd functions of x
    return math.copysign(v, x) if order % 2 == 0 else v


def sgn_reg(s, boundary_layer):
    """``s / (|s| + delta)``; the pure sign when ``delta == 0``."""
    if boundary_layer > 0.0:
        return s / (abs(s) + boundary_layer)
    return float(np.sign(s))


def phi_eps_jet(x, gamma1, eps, n):
    """``[phi, phi', ...]`` up to order ``n - 1`` (at most 3), sharing one power."""
    e2 = eps * eps
    x2 = x * x
    r = x2 + e2
    rp = r ** ((gamma1 - 1.0) / 2.0 - 3.0)  # r^(a-3)
    r2 = r * r
    out = [x * rp * r2 * r]
    if n > 1:
        out.append(rp * r2 * (gamma1 * x2 + e2))
    if n > 2:
        out.append((gamma1 - 1.0) * x * rp * r * (gamma1 * x2 + 3.0 * e2))
    if n > 3:
        out.append((gamma1 - 1.0) * rp * ((gamma1 - 2.0) * (gamma1 * x2 * x2 + 6.0 * e2 * x2)
                                          + 3.0 * e2 * e2))
    return out


def _stage_derivs(x, i, g: ControllerGains, n):
    """Value and first n-1 derivatives of the stage map used in surface i+1."""
    a, k1, k2 = g.alpha[i], g.kappa1[i], g.kappa2[i]
    jet = phi_eps_jet(x, g.gamma1, g.eps, n)
    out = [a * x + k1 * jet[0] + k2 * sig(x, g.gamma2)]
    for order in range(1, n):
        out.append(k1 * jet[order] + k2 * sig_derivative(x, g.gamma2, order))
    out[1] += a
    return out


# --- surfaces and control ------------------------------------------------------

def build_surfaces(z, z_d, gains: ControllerGains) -> SurfaceStack:
    """Nested surfaces for a constant set-point ``z_d`` (so ``z_d' = 0``)."""
    z1, z2, z3, z4 = z
    e = [float(z1 - z_d[0]), float(z2), z3 / 2.0, z4 / 6.0, 0.0]
    series = [e]
    s = e
    for i in range(3):
        n = len(s) - 1
        h = taylor.compose(s[:n], _stage_derivs(s[0], i, gains, n))
        # s_{i+1} = s_i' + h(s_i), coefficientwise
        s = [(k + 1) * s[k + 1] + h[k] for k in range(n)]
        series.append(s)
    return SurfaceStack(s=tuple(c[0] for c in series), phi=series[3][1], series=tuple(series))


def _power_jet(x, gamma, n):
    """``[sig(x), sig'(x), ...]`` up to order ``n - 1``."""
    ax = abs(x)
    if ax < POWER_CLAMP:
        # higher orders are clamped to 0 here, and ax**(gamma - n + 1) could overflow
        if ax == 0.0:
            out = [0.0, 0.0 if gamma > 1.0 else math.inf]
        else:
            out = [math.copysign(ax ** gamma, x), gamma * ax ** (gamma - 1.0)]
        return (out + [0.0] * n)[:n]
    p = ax ** (gamma - n + 1.0)  # lowest power needed, multiplied up below
    vals = []
    coef = 1.0
    for order in range(n):
        v = coef * p * ax ** (n - 1 - order)
        if order >= 2 and (ax < POWER_CLAMP or coef == 0.0):
            v = 0.0
        vals.append(math.copysign(v, x) if order % 2 == 0 else v)
        coef *= gamma - order
    return vals


def surfaces_fast(z, z_d1, gains: ControllerGains):
    """``(s0, s1, s2, s3, Phi)``; unrolled form of :func:`build_surfaces`."""
    g1, eps, g2 = gains.gamma1, gains.eps, gains.gamma2
    al, ka, kb = gains.alpha, gains.kappa1, gains.kappa2
    # stage 0: e series (4 derivative orders)
    a0, a1, a2, a3 = z[0] - z_d1, z[1], z[2] / 2.0, z[3] / 6.0
    ph = phi_eps_jet(a0, g1, eps, 4)
    pw = _power_jet(a0, g2, 4)
    d0 = al[0] * a0 + ka[0] * ph[0] + kb[0] * pw[0]
    d1 = al[0] + ka[0] * ph[1] + kb[0] * pw[1]
    d2 = ka[0] * ph[2] + kb[0] * pw[2]
    d3 = ka[0] * ph[3] + kb[0] * pw[3]
    b0 = a1 + d0
    b1 = 2.0 * a2 + d1 * a1
    b2 = 3.0 * a3 + d1 * a2 + 0.5 * d2 * a1 * a1
    b3 = d1 * a3 + d2 * a1 * a2 + d3 * a1 * a1 * a1 / 6.0
    # stage 1
    ph = phi_eps_jet(b0, g1, eps, 3)
    pw = _power_jet(b0, g2, 3)
    d0 = al[1] * b0 + ka[1] * ph[0] + kb[1] * pw[0]
    d1 = al[1] + ka[1] * ph[1] + kb[1] * pw[1]
    d2 = ka[1] * ph[2] + kb[1] * pw[2]
    c0 = b1 + d0
    c1 = 2.0 * b2 + d1 * b1
    c2 = 3.0 * b3 + d1 * b2 + 0.5 * d2 * b1 * b1
    # stage 2
    ph = phi_eps_jet(c0, g1, eps, 2)
    pw = _power_jet(c0, g2, 2)
    d0 = al[2] * c0 + ka[2] * ph[0] + kb[2] * pw[0]
    d1 = al[2] + ka[2] * ph[1] + kb[2] * pw[1]
    return a0, b0, c0, c1 + d0, 2.0 * c2 + d1 * c1


def feedforward_phi(z, z_d, gains: ControllerGains) -> float:
    """Time derivative of ``s3`` with the ``z4'`` channel removed."""
    return build_surfaces(z, z_d, gains).phi


def reaching_term(s3, gains: ControllerGains, boundary_layer=None) -> float:
    """``c1 sig^p(s3) + c2 sig^q(s3) + eta sgn(s3)``, the part ``u`` subtracts.

    With a positive boundary layer ``delta`` the ``p < 1`` power is smoothed to
    ``s3 (s3^2 + delta^2)^((p-1)/2)``.  Its slope at the origin is then finite;
    the pure power has infinite slope there, and at a fixed step that turns
    rounding noise into a sample-rate limit cycle.
    """
    bl = gains.boundary_layer if boundary_layer is None else boundary_layer
    low = sig(s3, gains.p) if bl == 0.0 else s3 * (s3 * s3 + bl * bl) ** ((gains.p - 1.0) / 2.0)
    return gains.c1 * low + gains.c2 * sig(s3, gains.q) + gains.eta * sgn_reg(s3, bl)


def control_with_surfaces(z_hat, z_d, gains: ControllerGains, f_coeffs, boundary_layer=None):
    """Control input together with ``(s0, s1, s2, s3, Phi)``."""
    zl = [float(v) for v in z_hat]
    if not all(math.isfinite(v) for v in zl):
        raise FloatingPointError(f"non-finite state passed to the controller: {zl}")
    surf = surfaces_fast(zl, float(z_d[0]), gains)
    f_z = -sum(float(fi) * zi for fi, zi in zip(f_coeffs, zl))
    u = -f_z - surf[4] - reaching_term(surf[3], gains, boundary_layer)
    return u, surf


def control_law(z_hat, z_d, gains: ControllerGains, f_coeffs, boundary_layer=None) -> float:
    """Composite NNTSM input computed from the estimated canonical state."""
    return control_with_surfaces(z_hat, z_d, gains, f_coeffs, boundary_layer)[0]


# --- settling-time bounds --------------------------------------------------------

def fixed_time_bound(a, b, lam1, lam2) -> float:
    """``1/(a(1-lam1)) + 1/(b(lam2-1))`` for ``V' <= -a V^lam1 - b V^lam2``."""
    if not (a > 0 and b > 0 and 0 < lam1 < 1 < lam2):
        raise ValueError("need a, b > 0 and 0 < lam1 < 1 < lam2")
    return 1.0 / (a * (1.0 - lam1)) + 1.0 / (b * (lam2 - 1.0))


@dataclass(frozen=True)
class ControllerBounds:
    """Stage bounds ``T0..T3`` and their sum.

    ``stages[3]`` uses the Lyapunov-level constants of the reaching phase;
    ``T3_raw`` is the same bound written directly in ``c1, c2, p, q``.
    ``c_eps`` is the factor multiplying ``kappa_i1`` in the inner stages.
    """

    stages: tuple[float, float, float, float]
    T3_raw: float
    c_eps: float

    @property
    def T_ctrl(self) -> float:
        return float(sum(self.stages))


def settling_bound_controller(gains: ControllerGains) -> ControllerBounds:
    c_eps = gains.eps ** (gains.gamma1 - 1.0)
    inner = [fixed_time_bound(k1 * c_eps, k2, gains.gamma1, gains.gamma2)
             for k1, k2 in zip(gains.kappa1, gains.kappa2)]
    p, q = gains.p, gains.q
    a3 = gains.c1 * 2.0 ** (-(p + 1.0) / 2.0)
    b3 = gains.c2 * 2.0 ** (-(q + 1.0) / 2.0)
    T3 = fixed_time_bound(a3, b3, (p + 1.0) / 2.0, (q + 1.0) / 2.0)
    T3_raw = fixed_time_bound(gains.c1, gains.c2, p, q)
    return ControllerBounds(stages=(*inner, T3), T3_raw=T3_raw, c_eps=c_eps)


# --- PD baseline -----------------------------------------------------------------

def pd_baseline(theta_t, theta_t_dot_est, theta_d, kp, kd) -> float:
    return kp * (theta_d - theta_t) - kd * theta_t_dot_est


class FilteredDifferentiator:
    """First-order filtered derivative ``s / (tau s + 1)`` under sample-and-hold.

    Holds per-run state; create one per simulation.
    """

    def __init__(self, tau: float, dt: float):
        if tau <= 0 or dt <= 0:
            raise ValueError("tau and dt must be positive")
        self.tau = tau
        self._blend = 1.0 - math.exp(-dt / tau)
        self._x = None

    def __call__(self, y: float) -> float:
        if self._x is None:
            self._x = y
        d = (y - self._x) / self.tau
        self._x += self._blend * (y - self._x)
        return d

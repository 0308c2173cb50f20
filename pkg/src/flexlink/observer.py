"""Fixed-time sliding-mode observer on the canonical model.

    z_hat' = A_C z_hat + B_C u + L e_y + K1 sig^mu1(e_y) + K2 sig^mu2(e_y),
    e_y = g - C_C z_hat

where ``sig^mu`` acts componentwise.  Gains are checked with the quadratic
form used in the convergence argument and with the observability rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import place_poles

from .canonical import CanonicalSystem, numerical_rank
from .controller import fixed_time_bound

DEFAULT_POLES = (-60.0, -66.0, -72.0, -78.0)
DEFAULT_INPUT_GAIN = 70.0


@dataclass(frozen=True)
class ObserverGains:
    L: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    mu1: float = 0.6
    mu2: float = 1.4
    boundary_layer: float = 1e-3

    def __post_init__(self):
        for name in ("L", "K1", "K2"):
            M = np.array(getattr(self, name), dtype=float)
            if M.ndim != 2 or M.shape[1] != 2:
                raise ValueError(f"{name} must be an m x 2 matrix, got shape {M.shape}")
            M.setflags(write=False)
            object.__setattr__(self, name, M)
        if not self.L.shape == self.K1.shape == self.K2.shape:
            raise ValueError("L, K1 and K2 must share a shape")
        if not 0 < self.mu1 < 1 < self.mu2:
            raise ValueError("need 0 < mu1 < 1 < mu2")
        if self.boundary_layer < 0:
            raise ValueError("boundary_layer must be non-negative")


@dataclass
class ObserverState:
    z_hat: np.ndarray
    e_y: np.ndarray


def design_observer_gains(sys: CanonicalSystem, poles=DEFAULT_POLES, k1=3e-3, k2=1e-3,
                          mu1=0.6, mu2=1.4, boundary_layer=1e-3,
                          input_gain=DEFAULT_INPUT_GAIN) -> ObserverGains:
    """Place the eigenvalues of ``A_C - L C_C`` and align ``K1, K2`` with ``L``.

    With ``input_gain = None`` any pole-placing ``L`` is returned.  Otherwise
    the remaining freedom in ``L`` is used so that an output error caused by a
    pure offset of ``z1`` (the state a plant at rest under a constant matched
    input differs by) is injected into the input channel only:
    ``L v = input_gain * e_m`` with ``v`` the unit output direction of ``e_1``.
    The estimate then stays consistent with the plant at rest and the
    steady tip offset under a constant matched disturbance scales like
    ``1 / input_gain``.

    The nonlinear gains are ``K_i = k_i L / ||L||_2`` so their spectral norms
    are exactly ``k1`` and ``k2``.
    """
    poles = np.asarray(poles, dtype=float)
    C = sys.C_C
    if input_gain is None:
        L = place_poles(sys.A_C.T, C.T, poles).gain_matrix.T
    else:
        if C.shape[0] != 2:
            raise ValueError("input-channel constraint needs exactly two outputs")
        v = C[:, 0] / np.linalg.norm(C[:, 0])
        w = np.array([-v[1], v[0]])
        e_m = np.zeros(sys.dim)
        e_m[-1] = 1.0
        M = sys.A_C - input_gain * np.outer(e_m, v @ C)
        g = (w @ C)[:, None]
        if numerical_rank(observability_matrix(M, g.T)) < sys.dim:
            raise ValueError("input_gain leaves the remaining output unobservable")
        a = place_poles(M.T, g, poles).gain_matrix.ravel()
        L = input_gain * np.outer(e_m, v) + np.outer(a, w)
    direction = L / np.linalg.norm(L, 2)
    return ObserverGains(L=L, K1=k1 * direction, K2=k2 * direction,
                         mu1=mu1, mu2=mu2, boundary_layer=boundary_layer)


def signed_power_vector(e_y, mu, boundary_layer=0.0) -> np.ndarray:
    """Componentwise ``|x|^mu sgn(x)``.

    With a positive ``boundary_layer`` d the map becomes ``x (x^2 + d^2)^((mu-1)/2)``,
    which has finite slope at the origin and tends to the pure power for
    ``|x| >> d``.
    """
    e_y = np.asarray(e_y, dtype=float)
    if boundary_layer > 0.0:
        return e_y * (e_y * e_y + boundary_layer * boundary_layer) ** ((mu - 1.0) / 2.0)
    return np.sign(e_y) * np.abs(e_y) ** mu


def observer_rhs(z_hat, g, u, sys: CanonicalSystem, gains: ObserverGains,
                 boundary_layer=None) -> np.ndarray:
    z_hat = np.asarray(z_hat, dtype=float)
    g = np.asarray(g, dtype=float)
    if not (np.all(np.isfinite(z_hat)) and np.all(np.isfinite(g)) and np.isfinite(u)):
        raise FloatingPointError("non-finite input to the observer")
    bl = gains.boundary_layer if boundary_layer is None else boundary_layer
    e_y = g - sys.C_C @ z_hat
    return (sys.A_C @ z_hat + sys.B_C * u + gains.L @ e_y
            + gains.K1 @ signed_power_vector(e_y, gains.mu1, bl)
            + gains.K2 @ signed_power_vector(e_y, gains.mu2, bl))


@dataclass(frozen=True)
class QReport:
    """Outcome of the observer gain checks."""

    Q: np.ndarray
    q_eigenvalues: np.ndarray
    q_psd: bool
    q_output_subspace_eigenvalues: np.ndarray
    q_output_subspace_pd: bool
    observability_rank: int
    error_dynamics_eigenvalues: np.ndarray
    hurwitz: bool
    norm: str = "spectral"

    def lines(self) -> list[str]:
        fmt = lambda v: "[" + ", ".join(f"{x:.6g}" for x in np.real_if_close(v)) + "]"
        return [
            f"eig(Q)                       {fmt(self.q_eigenvalues)}",
            f"Q positive semidefinite      {self.q_psd}",
            f"eig(Q) on range(C_C^T)       {fmt(self.q_output_subspace_eigenvalues)}",
            f"Q pos. def. on output space  {self.q_output_subspace_pd}",
            f"observability rank           {self.observability_rank}",
            f"eig(A_C - L C_C)             {fmt(self.error_dynamics_eigenvalues)}",
            f"error dynamics Hurwitz       {self.hurwitz}",
            f"matrix norm                  {self.norm}",
        ]


def observability_matrix(A, C) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    blocks = [C]
    for _ in range(A.shape[0] - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def validate_gains(sys: CanonicalSystem, gains: ObserverGains) -> QReport:
    """Never raises; reports definiteness of Q and observability of (A_C, C_C).

    ``C_C^T C_C`` has rank 2, so Q can at best be semidefinite on the full
    state space; definiteness is therefore also checked on ``range(C_C^T)``.
    """
    C = sys.C_C
    N = C.T @ C
    M = sys.A_C - gains.L @ C
    Q = -(N @ M + M.T @ N)
    q_eig = np.linalg.eigvalsh(0.5 * (Q + Q.T))
    scale = max(1.0, float(np.max(np.abs(q_eig))))
    tol = 1e-10 * scale
    r = numerical_rank(C.T) if np.any(C) else 0
    if r:
        U, _, _ = np.linalg.svd(C.T, full_matrices=False)
        U = U[:, :r]
        sub = np.linalg.eigvalsh(U.T @ (0.5 * (Q + Q.T)) @ U)
    else:
        sub = np.zeros(0)
    obs = observability_matrix(sys.A_C, C)
    ev = np.linalg.eigvals(M)
    # a margin keeps rounding-level eigenvalues (e.g. the rigid double zero) from counting as stable
    margin = 1e-9 * max(1.0, float(np.max(np.abs(ev))))
    return QReport(
        Q=Q, q_eigenvalues=q_eig, q_psd=bool(q_eig.min() >= -tol),
        q_output_subspace_eigenvalues=sub,
        q_output_subspace_pd=bool(sub.size > 0 and sub.min() > tol),
        observability_rank=numerical_rank(obs) if np.any(obs) else 0,
        error_dynamics_eigenvalues=ev, hurwitz=bool(np.all(ev.real < -margin)),
    )


def settling_bound_observer(sys: CanonicalSystem, gains: ObserverGains) -> float:
    """Observer settling bound with ``eps_i = ||C_C||_2 ||K_i||_2``."""
    nc = np.linalg.norm(sys.C_C, 2)
    eps1 = nc * np.linalg.norm(gains.K1, 2)
    eps2 = nc * np.linalg.norm(gains.K2, 2)
    return observer_bound_from_eps(eps1, eps2, gains.mu1, gains.mu2)


def observer_bound_from_eps(eps1, eps2, mu1, mu2) -> float:
    """``2/(eps1 (1-mu1)) + 2/(eps2 (mu2-1))``."""
    return fixed_time_bound(eps1, eps2, (mu1 + 1.0) / 2.0, (mu2 + 1.0) / 2.0)


def check_time_hierarchy(T_ftsmo, T_ctrl) -> tuple[bool, float]:
    """Strict ``T_ftsmo < T_ctrl`` and the total bound ``T_ftsmo + T_ctrl``."""
    return bool(T_ftsmo < T_ctrl), float(T_ftsmo + T_ctrl)

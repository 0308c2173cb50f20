"""Closed-loop simulation: truth plant, one-mode observer and controller.

The truth plant may carry more modes than the design model; the observer and
the controller always work on the one-mode canonical system, so the extra
modes show up only through the measured outputs.  Integration is fixed-step
RK4 with the control input held over each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .beam import BeamParams, StateSpacePlant, build_plant, modal_data
from .canonical import CanonicalSystem, plant_to_canonical
from .controller import (ControllerGains, FilteredDifferentiator, control_with_surfaces,
                         pd_baseline)
from .observer import ObserverGains

DIVERGENCE_LIMIT = 1e6
DISTURBANCE_KINDS = ("none", "sine", "step", "band-limited-noise")


class SimulationDiverged(RuntimeError):
    def __init__(self, t, state):
        super().__init__(f"simulation diverged at t = {t:.6g} s")
        self.t = t
        self.state = np.array(state)


@dataclass(frozen=True)
class DisturbanceSpec:
    """Matched disturbance ``xi(t)`` with ``|xi(t)| <= amplitude`` by construction.

    ``band-limited-noise`` is a sum of ``n_components`` sinusoids with seeded
    random frequencies in ``(0, frequency]`` and phases, each carrying
    ``amplitude / n_components``.
    """

    kind: str = "none"
    amplitude: float = 0.0
    frequency: float = 2.0
    seed: int = 0
    step_time: float = 0.0
    n_components: int = 16

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.amplitude < 0:
            raise ValueError("disturbance amplitude must be non-negative")
        if self.kind == "band-limited-noise" and self.n_components < 1:
            raise ValueError("n_components must be positive")

    @property
    def bound(self) -> float:
        return 0.0 if self.kind == "none" else self.amplitude


def disturbance_signal(spec: DisturbanceSpec):
    """Return a callable ``xi(t)`` realising ``spec``."""
    A = spec.amplitude
    if spec.kind == "none" or A == 0.0:
        return lambda t: 0.0
    if spec.kind == "sine":
        w = spec.frequency
        return lambda t: A * math.sin(w * t)
    if spec.kind == "step":
        t0 = spec.step_time
        return lambda t: A if t >= t0 else 0.0
    rng = np.random.default_rng(spec.seed)
    n = spec.n_components
    freqs = [float(v) for v in rng.uniform(0.0, spec.frequency, n)]
    phases = [float(v) for v in rng.uniform(0.0, 2.0 * math.pi, n)]
    a = A / n
    return lambda t: a * sum(math.sin(w * t + ph) for w, ph in zip(freqs, phases))


@dataclass(frozen=True)
class PDGains:
    """Tip-angle PD with a filtered derivative; tuned once on the nominal plant."""

    kp: float = 0.2
    kd: float = 0.25
    tau: float = 0.01

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0 or self.tau <= 0:
            raise ValueError("PD gains must be non-negative and tau positive")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    t_end: float = 8.0
    theta_d: float = math.pi / 4
    plant_ic: tuple | None = None
    observer_ic: tuple | None = None
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    controller: str = "proposed"
    truth_modes: int = 2
    theory_mode: bool = False
    saturation: float = 50.0
    pd: PDGains = field(default_factory=PDGains)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.truth_modes not in (1, 2):
            raise ValueError("truth_modes must be 1 or 2")
        if self.controller not in ("proposed", "pd"):
            raise ValueError("controller must be 'proposed' or 'pd'")
        if not self.saturation > 0:
            raise ValueError("saturation limit must be positive")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class Systems:
    """Design model (one mode, canonical form) and the truth plant."""

    beam: BeamParams
    design: StateSpacePlant
    canonical: CanonicalSystem
    truth: StateSpacePlant

    def desired_state(self, theta_d) -> np.ndarray:
        psi_d = np.zeros(self.design.dim)
        psi_d[0] = theta_d
        return psi_d


def build_systems(beam: BeamParams, overrides=(), truth_modes: int = 2) -> Systems:
    modes = modal_data(beam, max(truth_modes, 1), overrides)
    design = build_plant(beam, modes, 1)
    truth = build_plant(beam, modes, truth_modes)
    return Systems(beam=beam, design=design, canonical=plant_to_canonical(design), truth=truth)


@dataclass
class SimTrace:
    """Uniformly sampled closed-loop record.  Row k is the state at ``t[k]``
    and the (held) input applied over ``[t[k], t[k+1])``."""

    t: np.ndarray
    psi: np.ndarray
    z: np.ndarray
    z_hat: np.ndarray
    s: np.ndarray
    u_cmd: np.ndarray
    u: np.ndarray
    theta_t: np.ndarray
    theta_c: np.ndarray
    xi: np.ndarray
    e_y: np.ndarray
    theta_d: float
    saturation_steps: int = 0
    boundary_layer_fraction: float = 0.0

    def __len__(self):
        return self.t.size

    @property
    def theta_0(self) -> float:
        return float(self.theta_t[0])

    @property
    def estimation_error(self) -> np.ndarray:
        return self.z - self.z_hat


def _initial_states(config: SimConfig, systems: Systems):
    m = systems.truth.dim
    psi0 = np.zeros(m)
    if config.plant_ic is not None:
        ic = np.asarray(config.plant_ic, dtype=float)
        if ic.size > m:
            raise ValueError(f"plant_ic has {ic.size} entries, plant has {m} states")
        psi0[:ic.size] = ic
    if config.observer_ic is None:
        zh0 = np.zeros(systems.canonical.dim)
    else:
        zh0 = np.asarray(config.observer_ic, dtype=float)
        if zh0.shape != (systems.canonical.dim,):
            raise ValueError("observer_ic must have one entry per canonical state")
    return psi0, zh0


class ClosedLoop:
    """Composite loop on the stacked state ``x = [psi, z_hat]``.

    Holds the per-run constants and the PD differentiator state, so create
    one per simulation.  :meth:`control` evaluates the held input for the
    current sample and :meth:`step` advances ``x`` by one RK4 step.
    """

    def __init__(self, config: SimConfig, systems: Systems, gains: ControllerGains,
                 obs: ObserverGains):
        cs, truth = systems.canonical, systems.truth
        m, n = truth.dim, cs.dim
        if obs.L.shape[0] != n:
            raise ValueError(f"observer gains have {obs.L.shape[0]} rows, canonical system has {n}")
        self.config, self.systems, self.gains, self.obs = config, systems, gains, obs
        self.m, self.n = m, n
        theory = config.theory_mode
        self.ctrl_bl = 0.0 if theory else gains.boundary_layer
        self.obs_bl = 0.0 if theory else obs.boundary_layer
        self.limit = math.inf if theory else config.saturation
        self.z_d = cs.transform_desired(systems.desired_state(config.theta_d))
        self.xi = disturbance_signal(config.disturbance)
        self.pd_diff = (FilteredDifferentiator(config.pd.tau, config.dt)
                        if config.controller == "pd" else None)

        # one product gives the linear part of x' and the output error
        # e_y = C psi - C_C z_hat (last two rows)
        G = np.zeros((m + n + 2, m + n))
        G[:m, :m] = truth.A
        G[m:m + n, :m] = obs.L @ truth.C
        G[m:m + n, m:] = cs.A_C - obs.L @ cs.C_C
        G[m + n:, :m] = truth.C
        G[m + n:, m:] = -cs.C_C
        # columns: K1 (2), K2 (2), input, disturbance
        W = np.zeros((m + n, 6))
        W[m:, :2] = obs.K1
        W[m:, 2:4] = obs.K2
        W[:m, 4] = truth.B
        W[m:, 4] = cs.B_C
        W[:m, 5] = truth.B
        self._G, self._W = G, W
        self.rhs = self._make_rhs()
        self.fast_step = self._make_fast_step()

    def initial_state(self) -> np.ndarray:
        psi0, zh0 = _initial_states(self.config, self.systems)
        return np.concatenate([psi0, zh0])

    def _make_rhs(self):
        mx = self.m + self.n
        G, W, xi = self._G, self._W, self.xi
        Gl, Ge = G[:mx], G[mx:]
        mu1, mu2 = self.obs.mu1, self.obs.mu2
        bl = self.obs_bl
        bl2 = bl * bl
        h1, h2 = (mu1 - 1.0) / 2.0, (mu2 - 1.0) / 2.0
        copysign = math.copysign
        dot = np.dot

        if bl > 0.0:
            def rhs(x, t, u):
                e0, e1 = dot(Ge, x).tolist()
                r0 = e0 * e0 + bl2
                r1 = e1 * e1 + bl2
                return dot(Gl, x) + dot(W, [e0 * r0 ** h1, e1 * r1 ** h1,
                                            e0 * r0 ** h2, e1 * r1 ** h2, u, xi(t)])
        else:
            def rhs(x, t, u):
                e0, e1 = dot(Ge, x).tolist()
                a0, a1 = abs(e0), abs(e1)
                return dot(Gl, x) + dot(W, [copysign(a0 ** mu1, e0), copysign(a1 ** mu1, e1),
                                            copysign(a0 ** mu2, e0), copysign(a1 ** mu2, e1),
                                            u, xi(t)])
        return rhs

    def _make_fast_step(self):
        """RK4 written as an affine map of ``x`` and the four stage inputs.

        Every stage state is ``A_s x + sum_j B_sj v_j`` where ``v_j`` holds the
        nonlinear injections, the input and the disturbance of stage ``j``;
        only the output errors of the stages need evaluating in sequence.
        Algebraically identical to :meth:`step`, with far fewer array calls.
        """
        mx = self.m + self.n
        h = self.config.dt
        G, W = self._G[:mx], self._W
        Ge = self._G[mx:]
        eye = np.eye(mx)
        A = [eye]
        B = [{}]
        Kx, Kv = [], []
        for s, c in enumerate((0.5, 0.5, 1.0, None)):
            Kx.append(G @ A[s])
            kv = {j: G @ Bj for j, Bj in B[s].items()}
            kv[s] = W
            Kv.append(kv)
            if c is not None:
                A.append(eye + c * h * Kx[s])
                B.append({j: c * h * M for j, M in kv.items()})
        weights = (1.0, 2.0, 2.0, 1.0)
        Phi = eye + h / 6.0 * sum(w * K for w, K in zip(weights, Kx))
        Gam = [h / 6.0 * sum(weights[s] * Kv[s][j] for s in range(4) if j in Kv[s])
               for j in range(4)]
        big = np.hstack([Phi] + Gam)
        Ex = np.vstack([Ge @ A[s] for s in range(4)])          # (8, mx)
        Ev = [[(Ge @ B[s][j]).tolist() for j in range(s)] for s in range(4)]
        xi = self.xi
        mu1, mu2 = self.obs.mu1, self.obs.mu2
        bl = self.obs_bl
        bl2 = bl * bl
        h1, h2 = (mu1 - 1.0) / 2.0, (mu2 - 1.0) / 2.0
        copysign = math.copysign
        dot = np.dot
        times = (0.0, 0.5 * h, 0.5 * h, h)

        def nl(e0, e1, u, d):
            if bl > 0.0:
                r0 = e0 * e0 + bl2
                r1 = e1 * e1 + bl2
                return [e0 * r0 ** h1, e1 * r1 ** h1, e0 * r0 ** h2, e1 * r1 ** h2, u, d]
            a0, a1 = abs(e0), abs(e1)
            return [copysign(a0 ** mu1, e0), copysign(a1 ** mu1, e1),
                    copysign(a0 ** mu2, e0), copysign(a1 ** mu2, e1), u, d]

        def fast_step(x, t, u):
            ex = dot(Ex, x).tolist()
            vs = []
            for s in range(4):
                e0, e1 = ex[2 * s], ex[2 * s + 1]
                for j in range(s):
                    r0, r1 = Ev[s][j]
                    v = vs[j]
                    e0 += r0[0] * v[0] + r0[1] * v[1] + r0[2] * v[2] + r0[3] * v[3] + r0[4] * v[4] + r0[5] * v[5]
                    e1 += r1[0] * v[0] + r1[1] * v[1] + r1[2] * v[2] + r1[3] * v[3] + r1[4] * v[4] + r1[5] * v[5]
                vs.append(nl(e0, e1, u, xi(t + times[s])))
            return dot(big, np.concatenate((x, vs[0], vs[1], vs[2], vs[3])))

        return fast_step

    def control(self, x):
        """``(u_cmd, u_applied, (s0, s1, s2, s3, Phi))`` for the current sample."""
        u_c, surf = control_with_surfaces(x[self.m:], self.z_d, self.gains,
                                          self.systems.canonical.f, self.ctrl_bl)
        if self.pd_diff is not None:
            cfg = self.config
            theta_t = float(self.systems.truth.C[0] @ x[:self.m])
            u_c = pd_baseline(theta_t, self.pd_diff(theta_t), cfg.theta_d, cfg.pd.kp, cfg.pd.kd)
        return u_c, min(max(u_c, -self.limit), self.limit), surf

    def step(self, x, t, u):
        """One RK4 step of length ``dt`` with ``u`` held."""
        dt = self.config.dt
        half = 0.5 * dt
        rhs = self.rhs
        k1 = rhs(x, t, u)
        k2 = rhs(x + half * k1, t + half, u)
        k3 = rhs(x + half * k2, t + half, u)
        k4 = rhs(x + dt * k3, t + dt, u)
        return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_closed_loop(x, t, loop: ClosedLoop):
    """Advance the stacked state one step; returns ``(x_next, u_cmd, u)``."""
    x = np.asarray(x, dtype=float)
    if not np.abs(x).max() < DIVERGENCE_LIMIT:  # also catches nan
        raise SimulationDiverged(t, x)
    u_c, u, _ = loop.control(x)
    return loop.step(x, t, u), u_c, u


def run_scenario(config: SimConfig, systems: Systems, gains: ControllerGains,
                 obs: ObserverGains) -> SimTrace:
    """Integrate the composite loop on ``[0, t_end]``."""
    loop = ClosedLoop(config, systems, gains, obs)
    cs, truth = systems.canonical, systems.truth
    m, n = loop.m, loop.n
    N = config.n_steps + 1
    x = loop.initial_state()

    X = np.empty((N, m + n))
    S = np.empty((N, 4))
    U_cmd = np.empty(N)
    U = np.empty(N)
    XI = np.empty(N)
    T_ = np.arange(N) * config.dt
    sat_steps = 0
    bl_steps = 0
    bl = gains.boundary_layer
    control, step, xi = loop.control, loop.fast_step, loop.xi
    for k in range(N):
        t = T_[k]
        if not np.abs(x).max() < DIVERGENCE_LIMIT:  # also catches nan
            raise SimulationDiverged(t, x)
        u_c, u, surf = control(x)
        if u != u_c:
            sat_steps += 1
        if abs(surf[3]) < bl:
            bl_steps += 1
        X[k] = x
        S[k] = surf[:4]
        U_cmd[k] = u_c
        U[k] = u
        XI[k] = xi(t)
        if k < N - 1:
            x = step(x, t, u)

    psi = X[:, :m]
    z_hat = X[:, m:]
    z = psi[:, :n] @ cs.T.T
    g = psi @ truth.C.T
    e_y = g - z_hat @ cs.C_C.T
    return SimTrace(t=T_, psi=psi, z=z, z_hat=z_hat, s=S, u_cmd=U_cmd, u=U,
                    theta_t=g[:, 0], theta_c=g[:, 1], xi=XI, e_y=e_y,
                    theta_d=config.theta_d, saturation_steps=sat_steps,
                    boundary_layer_fraction=bl_steps / N)


def simulate_open_loop(plant: StateSpacePlant, psi0, dt: float, t_end: float, u=0.0):
    """RK4 response of the plant alone to a constant input; returns ``(t, psi)``."""
    psi = np.array(psi0, dtype=float)
    if psi.shape != (plant.dim,):
        raise ValueError(f"psi0 must have shape ({plant.dim},)")
    N = int(round(t_end / dt)) + 1
    A, b = plant.A, plant.B * u
    out = np.empty((N, plant.dim))
    half = 0.5 * dt
    for k in range(N):
        out[k] = psi
        k1 = A @ psi + b
        k2 = A @ (psi + half * k1) + b
        k3 = A @ (psi + half * k2) + b
        k4 = A @ (psi + dt * k3) + b
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return np.arange(N) * dt, out


# --- initial-condition sweeps ----------------------------------------------------

OBSERVER_ENTRY_BAND = 1e-4
OBSERVER_STAY_BAND = 1e-3


@dataclass(frozen=True)
class SweepRow:
    scale: float
    diverged: bool
    settling_time: float          # tip (plant sweep) or band entry of ||e_y|| (observer sweep)
    settling_time_joint: float
    within_bound: bool
    peak_after_entry: float = math.nan


@dataclass(frozen=True)
class SweepReport:
    target: str
    bound: float
    rows: tuple[SweepRow, ...]

    @property
    def violations(self) -> int:
        return sum(not r.within_bound for r in self.rows)


def scaled_config(config: SimConfig, systems: Systems, scale: float,
                  target: str = "plant", observer_base=None) -> SimConfig:
    """Config whose initial offset from the reference is ``scale`` times the base one.

    ``plant``: ``psi(0) = psi_d + scale (psi_base - psi_d)`` with ``psi_base`` the
    configured plant IC.  ``observer``: ``z_hat(0) = z(0) + scale (z_base - z(0))``
    where ``z_base`` defaults to the canonical set-point, i.e. an estimator
    started at the target while the plant starts from its own IC.
    """
    psi0, _ = _initial_states(config, systems)
    if target == "plant":
        psi_d = np.zeros_like(psi0)
        psi_d[0] = config.theta_d
        return replace(config, plant_ic=tuple(psi_d + scale * (psi0 - psi_d)))
    if target == "observer":
        cs = systems.canonical
        z0 = cs.T @ psi0[:cs.dim]
        if observer_base is None:
            observer_base = cs.transform_desired(systems.desired_state(config.theta_d))
        base = np.asarray(observer_base, dtype=float)
        return replace(config, observer_ic=tuple(z0 + scale * (base - z0)))
    raise ValueError(f"target must be 'plant' or 'observer', got {target!r}")


def sweep_initial_conditions(config: SimConfig, systems: Systems, gains: ControllerGains,
                             obs: ObserverGains, scales, bound: float, target: str = "plant",
                             observer_base=None, band_pct: float = 0.02) -> SweepReport:
    """Run one scenario per IC scale and compare each convergence time to ``bound``.

    For the plant sweep the measured time is the tip settling time (band
    relative to the step magnitude of that run).  For the observer sweep it is
    the first time ``||e_y|| < 1e-4``; a row also fails if ``||e_y||`` later
    exceeds ``1e-3``.
    """
    from .metrics import settling_time  # metrics imports nothing from here

    scales = list(scales)
    if not scales:
        raise ValueError("at least one scale is required")
    rows = []
    for sc in scales:
        cfg = scaled_config(config, systems, float(sc), target, observer_base)
        try:
            tr = run_scenario(cfg, systems, gains, obs)
        except SimulationDiverged:
            rows.append(SweepRow(float(sc), True, math.inf, math.inf, False))
            continue
        if target == "plant":
            ref = abs(cfg.theta_d - tr.theta_t[0]) or abs(cfg.theta_d)
            st = settling_time(tr.t, tr.theta_t, cfg.theta_d, band_pct, ref)
            sj = settling_time(tr.t, tr.theta_c, cfg.theta_d, band_pct, ref)
            rows.append(SweepRow(float(sc), False, st.time, sj.time, st.time <= bound))
        else:
            norm = np.linalg.norm(tr.e_y, axis=1)
            inside = np.flatnonzero(norm < OBSERVER_ENTRY_BAND)
            if inside.size == 0:
                rows.append(SweepRow(float(sc), False, math.inf, math.nan, False))
                continue
            k = int(inside[0])
            peak = float(norm[k:].max())
            t_in = float(tr.t[k])
            rows.append(SweepRow(float(sc), False, t_in, math.nan,
                                 t_in <= bound and peak <= OBSERVER_STAY_BAND, peak))
    return SweepReport(target=target, bound=float(bound), rows=tuple(rows))

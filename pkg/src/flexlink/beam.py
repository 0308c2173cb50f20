"""Assumed-modes model of a hub-actuated flexible link.

The link is an Euler-Bernoulli beam pinned to a rotating hub of inertia
``hub_inertia`` and free at the tip, where an optional payload (point mass plus
rotary inertia) is attached.  The unconstrained vibration modes of that system
give the natural frequencies and the two mode-shape boundary values the
state-space model needs: the tip value ``phi_l`` (output coupling) and the
base slope ``phi_prime_0`` (input coupling).

Per-mode overrides let a model be pinned to published numbers without going
through the eigenvalue solver at all.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

# Bracketing scan for the frequency equation, in units of the dimensionless
# wavenumber beta*l.
_SCAN_STEP = 0.01
_SCAN_MAX = 400.0
_ROOT_RTOL = 1e-10
_GAUSS_POINTS = 96


@dataclass(frozen=True)
class BeamParams:
    """Physical constants of the link, hub and payload (SI units)."""

    rho: float
    length: float
    EI: float
    payload_mass: float = 0.0
    payload_inertia: float = 0.0
    hub_inertia: float = 0.002
    damping_ratio: float = 0.01

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if not self.EI > 0:
            raise ValueError(f"EI must be positive, got {self.EI}")
        if self.payload_mass < 0 or self.payload_inertia < 0:
            raise ValueError("payload mass and inertia must be non-negative")
        if not self.hub_inertia > 0:
            raise ValueError(f"hub_inertia must be positive, got {self.hub_inertia}")
        if not 0 <= self.damping_ratio < 1:
            raise ValueError(f"damping_ratio must lie in [0, 1), got {self.damping_ratio}")


@dataclass(frozen=True)
class ModalOverride:
    """Published eigendata for one mode; bypasses the solver when present."""

    omega: float
    phi_l: float
    phi_prime_0: float


@dataclass(frozen=True)
class ModalData:
    """Eigendata for the first few modes, ordered by frequency."""

    omega: tuple[float, ...]
    phi_l: tuple[float, ...]
    phi_prime_0: tuple[float, ...]

    def __post_init__(self):
        if not len(self.omega) == len(self.phi_l) == len(self.phi_prime_0):
            raise ValueError("omega, phi_l and phi_prime_0 must have equal length")
        if any(w <= 0 for w in self.omega):
            raise ValueError("modal frequencies must be positive")
        if any(b <= a for a, b in zip(self.omega, self.omega[1:])):
            raise ValueError("modal frequencies must be strictly increasing")

    def __len__(self):
        return len(self.omega)


@dataclass(frozen=True)
class StateSpacePlant:
    """Linear model psi' = A psi + B (u + xi), g = C psi.

    State ordering is ``[theta, theta_dot, p_1, p_1_dot, ..., p_n, p_n_dot]``
    and the two outputs are the tip angle and the clamped-joint angle.
    """

    n_modes: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    J_t: float

    @property
    def dim(self) -> int:
        return 2 * self.n_modes + 2


NOMINAL_BEAM = BeamParams(
    rho=0.5, length=1.0, EI=1.0, payload_mass=0.0, payload_inertia=0.0,
    hub_inertia=0.002, damping_ratio=0.01,
)
NOMINAL_OVERRIDES = (ModalOverride(omega=20.53, phi_l=0.3214, phi_prime_0=32.8184),)


def total_inertia(beam: BeamParams) -> float:
    """Rigid-body inertia about the hub: hub + uniform rod + payload."""
    return (beam.hub_inertia + beam.rho * beam.length**3 / 3.0
            + beam.payload_mass * beam.length**2 + beam.payload_inertia)


def _omega_from_beta(beam: BeamParams, beta: float) -> float:
    return beta * beta * np.sqrt(beam.EI / beam.rho)


def _boundary_matrix(beam: BeamParams, beta: float) -> np.ndarray:
    """Boundary conditions acting on the coefficients (a, b, c, d) of

        Y(x) = a sin(bx) + b cos(bx) + c sinh(bx) + d cosh(bx).

    Rows: Y(0) = 0; hub moment balance EI Y''(0) + J_h w^2 Y'(0) = 0; tip moment
    EI Y''(l) - I_p w^2 Y'(l) = 0; tip shear EI Y'''(l) + M_p w^2 Y(l) = 0.
    Tip rows are divided by cosh(beta l) to keep the determinant bounded.
    """
    l, EI = beam.length, beam.EI
    w2 = _omega_from_beta(beam, beta) ** 2
    bl = beta * l
    s, c = np.sin(bl), np.cos(bl)
    # sinh/cosh scaled by cosh(bl)
    th = np.tanh(bl)
    ch = 1.0 / np.cosh(bl)
    sc, cc = s * ch, c * ch
    Jh, Mp, Ip = beam.hub_inertia, beam.payload_mass, beam.payload_inertia
    b2, b3 = beta**2, beta**3

    row0 = [0.0, 1.0, 0.0, 1.0]
    row1 = [Jh * w2 * beta, -EI * b2, Jh * w2 * beta, EI * b2]
    # Y(l), Y'(l), Y''(l), Y'''(l) on the scaled basis
    Y = np.array([sc, cc, th, 1.0])
    Yp = beta * np.array([cc, -sc, 1.0, th])
    Ypp = b2 * np.array([-sc, -cc, th, 1.0])
    Yppp = b3 * np.array([-cc, sc, 1.0, th])
    row2 = EI * Ypp - Ip * w2 * Yp
    row3 = EI * Yppp + Mp * w2 * Y
    # normalise the hub and tip rows so entries are O(1) in beta
    M = np.array([row0, row1, row2, row3], dtype=float)
    M[1] /= EI * max(b2, 1.0)
    M[2] /= EI * max(b2, 1.0)
    M[3] /= EI * max(b3, 1.0)
    return M


def frequency_equation(beam: BeamParams, beta: float) -> float:
    """Determinant whose positive roots in ``beta`` are the modal wavenumbers."""
    return float(np.linalg.det(_boundary_matrix(beam, beta)))


def _bracket_roots(beam: BeamParams, n_roots: int):
    step = _SCAN_STEP / beam.length
    beta = step
    f_prev = frequency_equation(beam, beta)
    brackets = []
    while len(brackets) < n_roots:
        nxt = beta + step
        if nxt * beam.length > _SCAN_MAX:
            raise RuntimeError(
                f"found only {len(brackets)} of {n_roots} frequency roots below "
                f"beta*l = {_SCAN_MAX}; check the beam parameters")
        f_next = frequency_equation(beam, nxt)
        if f_prev == 0.0 or np.sign(f_prev) != np.sign(f_next):
            brackets.append((beta, nxt))
        beta, f_prev = nxt, f_next
    return brackets


def solve_wavenumbers(beam: BeamParams, n_modes: int) -> list[float]:
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    roots = []
    for lo, hi in _bracket_roots(beam, n_modes):
        roots.append(float(brentq(lambda b: frequency_equation(beam, b), lo, hi,
                            xtol=1e-300, rtol=_ROOT_RTOL, maxiter=500)))
    return sorted(roots)


def solve_mode_frequencies(beam: BeamParams, n_modes: int) -> list[float]:
    """First ``n_modes`` natural frequencies (rad/s) of the flexible modes."""
    return [float(_omega_from_beta(beam, b)) for b in solve_wavenumbers(beam, n_modes)]


def _shape_coefficients(beam: BeamParams, beta: float) -> np.ndarray:
    _, _, vt = np.linalg.svd(_boundary_matrix(beam, beta))
    # row scaling leaves the null vector unchanged
    return vt[-1].copy()


def mode_shape(beam: BeamParams, beta: float, coeffs: np.ndarray, x, deriv: int = 0):
    """Evaluate the un-normalised mode shape (or a derivative) at ``x``."""
    a, b, c, d = coeffs
    bx = beta * np.asarray(x, dtype=float)
    s, co, sh, ch = np.sin(bx), np.cos(bx), np.sinh(bx), np.cosh(bx)
    k = deriv % 4
    trig = [(a * s + b * co), (a * co - b * s), (-a * s - b * co), (-a * co + b * s)][k]
    hyp = (c * sh + d * ch) if deriv % 2 == 0 else (c * ch + d * sh)
    return beta**deriv * (trig + hyp)


def modal_mass(beam: BeamParams, beta: float, coeffs: np.ndarray) -> float:
    """Kinetic-energy inner product of a shape with itself.

    Includes the hub and payload terms, which is the weighting under which the
    unconstrained modes are mutually orthogonal.
    """
    xg, wg = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    x = 0.5 * beam.length * (xg + 1.0)
    y = mode_shape(beam, beta, coeffs, x)
    m = 0.5 * beam.length * float(np.sum(wg * beam.rho * y * y))
    yp0 = float(mode_shape(beam, beta, coeffs, 0.0, 1))
    yl = float(mode_shape(beam, beta, coeffs, beam.length))
    ypl = float(mode_shape(beam, beta, coeffs, beam.length, 1))
    return m + beam.hub_inertia * yp0**2 + beam.payload_mass * yl**2 + beam.payload_inertia * ypl**2


def mode_shape_boundary_values(beam: BeamParams, mode_index: int, overrides=None,
                               normalization: float = 1.0) -> tuple[float, float]:
    """Mass-normalised ``(phi(l), phi'(0))`` for flexible mode ``mode_index`` (1-based).

    ``normalization`` is the target modal mass.  The sign is fixed so that the
    base slope is positive.  Overrides, when given for the mode, win.
    """
    if mode_index < 1:
        raise ValueError("mode_index is 1-based")
    if overrides is not None and mode_index <= len(overrides):
        o = overrides[mode_index - 1]
        return float(o.phi_l), float(o.phi_prime_0)
    if not normalization > 0:
        raise ValueError(f"normalization constant must be positive, got {normalization}")
    beta = solve_wavenumbers(beam, mode_index)[-1]
    coeffs = _shape_coefficients(beam, beta)
    scale = np.sqrt(normalization / modal_mass(beam, beta, coeffs))
    phi_l = scale * float(mode_shape(beam, beta, coeffs, beam.length))
    phi_p0 = scale * float(mode_shape(beam, beta, coeffs, 0.0, 1))
    if phi_p0 < 0:
        phi_l, phi_p0 = -phi_l, -phi_p0
    return phi_l, phi_p0


def modal_data(beam: BeamParams, n_modes: int, overrides=None) -> ModalData:
    """Eigendata for ``n_modes`` modes, overrides first and solver for the rest."""
    overrides = tuple(overrides or ())
    n_solve = max(0, n_modes - len(overrides))
    omegas = solve_mode_frequencies(beam, n_modes) if n_solve else []
    om, pl, pp = [], [], []
    for j in range(1, n_modes + 1):
        if j <= len(overrides):
            o = overrides[j - 1]
            om.append(float(o.omega))
        else:
            om.append(omegas[j - 1])
        a, b = mode_shape_boundary_values(beam, j, overrides)
        pl.append(a)
        pp.append(b)
    return ModalData(tuple(om), tuple(pl), tuple(pp))


def build_plant(beam: BeamParams, modes: ModalData, n_modes: int) -> StateSpacePlant:
    """Assemble A, B, C with one double integrator and ``n_modes`` oscillators."""
    if n_modes < 1:
        raise ValueError("at least one flexible mode is required")
    if len(modes) < n_modes:
        raise ValueError(f"need {n_modes} modes, got eigendata for {len(modes)}")
    m = 2 * n_modes + 2
    J_t = total_inertia(beam)
    zeta = beam.damping_ratio
    A = np.zeros((m, m))
    B = np.zeros(m)
    C = np.zeros((2, m))
    A[0, 1] = 1.0
    B[1] = 1.0 / J_t
    C[:, 0] = 1.0
    for j in range(n_modes):
        w = modes.omega[j]
        k = 2 + 2 * j
        A[k, k + 1] = 1.0
        A[k + 1, k] = -w * w
        A[k + 1, k + 1] = -2.0 * zeta * w
        B[k + 1] = modes.phi_prime_0[j]
        C[0, k] = modes.phi_l[j] / beam.length
        C[1, k] = modes.phi_prime_0[j]
    for arr in (A, B, C):
        arr.setflags(write=False)
    return StateSpacePlant(n_modes=n_modes, A=A, B=B, C=C, J_t=J_t)


def output_map(plant: StateSpacePlant, state) -> tuple[float, float]:
    """Tip angle and clamped-joint angle for a state vector."""
    state = np.asarray(state, dtype=float)
    if state.shape != (plant.dim,):
        raise ValueError(f"state must have shape ({plant.dim},), got {state.shape}")
    theta_t, theta_c = plant.C @ state
    return float(theta_t), float(theta_c)


# --- serialization -----------------------------------------------------------

def plant_definition_to_dict(beam: BeamParams, overrides=None) -> dict:
    d = asdict(beam)
    if overrides:
        d["modal_overrides"] = [asdict(o) for o in overrides]
    return d


def plant_definition_from_dict(d: dict) -> tuple[BeamParams, tuple[ModalOverride, ...]]:
    d = dict(d)
    overrides = tuple(ModalOverride(**o) for o in d.pop("modal_overrides", []) or [])
    return BeamParams(**d), overrides


def save_plant_definition(path, beam: BeamParams, overrides=None):
    Path(path).write_text(json.dumps(plant_definition_to_dict(beam, overrides), indent=2))


def load_plant_definition(path):
    return plant_definition_from_dict(json.loads(Path(path).read_text()))


def export_matrices_csv(plant: StateSpacePlant, directory) -> list[Path]:
    """Write A.csv, B.csv and C.csv with full float precision."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, mat in (("A", plant.A), ("B", plant.B.reshape(-1, 1)), ("C", plant.C)):
        p = directory / f"{name}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh)
            for row in np.atleast_2d(mat):
                w.writerow([repr(float(v)) for v in row])
        paths.append(p)
    return paths

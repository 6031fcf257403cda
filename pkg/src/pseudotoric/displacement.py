"""Displacing Hamiltonians and numerical displacement certificates.

A base function f on the plane vanishes identically on a small disc about
the origin, is shaped so its flow pushes the loop region radially outward,
and lifts through the fibration to a global Hamiltonian F = f o psi.  The
lifted flow preserves the moment levels and projects to the base flow up to
the positive factor kappa, so driving every sampled torus point until its
base projection leaves the disc containing the original loop certifies that
the flowed torus is disjoint from the original one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .fibration import psi_jacobian_batch
from .loops import Loop, LoopType, classify_type
from .symplectic import ConvergenceError, FlowParams, PhasePoint, ScalarField
from .torus import TorusSpec, build_torus

__all__ = [
    "CutProfile",
    "AvoidingRay",
    "DisplacementReport",
    "PlanarField",
    "find_avoiding_ray",
    "base_hamiltonian",
    "lift_hamiltonian",
    "displace",
    "profile_for_loop",
]


@dataclass(frozen=True)
class AvoidingRay:
    """A ray from the origin missing the loop, with the loop's angular span
    about the opposite direction."""

    angle: float
    span: float
    min_distance: float


def _plateau_midpoint(mask: np.ndarray) -> int:
    """Index of the midpoint of the longest circular run of True."""
    n = mask.size
    doubled = np.concatenate([mask, mask])
    best_len, best_start, run = 0, 0, 0
    for i, flag in enumerate(doubled):
        if flag:
            run += 1
            if run > best_len and i < n + run:
                best_len, best_start = run, i - run + 1
        else:
            run = 0
    best_len = min(best_len, n)
    return (best_start + best_len // 2) % n


def find_avoiding_ray(g: Loop, n_dirs: int = 256,
                      n_samples: int = 2048) -> Optional[AvoidingRay]:
    """Scan ray directions for one staying clear of the loop.

    Only contractible (winding-zero) loops admit such a ray; the best angle
    by minimum distance to the loop samples is returned, or None when every
    scanned ray comes within 1e-6 * r_max of the loop.
    """
    if n_dirs < 64:
        raise ValueError("n_dirs must be at least 64")
    if classify_type(g) is not LoopType.CHEKANOV:
        raise ValueError(
            "no avoiding ray exists for a loop winding around the origin")
    w = g.samples(n_samples)
    r_max = float(np.max(np.abs(w)))
    alphas = 2 * np.pi * np.arange(n_dirs) / n_dirs
    # distance from sample w to the ray {s e^{i alpha} : s >= 0}
    u = w[None, :] * np.exp(-1j * alphas[:, None])
    dist = np.where(u.real >= 0, np.abs(u.imag), np.abs(u))
    min_dist = dist.min(axis=1)
    best_val = float(np.max(min_dist))
    if best_val <= 1e-6 * r_max:
        return None
    # near-ties form a plateau of equally good directions; take its circular
    # midpoint so symmetric loops give the symmetric ray
    plateau = min_dist >= best_val * (1 - 1e-9)
    best = _plateau_midpoint(plateau)
    alpha = float(alphas[best])
    theta_mid = alpha + np.pi
    rel = np.angle(w * np.exp(-1j * theta_mid))
    span = float(2 * np.max(np.abs(rel)))
    return AvoidingRay(alpha, span, float(min_dist[best]))


@dataclass(frozen=True)
class CutProfile:
    """Parameters of the displacing base Hamiltonian.

    The function vanishes on the disc of radius delta, ramps up to full
    strength by delta_prime, and pushes points radially outward inside the
    angular window of half-width span/2 about the direction opposite the
    avoiding ray.
    """

    ray_angle: float
    delta: float
    delta_prime: float
    r_min: float
    r_max: float
    span: float
    strength: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < self.delta_prime < self.r_min <= self.r_max:
            raise ValueError("need 0 < delta < delta_prime < r_min <= r_max")
        if not 0 < self.span < np.pi:
            raise ValueError(
                "unsupported angular span: the sine profile needs span < pi")
        if self.strength <= 0:
            raise ValueError("strength must be positive")

    @property
    def theta_mid(self) -> float:
        return self.ray_angle + np.pi

    def to_dict(self) -> dict:
        return {
            "ray_angle": self.ray_angle,
            "delta": self.delta,
            "delta_prime": self.delta_prime,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "span": self.span,
            "strength": self.strength,
        }


def profile_for_loop(g: Loop, strength: float = 1.0, n_dirs: int = 256,
                     n_samples: int = 2048) -> CutProfile:
    """Build a CutProfile from a loop via the avoiding-ray scan."""
    ray = find_avoiding_ray(g, n_dirs=n_dirs, n_samples=n_samples)
    if ray is None:
        raise ValueError("no avoiding ray found for this loop")
    w = np.abs(g.samples(n_samples))
    r_min = float(np.min(w))
    r_max = float(np.max(w))
    return CutProfile(ray.angle, 0.2 * r_min, 0.5 * r_min, r_min, r_max,
                      ray.span, strength)


def _smoothstep(r, lo, hi):
    """C^2 quintic ramp: 0 below lo, 1 above hi."""
    tau = np.clip((np.asarray(r, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)


def _smoothstep_deriv(r, lo, hi):
    tau = np.clip((np.asarray(r, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return 30.0 * tau ** 2 * (1.0 - tau) ** 2 / (hi - lo)


class PlanarField:
    """A real function on the base plane with its Wirtinger derivative."""

    def __init__(self, value, wirtinger, description=""):
        self._value = value
        self._wirtinger = wirtinger
        self.description = description

    def value(self, w):
        return self._value(np.asarray(w, dtype=complex))

    def wirtinger(self, w):
        """df/d(conj w), vectorized."""
        return self._wirtinger(np.asarray(w, dtype=complex))

    def velocity(self, w):
        """Base Hamiltonian velocity X_f = 2i df/d(conj w)."""
        return 2j * self.wirtinger(w)


def base_hamiltonian(profile: CutProfile) -> PlanarField:
    """The displacing base function f = strength * chi(r) * g(theta).

    chi is a quintic ramp vanishing on the delta-disc; g(theta) is the sine
    profile whose Hamiltonian flow, under this package's sign conventions,
    moves points radially outward on the plateau chi = 1 inside the angular
    window |theta - theta_mid| < span/2, with closed-form trajectories
    r(t) = sqrt(r0^2 + 2*strength*cos(theta0 - theta_mid)*t), theta constant.
    """
    s = profile.strength
    lo, hi = profile.delta, profile.delta_prime
    mid = profile.theta_mid

    def value(w):
        r = np.abs(w)
        theta = np.angle(w)
        return s * _smoothstep(r, lo, hi) * (-np.sin(theta - mid))

    def wirtinger(w):
        r = np.abs(w)
        theta = np.angle(w)
        safe_r = np.where(r > 0, r, 1.0)
        f_r = s * _smoothstep_deriv(r, lo, hi) * (-np.sin(theta - mid))
        f_theta = s * _smoothstep(r, lo, hi) * (-np.cos(theta - mid))
        f_x = np.cos(theta) * f_r - np.sin(theta) * f_theta / safe_r
        f_y = np.sin(theta) * f_r + np.cos(theta) * f_theta / safe_r
        out = 0.5 * (f_x + 1j * f_y)
        return np.where(r <= lo, 0.0, out)

    return PlanarField(value, wirtinger, description="displacing base function")


def lift_hamiltonian(profile: CutProfile) -> ScalarField:
    """F = f o psi as a phase-space ScalarField with chain-rule gradient."""
    f = base_hamiltonian(profile)

    def value(p: PhasePoint) -> float:
        return float(f.value(np.prod(p.coords)))

    def gradient(p: PhasePoint) -> np.ndarray:
        J = psi_jacobian_batch(p.coords[None, :])[0]
        gc = 2.0 * f.wirtinger(np.prod(p.coords)) * np.conj(J)
        return np.concatenate([gc.real, gc.imag])

    def wirtinger_raw(z: np.ndarray) -> np.ndarray:
        J = psi_jacobian_batch(z[None, :])[0]
        return f.wirtinger(np.prod(z)) * np.conj(J)

    return ScalarField(value, gradient,
                       description="lifted displacing Hamiltonian",
                       wirtinger_raw=wirtinger_raw)


def _lifted_velocity(f: PlanarField, Z: np.ndarray) -> np.ndarray:
    """X_F on an (N, n) array: 2i f_wbar(psi(z)) conj(psi_jacobian(z))."""
    J = psi_jacobian_batch(Z)
    a = np.prod(Z, axis=-1)
    return 2j * f.wirtinger(a)[..., None] * np.conj(J)


@dataclass
class DisplacementReport:
    """Numerical separation certificate for a displacement run."""

    time_elapsed: float
    min_separation: float
    base_radius_margin: float
    moment_drift: float
    parallelism_defect: float
    certificate: bool
    escaped: bool
    n_samples: int
    step_size: float
    stop_radius: float
    diagnostics: dict = field(default_factory=dict)
    flowed: Optional[np.ndarray] = None
    original: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        return {
            "time_elapsed": self.time_elapsed,
            "min_separation": self.min_separation,
            "base_radius_margin": self.base_radius_margin,
            "moment_drift": self.moment_drift,
            "parallelism_defect": self.parallelism_defect,
            "certificate": self.certificate,
            "escaped": self.escaped,
            "n_samples": self.n_samples,
            "step_size": self.step_size,
            "stop_radius": self.stop_radius,
            "diagnostics": self.diagnostics,
        }


def _parallelism_defect(f: PlanarField, Z: np.ndarray) -> tuple[float, float]:
    """Max angle between dpsi(X_F) and X_f(psi), and max relative kappa error."""
    J = psi_jacobian_batch(Z)
    a = np.prod(Z, axis=-1)
    kappa = np.sum(np.abs(J) ** 2, axis=-1)
    X = 2j * f.wirtinger(a)[..., None] * np.conj(J)
    proj = np.sum(J * X, axis=-1)
    base = f.velocity(a)
    mask = (np.abs(base) > 1e-9) & (kappa > 1e-6)
    if not np.any(mask):
        return 0.0, 0.0
    angle = np.abs(np.angle(proj[mask] / base[mask]))
    ratio = np.abs(proj[mask]) / np.abs(base[mask])
    rel = np.abs(ratio - kappa[mask]) / kappa[mask]
    return float(np.max(angle)), float(np.max(rel))


def _integrate_batch(f: PlanarField, Z0: np.ndarray, dt: float,
                     t_cap: float, stop_radius: float):
    """Fixed-step batched RK4 on X_F until radial escape or the time cap.

    Returns (Z, elapsed, escaped, min_radius_history).  Radial monotonicity
    of min |psi| is checked every step.
    """
    Z = Z0.copy()
    t = 0.0
    prev_min = float(np.min(np.abs(np.prod(Z, axis=-1))))
    history = [prev_min]
    while t < t_cap:
        k1 = _lifted_velocity(f, Z)
        k2 = _lifted_velocity(f, Z + 0.5 * dt * k1)
        k3 = _lifted_velocity(f, Z + 0.5 * dt * k2)
        k4 = _lifted_velocity(f, Z + dt * k3)
        Z = Z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        cur_min = float(np.min(np.abs(np.prod(Z, axis=-1))))
        if cur_min < prev_min - 1e-9 * (1 + prev_min):
            raise ConvergenceError(
                "radial monotonicity violated during displacement flow")
        prev_min = cur_min
        history.append(cur_min)
        if cur_min > stop_radius:
            return Z, t, True, history
    return Z, t, False, history


def displace(spec: TorusSpec, profile: CutProfile,
             params: Optional[FlowParams] = None,
             n_t: int = 8, n_phi: int = 8,
             stop_factor: float = 1.15,
             moment_tol: float = 1e-6,
             keep_points: bool = False) -> DisplacementReport:
    """Flow a torus sample by the lifted Hamiltonian and certify separation.

    Every flowed sample must project outside stop_factor * r_max while every
    original sample projects inside r_max; disjointness of the projected
    radial ranges then separates the sampled sets.  Moment drift and the
    projection-parallelism defect are measured alongside; the step size is
    halved and the run repeated when the drift misses its tolerance.
    """
    if classify_type(spec.loop) is not LoopType.CHEKANOV:
        raise ValueError("displacement requires a Chekanov-type (winding 0) loop")
    sample = build_torus(spec, n_t, n_phi)
    Z0 = sample.flat_points()
    f = base_hamiltonian(profile)

    psi0 = np.abs(np.prod(Z0, axis=-1))
    if float(np.max(psi0)) > profile.r_max * (1 + 1e-9):
        raise ValueError("profile r_max does not cover the loop")
    stop_radius = stop_factor * profile.r_max

    kappa0 = np.sum(np.abs(psi_jacobian_batch(Z0)) ** 2, axis=-1)
    kappa_min = float(np.min(kappa0))
    cos_edge = np.cos(profile.span / 2)
    t_escape = ((stop_radius ** 2 - float(np.min(psi0)) ** 2)
                / (2 * profile.strength * cos_edge * kappa_min))
    if params is None:
        params = FlowParams(step_size=min(0.01, t_escape / 50),
                            max_time=4.0 * t_escape, tolerance=1e-10)
    t_cap = min(params.max_time, 4.0 * t_escape)

    par_defect, kappa_rel = _parallelism_defect(f, Z0)

    levels = spec.levels.c
    dt = params.step_size
    for _ in range(6):
        Z, elapsed, escaped, history = _integrate_batch(f, Z0, dt, t_cap,
                                                        stop_radius)
        sq = np.abs(Z) ** 2
        drift = max(float(np.max(np.abs(sq[:, i] - sq[:, i + 1] - levels[i])))
                    for i in range(spec.k))
        if drift <= moment_tol or not escaped:
            break
        dt *= 0.5

    psi_flowed = np.abs(np.prod(Z, axis=-1))
    margin = float(np.min(psi_flowed)) - float(np.max(psi0))

    emb0 = np.concatenate([Z0.real, Z0.imag], axis=1)
    emb1 = np.concatenate([Z.real, Z.imag], axis=1)
    min_sep = float(np.min(cKDTree(emb0).query(emb1, k=1)[0]))

    diagnostics = {
        "kappa_min": kappa_min,
        "kappa_relative_error": kappa_rel,
        "estimated_escape_time": t_escape,
        "time_cap": t_cap,
    }
    if not escaped:
        slowest = int(np.argmin(psi_flowed))
        diagnostics["slowest_sample_index"] = slowest
        diagnostics["slowest_sample_kappa"] = float(kappa0[slowest])
    certificate = bool(escaped and margin > 0 and drift <= moment_tol)
    return DisplacementReport(
        time_elapsed=elapsed,
        min_separation=min_sep,
        base_radius_margin=margin,
        moment_drift=drift,
        parallelism_defect=par_defect,
        certificate=certificate,
        escaped=escaped,
        n_samples=Z0.shape[0],
        step_size=dt,
        stop_radius=stop_radius,
        diagnostics=diagnostics,
        flowed=Z if keep_points else None,
        original=Z0 if keep_points else None,
    )

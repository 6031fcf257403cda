"""Verification suite: structure checks, Lagrangian defect, equivalence.

The statistics here turn the geometric claims about the construction into
measurable numbers: commutators of the moment functions, fiber drift under
their flows, the maximal normalized symplectic pairing over torus tangent
frames, and the area-based equivalence decision for pairs of torus specs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fibration import PseudotoricStructure, psi_eval, psi_jacobian_batch
from .loops import classify_type, enclosed_area
from .symplectic import FlowParams, PhasePoint, flow_integrate
from .torus import TorusSpec, _phase_grid, frame_fields_batch

__all__ = [
    "VerificationReport",
    "Verdict",
    "EquivalenceVerdict",
    "verify_structure",
    "lagrangian_defect",
    "decide_equivalence",
    "random_phase_points",
]


def random_phase_points(k: int, n: int, rng: np.random.Generator,
                        max_norm: float = 3.0,
                        min_abs_psi: float = 0.0) -> list[PhasePoint]:
    """Seeded random points of coordinate norm <= max_norm.

    With min_abs_psi > 0, points too close to the singular fiber are
    resampled so they lie on safely smooth fibers.
    """
    points = []
    while len(points) < n:
        z = rng.uniform(-1, 1, k + 1) + 1j * rng.uniform(-1, 1, k + 1)
        z *= rng.uniform(0.1, 1.0) * max_norm / max(np.linalg.norm(z), 1e-12)
        if min_abs_psi > 0 and abs(np.prod(z)) < min_abs_psi:
            continue
        points.append(PhasePoint(z))
    return points


@dataclass(frozen=True)
class VerificationReport:
    """Aggregated structure statistics with their pass/fail verdict."""

    k: int
    n_points: int
    max_commutator: float
    max_verticality: float
    max_fiber_drift: float
    commutator_tol: float
    verticality_tol: float
    fiber_drift_tol: float

    @property
    def passed(self) -> bool:
        return (self.max_commutator <= self.commutator_tol
                and self.max_verticality <= self.verticality_tol
                and self.max_fiber_drift <= self.fiber_drift_tol)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n_points": self.n_points,
            "max_commutator": self.max_commutator,
            "max_verticality": self.max_verticality,
            "max_fiber_drift": self.max_fiber_drift,
            "tolerances": {
                "commutator": self.commutator_tol,
                "verticality": self.verticality_tol,
                "fiber_drift": self.fiber_drift_tol,
            },
            "pass": self.passed,
        }


def verify_structure(S: PseudotoricStructure, n_points: int = 100,
                     seed: int = 0,
                     commutator_tol: float = 1e-10,
                     verticality_tol: float = 1e-10,
                     fiber_drift_tol: float = 1e-8,
                     n_flow_points: int = 10,
                     flow_tolerance: float = 1e-10) -> VerificationReport:
    """Measure commutators, moment-field verticality, and flow fiber drift."""
    if n_points < 10:
        raise ValueError("n_points must be at least 10")
    rng = np.random.default_rng(seed)
    pts = random_phase_points(S.k, n_points, rng)
    Z = np.stack([p.coords for p in pts])

    # {F_i, F_j} = omega(X_i, X_j), vectorized over points and pairs
    max_comm = 0.0
    max_vert = 0.0
    J = psi_jacobian_batch(Z)
    fields = [S.moment_hamiltonian_batch(i, Z) for i in range(1, S.k + 1)]
    for i in range(S.k):
        dpsi = np.sum(J * fields[i], axis=-1)
        max_vert = max(max_vert, float(np.max(np.abs(dpsi))))
        for j in range(i + 1, S.k):
            br = np.sum(np.imag(np.conj(fields[i]) * fields[j]), axis=-1)
            max_comm = max(max_comm, float(np.max(np.abs(br))))

    flow_pts = random_phase_points(S.k, n_flow_points, rng, min_abs_psi=1e-3)
    params = FlowParams(step_size=0.05, max_time=2.0, tolerance=flow_tolerance)
    max_drift = 0.0
    for p in flow_pts:
        for i in range(1, S.k + 1):
            res = flow_integrate(S.moment_field(i), p, 1.0, params)
            drift = abs(psi_eval(res.point) - psi_eval(p))
            max_drift = max(max_drift, drift)
    return VerificationReport(S.k, n_points, max_comm, max_vert, max_drift,
                              commutator_tol, verticality_tol, fiber_drift_tol)


def lagrangian_defect(spec: TorusSpec, n_t: int = 32, n_phi: int = 32,
                      sample_cap: int = 100_000) -> float:
    """Max normalized |omega(v_i, v_j)| over the sampled tangent frames.

    The frame at each grid point is the k moment Hamiltonian fields plus the
    parameterization t-derivative; the statistic is normalized by the vector
    norms so it is invariant under frame rescaling.  The phase resolution is
    reduced when the full grid would exceed sample_cap points.
    """
    k = spec.k
    n_phi_eff = n_phi
    while n_t * n_phi_eff ** k > sample_cap and n_phi_eff > 4:
        n_phi_eff -= 1
    t = np.arange(n_t) / n_t
    phases = _phase_grid(k, n_phi_eff)
    _, frame = frame_fields_batch(spec, t, phases)
    norms = np.linalg.norm(frame, axis=-1)
    defect = 0.0
    for i in range(k + 1):
        for j in range(i + 1, k + 1):
            om = np.sum(np.imag(np.conj(frame[i]) * frame[j]), axis=-1)
            defect = max(defect, float(np.max(np.abs(om) / (norms[i] * norms[j]))))
    return defect


class Verdict(enum.Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: Verdict
    reason: str
    areas: tuple[float, float]
    types: tuple[str, str]
    zero_count: int

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "reason": self.reason,
            "areas": list(self.areas),
            "types": list(self.types),
            "zero_count": self.zero_count,
        }


def decide_equivalence(s1: TorusSpec, s2: TorusSpec,
                       zero_tol: float = 1e-12) -> EquivalenceVerdict:
    """Hamiltonian-equivalence decision for two torus specs.

    Same type and equal enclosed areas (within a relative tolerance) decide
    Equivalent; same type and differing areas decide NotEquivalent; pairs of
    different types, or differing level vectors, are Unknown: the criteria
    only apply within a fixed type and at identical levels.
    """
    if s1.k != s2.k:
        raise ValueError("specs have different k")
    t1 = classify_type(s1.loop)
    t2 = classify_type(s2.loop)
    a1 = enclosed_area(s1.loop)
    a2 = enclosed_area(s2.loop)
    types = (t1.value, t2.value)
    areas = (a1, a2)
    zero_count = int(np.sum(np.abs(s1.levels.c) <= zero_tol))

    if not np.allclose(s1.levels.c, s2.levels.c, atol=zero_tol, rtol=0):
        return EquivalenceVerdict(
            Verdict.UNKNOWN,
            "level vectors differ; the area criterion applies only at "
            "identical levels", areas, types, zero_count)
    if t1 is not t2:
        return EquivalenceVerdict(
            Verdict.UNKNOWN,
            "loops are of different types (Standard vs Chekanov); cross-type "
            "equivalence is an open question", areas, types, zero_count)
    atol = 1e-8 * (1 + max(abs(a1), abs(a2)))
    if abs(a1 - a2) <= atol:
        reason = ("same type and equal enclosed areas: equivalent up to "
                  "Hamiltonian isotopy")
        if zero_count < 2:
            reason += ("; level vector has fewer than 2 zeros, so the "
                       "loop-equivalence criterion applies as well")
        return EquivalenceVerdict(Verdict.EQUIVALENT, reason, areas, types,
                                  zero_count)
    return EquivalenceVerdict(
        Verdict.NOT_EQUIVALENT,
        "same type but different enclosed areas: not equivalent",
        areas, types, zero_count)

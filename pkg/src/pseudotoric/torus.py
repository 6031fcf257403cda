"""Assembly of the loop-parameterized Lagrangian tori and their samples.

A torus spec is a loop in the base plane plus a level vector c; the sample
is the union over the loop of the fiber tori at those levels.  The twist
torus is the special case c = 0 with the loop obtained by pushing a circle
in the diagonal sector through the (k+1)-th power map.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .fibration import LevelValues, PseudotoricStructure, solve_fiber_radii
from .loops import (Loop, LoopType, SectorSpec, classify_type,
                    default_sector_shape, power_image, sector_loop,
                    validate_loop)
from .symplectic import PhasePoint, TangentVector

__all__ = ["TorusSpec", "TorusSample", "build_torus", "twist_torus",
           "tangent_frame"]


@dataclass(frozen=True)
class TorusSpec:
    """The pair (loop, levels) defining a torus, with its ambient structure."""

    structure: PseudotoricStructure
    loop: Loop
    levels: LevelValues

    def __post_init__(self):
        if self.levels.k != self.structure.k:
            raise ValueError("levels length must equal k")
        validate_loop(self.loop)

    @property
    def k(self) -> int:
        return self.structure.k


def _lifted_argument(loop: Loop, t: np.ndarray, n_fine: int = 2048) -> np.ndarray:
    """Continuously lifted arg(loop(t)) with lift reference at t = 0.

    Unwraps on a fine uniform grid and evaluates the lift at the requested
    parameters by local unwrapping against the nearest fine node.
    """
    tf = np.linspace(0.0, 1.0, n_fine + 1)
    theta_f = np.unwrap(np.angle(loop.eval(tf)))
    idx = np.clip((np.asarray(t) * n_fine).round().astype(int), 0, n_fine)
    raw = np.angle(loop.eval(t))
    ref = theta_f[idx]
    return ref + np.angle(np.exp(1j * (raw - ref)))


def _phase_grid(k: int, n_phi: int) -> np.ndarray:
    """All k-tuples of phases 2 pi j / n_phi, shape (n_phi**k, k)."""
    axes = [2 * np.pi * np.arange(n_phi) / n_phi] * k
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _points_at(spec: TorusSpec, t: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """Sample points, shape (len(t), len(phases), k+1) complex.

    ``phases`` holds the k free angles per row; the dependent angle sits on
    the last coordinate and uses the continuously lifted base argument.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a = spec.loop.eval(t)
    arg_a = _lifted_argument(spec.loop, t)
    radii = np.stack([solve_fiber_radii(spec.levels, abs(av)) for av in a])
    phase_sum = phases.sum(axis=-1)
    theta = np.empty((t.size, phases.shape[0], spec.k + 1))
    theta[:, :, :spec.k] = phases[None, :, :]
    theta[:, :, spec.k] = arg_a[:, None] - phase_sum[None, :]
    return radii[:, None, :] * np.exp(1j * theta)


@dataclass(frozen=True)
class TorusSample:
    """A sampled point grid of a torus, with its defining residuals."""

    spec: TorusSpec
    points: np.ndarray           # (n_t, n_phi**k, k+1) complex
    t_grid: np.ndarray           # (n_t,)
    phase_grid: np.ndarray       # (n_phi**k, k)
    n_t: int
    n_phi: int
    psi_residual: float
    moment_residual: float
    closure_residual: float

    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, self.spec.k + 1)

    def metadata(self) -> dict:
        return {
            "loop": self.spec.loop.to_json(),
            "levels": [float(c) for c in self.spec.levels.c],
            "k": self.spec.k,
            "loop_type": classify_type(self.spec.loop).value,
            "n_t": self.n_t,
            "n_phi": self.n_phi,
            "residuals": {
                "psi": self.psi_residual,
                "moment": self.moment_residual,
                "closure": self.closure_residual,
            },
        }

    def to_csv(self, path) -> None:
        """Columns: t, phi_1..phi_k, Re z_1, Im z_1, ..., Re z_{k+1}, Im z_{k+1}."""
        k = self.spec.k
        header = (["t"] + [f"phi_{i}" for i in range(1, k + 1)]
                  + [x for j in range(1, k + 2)
                     for x in (f"re_z{j}", f"im_z{j}")])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for it, t in enumerate(self.t_grid):
                for ip, phi in enumerate(self.phase_grid):
                    z = self.points[it, ip]
                    row = [repr(float(t))]
                    row += [repr(float(x)) for x in phi]
                    for zj in z:
                        row += [repr(float(zj.real)), repr(float(zj.imag))]
                    writer.writerow(row)

    def write_metadata(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_torus(spec: TorusSpec, n_t: int = 32, n_phi: int = 32) -> TorusSample:
    """Sample the torus on an n_t x n_phi^k grid and verify its equations."""
    if n_t < 8 or n_phi < 8:
        raise ValueError("n_t and n_phi must be at least 8")
    t = np.arange(n_t) / n_t
    phases = _phase_grid(spec.k, n_phi)
    pts = _points_at(spec, t, phases)

    a = spec.loop.eval(t)
    psi_vals = np.prod(pts, axis=-1)
    psi_res = float(np.max(np.abs(psi_vals - a[:, None]) / (1 + np.abs(a[:, None]))))
    moment_res = 0.0
    sq = np.abs(pts) ** 2
    for i in range(spec.k):
        moment_res = max(moment_res, float(np.max(
            np.abs(sq[..., i] - sq[..., i + 1] - spec.levels.c[i]))))
    closing = _points_at(spec, np.array([1.0]), phases)[0]
    closure = float(np.max(np.abs(closing - pts[0])))
    sample = TorusSample(spec, pts, t, phases, n_t, n_phi,
                         psi_res, moment_res, closure)
    if psi_res > 1e-9 or moment_res > 1e-9 or closure > 1e-9:
        raise ValueError(
            f"torus sample failed its defining equations: psi {psi_res:.2e}, "
            f"moments {moment_res:.2e}, closure {closure:.2e}")
    return sample


def twist_torus(k: int, spec: SectorSpec | None = None,
                shape: tuple[float, float, float] | None = None) -> TorusSpec:
    """The twist-torus spec: sector circle pushed by the (k+1)-power, c = 0."""
    if spec is None:
        spec = SectorSpec(k)
    if spec.k != k:
        raise ValueError("sector spec k mismatch")
    if shape is None:
        shape = default_sector_shape(spec)
    base = sector_loop(spec, *shape)
    loop = power_image(base, k + 1)
    if classify_type(loop) is not LoopType.CHEKANOV:
        raise ValueError("twist loop unexpectedly winds around the origin")
    structure = PseudotoricStructure(k)
    return TorusSpec(structure, loop, LevelValues(np.zeros(k)))


def tangent_frame(spec: TorusSpec, t: float, phases: np.ndarray,
                  h: float = 1e-6) -> list[TangentVector]:
    """k+1 vectors spanning the torus tangent space at the point (t, phases).

    The k analytic moment Hamiltonian fields plus the central finite
    difference of the parameterization in t.
    """
    phases = np.asarray(phases, dtype=float)[None, :]
    stencil = np.array([t - h, t, t + h])
    pts = _points_at(spec, stencil, phases)[:, 0, :]
    p = PhasePoint(pts[1])
    frame = [TangentVector(spec.structure.moment_hamiltonian_batch(i, pts[1]), p)
             for i in range(1, spec.k + 1)]
    v_t = (pts[2] - pts[0]) / (2 * h)
    frame.append(TangentVector(v_t, p))
    for v in frame:
        if v.norm < 1e-8:
            raise ValueError("degenerate tangent frame (vanishing vector)")
    return frame


def frame_fields_batch(spec: TorusSpec, t: np.ndarray, phases: np.ndarray,
                       h: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized frame over a (t, phases) grid.

    Returns (points, frame) with points of shape (n_t, n_p, k+1) and frame of
    shape (k+1, n_t, n_p, k+1): the k moment fields followed by the
    t-derivative.
    """
    pts = _points_at(spec, t, phases)
    plus = _points_at(spec, np.asarray(t) + h, phases)
    minus = _points_at(spec, np.asarray(t) - h, phases)
    fields = [spec.structure.moment_hamiltonian_batch(i, pts)
              for i in range(1, spec.k + 1)]
    fields.append((plus - minus) / (2 * h))
    return pts, np.stack(fields)

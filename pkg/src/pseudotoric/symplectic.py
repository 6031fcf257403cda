"""Symplectic conventions on C^{k+1} and the basic Hamiltonian machinery.

Every module in the package imports its conventions from here:

* symplectic form:  omega(u, v) = sum_j Im(conj(u_j) * v_j),
  i.e. the standard  sum_j dx_j ^ dy_j  in real coordinates z_j = x_j + i y_j;
* Hamiltonian field:  X_H = 2i * dH/d(conj z)  componentwise, which is the
  unique field with  omega(v, X_H) = dH(v)  for all tangent vectors v;
* Poisson bracket:  {H, G} = omega(X_H, X_G).

Gradients of real scalar fields are stored as real vectors of length 2(k+1)
ordered (d/dx_1, ..., d/dx_n, d/dy_1, ..., d/dy_n).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "PhasePoint",
    "TangentVector",
    "ScalarField",
    "FlowParams",
    "FlowResult",
    "ConvergenceError",
    "omega_eval",
    "hamiltonian_field",
    "poisson_bracket",
    "flow_integrate",
    "FD_STEP",
]

#: central finite-difference step for gradient fallbacks
FD_STEP = 1e-5


class ConvergenceError(RuntimeError):
    """An iterative numerical procedure failed to reach its target.

    Carries the last iterate in ``last`` when one is available.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class PhasePoint:
    """A point of C^{k+1}, stored as k+1 complex coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=complex)
        if coords.ndim != 1 or coords.size < 2:
            raise ValueError("PhasePoint needs at least 2 complex coordinates")
        if not np.all(np.isfinite(coords)):
            raise ValueError("PhasePoint coordinates must be finite")
        object.__setattr__(self, "coords", coords)

    @property
    def k(self) -> int:
        return self.coords.size - 1

    @property
    def n(self) -> int:
        """Complex dimension k+1."""
        return self.coords.size


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at a PhasePoint, in the same complex coordinates."""

    components: np.ndarray
    base: PhasePoint

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=complex)
        if comps.shape != self.base.coords.shape:
            raise ValueError(
                f"tangent vector has {comps.size} components, "
                f"base point has {self.base.coords.size} coordinates"
            )
        object.__setattr__(self, "components", comps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


@dataclass
class ScalarField:
    """A real-valued function on phase space with an optional analytic gradient.

    ``value`` maps a PhasePoint to a float.  ``gradient``, when given, maps a
    PhasePoint to the real 2n-vector (d/dx_1..x_n, d/dy_1..y_n); otherwise
    central finite differences with step FD_STEP are used.
    """

    value: Callable[[PhasePoint], float]
    gradient: Optional[Callable[[PhasePoint], np.ndarray]] = None
    description: str = ""
    #: optional fast path: dH/d(conj z) on a raw coordinate array, used by
    #: the flow integrator to skip per-step PhasePoint construction
    wirtinger_raw: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, p: PhasePoint) -> float:
        return float(self.value(p))

    def grad(self, p: PhasePoint) -> np.ndarray:
        if self.gradient is not None:
            g = np.asarray(self.gradient(p), dtype=float)
        else:
            g = self._fd_gradient(p)
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient of {self.description!r}")
        return g

    def _fd_gradient(self, p: PhasePoint) -> np.ndarray:
        n = p.n
        z = p.coords
        g = np.empty(2 * n)
        for j in range(n):
            for axis, unit in ((0, 1.0), (1, 1.0j)):
                dz = np.zeros(n, dtype=complex)
                dz[j] = unit * FD_STEP
                fp = self.value(PhasePoint(z + dz))
                fm = self.value(PhasePoint(z - dz))
                g[axis * n + j] = (fp - fm) / (2 * FD_STEP)
        return g

    def grad_complex(self, p: PhasePoint) -> np.ndarray:
        """Gradient packed as g_x + i g_y, one complex entry per coordinate."""
        g = self.grad(p)
        n = p.n
        return g[:n] + 1j * g[n:]

    def wirtinger(self, p: PhasePoint) -> np.ndarray:
        """dH/d(conj z) = (g_x + i g_y)/2, componentwise."""
        return 0.5 * self.grad_complex(p)

    def differential(self, v: TangentVector) -> float:
        """dH(v) at the vector's base point."""
        gc = self.grad_complex(v.base)
        return float(np.sum(np.real(np.conj(gc) * v.components)))


def omega_eval(u: TangentVector, v: TangentVector) -> float:
    """Evaluate omega(u, v) = sum Im(conj(u_j) v_j)."""
    if u.components.shape != v.components.shape:
        raise ValueError("omega_eval: dimension mismatch")
    a, b = u.components, v.components
    # real arithmetic keeps omega(u, u) = 0 and antisymmetry exact
    return float(np.sum(a.real * b.imag) - np.sum(a.imag * b.real))


def hamiltonian_field(H: ScalarField, p: PhasePoint) -> TangentVector:
    """Hamiltonian vector field X_H(p) = 2i * dH/d(conj z)."""
    return TangentVector(2j * H.wirtinger(p), p)


def poisson_bracket(H: ScalarField, G: ScalarField, p: PhasePoint) -> float:
    """{H, G}(p) = omega(X_H, X_G)(p)."""
    return omega_eval(hamiltonian_field(H, p), hamiltonian_field(G, p))


@dataclass(frozen=True)
class FlowParams:
    """Step control for flow_integrate."""

    step_size: float = 0.05
    max_time: float = 10.0
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.step_size <= 0 or self.max_time <= 0 or self.tolerance <= 0:
            raise ValueError("FlowParams entries must be positive")
        if self.step_size > self.max_time:
            raise ValueError("step_size must not exceed max_time")


@dataclass(frozen=True)
class FlowResult:
    """Time-t flow image plus the observed conservation defect."""

    point: PhasePoint
    energy_drift: float
    refinements: int


def _rk4(rhs: Callable[[np.ndarray], np.ndarray], z0: np.ndarray,
         t: float, n_steps: int) -> np.ndarray:
    dt = t / n_steps
    z = z0
    for _ in range(n_steps):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * dt * k1)
        k3 = rhs(z + 0.5 * dt * k2)
        k4 = rhs(z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def flow_integrate(H: ScalarField, p: PhasePoint, t: float,
                   params: FlowParams) -> FlowResult:
    """Integrate the Hamiltonian flow of H from p for time t.

    Classical RK4 with a fixed step, repeatedly halved until two consecutive
    refinements differ by less than ``params.tolerance`` in the max norm.
    Raises ConvergenceError (carrying the last iterate) after 12 halvings.
    """
    if abs(t) > params.max_time:
        raise ValueError(f"requested time {t} exceeds max_time {params.max_time}")
    if t == 0.0:
        return FlowResult(p, 0.0, 0)

    if H.wirtinger_raw is not None:
        raw = H.wirtinger_raw

        def rhs(z: np.ndarray) -> np.ndarray:
            return 2j * raw(z)
    else:
        def rhs(z: np.ndarray) -> np.ndarray:
            return 2j * H.wirtinger(PhasePoint(z))

    n_steps = max(1, int(np.ceil(abs(t) / params.step_size)))
    prev = _rk4(rhs, p.coords, t, n_steps)
    for refinement in range(1, 13):
        n_steps *= 2
        cur = _rk4(rhs, p.coords, t, n_steps)
        if np.max(np.abs(cur - prev)) < params.tolerance:
            result = PhasePoint(cur)
            drift = abs(H(result) - H(p))
            return FlowResult(result, drift, refinement)
        prev = cur
    raise ConvergenceError(
        "flow_integrate: step halving did not converge after 12 refinements",
        last=PhasePoint(prev),
    )

"""The product fibration psi, its moment functions, and the fiber geometry.

psi maps (z_1, ..., z_{k+1}) to a = z_1 * ... * z_{k+1}.  Fibers are smooth
for a != 0; the singular fiber over 0 is the union of coordinate hyperplanes.
The k quadratic moment functions F_i = |z_i|^2 - |z_{i+1}|^2 generate the
fiber-preserving torus action and pairwise Poisson-commute.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .symplectic import PhasePoint, ScalarField, TangentVector

__all__ = [
    "PseudotoricStructure",
    "FiberCoordinates",
    "LevelValues",
    "psi_eval",
    "psi_jacobian",
    "vertical_basis",
    "horizontal_lift",
    "proportionality_factor",
    "solve_fiber_radii",
    "fiber_torus_point",
]


def psi_eval(p) -> complex:
    """a = z_1 * ... * z_{k+1}; accepts a PhasePoint or a coordinate array."""
    coords = p.coords if isinstance(p, PhasePoint) else np.asarray(p, dtype=complex)
    return complex(np.prod(coords))


def psi_jacobian(p) -> np.ndarray:
    """Complex gradient of psi: entry j is the product of all z_m with m != j.

    dpsi_p(u) = sum_j entry_j * u_j for a tangent vector u.  Computed by
    explicit partial products so zero coordinates are handled exactly.
    """
    coords = p.coords if isinstance(p, PhasePoint) else np.asarray(p, dtype=complex)
    n = coords.size
    out = np.empty(n, dtype=complex)
    for j in range(n):
        out[j] = np.prod(np.delete(coords, j))
    return out


def psi_jacobian_batch(Z: np.ndarray) -> np.ndarray:
    """psi_jacobian for an (..., n) array of points, vectorized."""
    n = Z.shape[-1]
    out = np.empty_like(Z)
    for j in range(n):
        out[..., j] = np.prod(np.delete(Z, j, axis=-1), axis=-1)
    return out


@dataclass(frozen=True)
class PseudotoricStructure:
    """Dimension parameter k plus the k diagonal moment matrices.

    Matrix i (1-based) is diag(lambda) with lambda_i = 1, lambda_{i+1} = -1
    and zeros elsewhere.
    """

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")

    @property
    def n(self) -> int:
        return self.k + 1

    def moment_diagonal(self, i: int) -> np.ndarray:
        """The diagonal of A_i (1-based index)."""
        self._check_index(i)
        lam = np.zeros(self.n)
        lam[i - 1] = 1.0
        lam[i] = -1.0
        return lam

    def moment_value(self, i: int, p: PhasePoint) -> float:
        """F_i(z) = |z_i|^2 - |z_{i+1}|^2 (1-based index)."""
        self._check_index(i)
        self._check_point(p)
        z = p.coords
        return float(abs(z[i - 1]) ** 2 - abs(z[i]) ** 2)

    def moment_field(self, i: int) -> ScalarField:
        """F_i as a ScalarField with its analytic gradient."""
        self._check_index(i)
        lam = self.moment_diagonal(i)

        def value(p: PhasePoint) -> float:
            return float(np.sum(lam * np.abs(p.coords) ** 2))

        def gradient(p: PhasePoint) -> np.ndarray:
            # d/dx_j = 2 lam_j x_j, d/dy_j = 2 lam_j y_j
            z = p.coords
            return np.concatenate([2 * lam * z.real, 2 * lam * z.imag])

        return ScalarField(value, gradient, description=f"F_{i}",
                           wirtinger_raw=lambda z: lam * z)

    def moment_fields(self):
        return [self.moment_field(i) for i in range(1, self.k + 1)]

    def moment_hamiltonian_batch(self, i: int, Z: np.ndarray) -> np.ndarray:
        """X_{F_i} at an (..., n) array of points: 2i lam_j z_j componentwise."""
        lam = self.moment_diagonal(i)
        return 2j * lam * Z

    def _check_index(self, i: int):
        if not 1 <= i <= self.k:
            raise IndexError(f"moment index {i} out of range 1..{self.k}")

    def _check_point(self, p: PhasePoint):
        if p.n != self.n:
            raise ValueError(f"point has {p.n} coordinates, structure expects {self.n}")


@dataclass(frozen=True)
class LevelValues:
    """The level vector (c_1, ..., c_k) cutting out the fiber torus.

    Values outside the open interval (-1, 1) are admissible for the radii
    solve but fall outside the range the construction normally uses, so they
    draw a warning rather than an error.
    """

    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("LevelValues needs a nonempty 1-d real vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("LevelValues must be finite")
        object.__setattr__(self, "c", c)
        if np.any(np.abs(c) >= 1.0):
            warnings.warn(
                "level values outside (-1, 1); the radii solve still has a "
                "unique solution but the values are outside the usual range",
                stacklevel=2,
            )

    @property
    def k(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class FiberCoordinates:
    """A point of the fiber over base_value in polar form."""

    radii: np.ndarray
    phases: np.ndarray
    base_value: complex

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        phases = np.asarray(self.phases, dtype=float)
        if radii.shape != phases.shape or radii.ndim != 1:
            raise ValueError("radii and phases must be 1-d vectors of equal length")
        if np.any(radii <= 0):
            raise ValueError("radii must be positive")
        a = complex(self.base_value)
        if a == 0:
            raise ValueError("base value must be nonzero (smooth fiber)")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "phases", phases)
        prod = float(np.prod(radii))
        if abs(prod - abs(a)) > 1e-10 * abs(a):
            raise ValueError("product of radii does not match |base_value|")
        angle_defect = (np.sum(phases) - np.angle(a)) % (2 * np.pi)
        if min(angle_defect, 2 * np.pi - angle_defect) > 1e-10:
            raise ValueError("sum of phases does not match arg(base_value) mod 2pi")

    def to_point(self) -> PhasePoint:
        return PhasePoint(self.radii * np.exp(1j * self.phases))


def vertical_basis(p: PhasePoint) -> list[TangentVector]:
    """A real basis of the tangent space to the fiber of psi through p.

    The kernel of dpsi_p is a complex k-dimensional subspace; returns the 2k
    real vectors {w, i w} over a complex orthonormal kernel basis.
    """
    J = psi_jacobian(p)
    nJ = np.linalg.norm(J)
    if nJ == 0:
        raise ValueError("vertical_basis: critical point of psi (dpsi = 0)")
    null = scipy.linalg.null_space(J[None, :])  # complex (n, k)
    basis = []
    for col in range(null.shape[1]):
        w = null[:, col]
        basis.append(TangentVector(w, p))
        basis.append(TangentVector(1j * w, p))
    return basis


def _real_stack(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag])


def horizontal_lift(p: PhasePoint, u: complex, method: str = "solve") -> TangentVector:
    """The horizontal lift of the base vector u at p.

    The unique H with dpsi_p(H) = u and omega(H, v) = 0 for every vertical v,
    obtained from a (2k+2) x (2k+2) real linear system.  ``method`` selects
    the direct solve or a least-squares path (used as an independent
    cross-check of uniqueness).
    """
    J = psi_jacobian(p)
    if np.linalg.norm(J) == 0:
        raise ValueError("horizontal_lift: critical point of psi")
    n = p.n
    verticals = vertical_basis(p)

    A = np.zeros((2 * n, 2 * n))
    b = np.zeros(2 * n)
    # dpsi(H) = sum J_j H_j = u, split into real and imaginary parts;
    # unknowns ordered (Re H, Im H)
    A[0, :n], A[0, n:] = J.real, -J.imag
    A[1, :n], A[1, n:] = J.imag, J.real
    b[0], b[1] = np.real(u), np.imag(u)
    # omega(H, v) = sum (Re H_j Im v_j - Im H_j Re v_j) = 0
    for row, v in enumerate(verticals, start=2):
        A[row, :n] = v.components.imag
        A[row, n:] = -v.components.real
    try:
        if method == "solve":
            h = np.linalg.solve(A, b)
        elif method == "lstsq":
            h = np.linalg.lstsq(A, b, rcond=None)[0]
        else:
            raise ValueError(f"unknown method {method!r}")
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"horizontal_lift: singular system ({exc})") from exc
    return TangentVector(h[:n] + 1j * h[n:], p)


def proportionality_factor(p: PhasePoint) -> float:
    """kappa(p) = sum_j prod_{m != j} |z_m|^2 = |psi_jacobian(p)|^2.

    The positive scalar relating the projected lifted Hamiltonian field to
    the base Hamiltonian field; 0 exactly at critical points of psi.
    """
    J = psi_jacobian(p)
    return float(np.sum(np.abs(J) ** 2))


def solve_fiber_radii(c: LevelValues, abs_a: float) -> np.ndarray:
    """Solve r_i^2 - r_{i+1}^2 = c_i, prod r_j = abs_a for positive radii.

    Substituting r_j^2 = u - s_j with partial sums s_j = c_1 + ... + c_{j-1}
    reduces to a scalar monotone root-find in u = r_1^2: bisection bracketing
    plus Newton on log(prod r_j) - log(abs_a), to 1e-14 on the log-product.
    """
    if abs_a <= 0:
        raise ValueError("abs_a must be positive")
    cvec = np.asarray(c.c, dtype=float)
    s = np.concatenate([[0.0], np.cumsum(cvec)])  # s_j, j = 1..k+1
    s_max = float(np.max(s))
    target = np.log(abs_a)

    def phi(u: float) -> float:
        return 0.5 * float(np.sum(np.log(u - s))) - target

    def dphi(u: float) -> float:
        return 0.5 * float(np.sum(1.0 / (u - s)))

    # bracket: phi -> -inf as u -> s_max+, phi increasing and unbounded above
    lo = s_max + 1e-300
    hi = s_max + max(1.0, abs_a ** (2.0 / s.size), float(np.ptp(s)) + 1.0)
    while phi(hi) < 0:
        hi = s_max + 2 * (hi - s_max)
    # shrink lo into the finite range
    lo = s_max + (hi - s_max) * 1e-16
    while phi(lo) > 0:
        lo = s_max + (lo - s_max) * 1e-2

    u = 0.5 * (lo + hi)
    for _ in range(200):
        f = phi(u)
        if f > 0:
            hi = u
        else:
            lo = u
        if abs(f) <= 1e-14:
            break
        step = f / dphi(u)
        u_new = u - step
        if not (lo < u_new < hi):
            u_new = 0.5 * (lo + hi)
        if u_new == u:
            break
        u = u_new
    return np.sqrt(u - s)


def fiber_torus_point(c: LevelValues, a: complex,
                      angles: np.ndarray) -> PhasePoint:
    """A point of the fiber torus S^a_c with the k free phases given.

    Phases theta_j = angles_j for j <= k; the dependent phase on index k+1
    is arg(a) - sum(angles).
    """
    a = complex(a)
    if a == 0:
        raise ValueError("fiber_torus_point: a must be nonzero")
    angles = np.asarray(angles, dtype=float)
    if angles.size != c.k:
        raise ValueError("need exactly k free angles")
    radii = solve_fiber_radii(c, abs(a))
    phases = np.concatenate([angles, [np.angle(a) - float(np.sum(angles))]])
    return PhasePoint(radii * np.exp(1j * phases))

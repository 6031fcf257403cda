"""Smooth closed curves in the base plane and their analytics.

Loops are parameterized over t in [0, 1) and must avoid the origin.  The
analytics here (winding number, enclosed signed area, type classification)
feed the torus builder and the displacement and equivalence machinery.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .symplectic import ConvergenceError

__all__ = [
    "Loop",
    "CircleLoop",
    "FourierLoop",
    "PowerLoop",
    "ReversedLoop",
    "SectorSpec",
    "LoopType",
    "sector_loop",
    "power_image",
    "winding_number",
    "enclosed_area",
    "classify_type",
    "loop_from_json",
    "validate_loop",
]


class LoopType(enum.Enum):
    STANDARD = "Standard"
    CHEKANOV = "Chekanov"


class Loop:
    """Base class: a smooth closed parametric curve t in [0,1) -> C."""

    def eval(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def samples(self, n: int, closed: bool = False) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n + 1) if closed else np.arange(n) / n
        return self.eval(t)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class CircleLoop(Loop):
    """center + radius * exp(2 pi i t), counterclockwise."""

    center: complex
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("circle radius must be positive")

    def eval(self, t):
        return self.center + self.radius * np.exp(2j * np.pi * np.asarray(t))

    def derivative(self, t):
        return 2j * np.pi * self.radius * np.exp(2j * np.pi * np.asarray(t))

    def to_json(self) -> dict:
        c = complex(self.center)
        return {"kind": "circle", "center": [c.real, c.imag], "radius": self.radius}


class FourierLoop(Loop):
    """const + sum_m a_m cos(2 pi m t) + b_m sin(2 pi m t), complex a_m, b_m."""

    def __init__(self, const: complex, cos_coeffs, sin_coeffs):
        self.const = complex(const)
        self.cos_coeffs = np.asarray(cos_coeffs, dtype=complex)
        self.sin_coeffs = np.asarray(sin_coeffs, dtype=complex)
        if self.cos_coeffs.shape != self.sin_coeffs.shape:
            raise ValueError("cos and sin coefficient lists must match in length")

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        m = np.arange(1, self.cos_coeffs.size + 1)
        ang = 2 * np.pi * np.multiply.outer(t, m)
        return (self.const
                + np.cos(ang) @ self.cos_coeffs
                + np.sin(ang) @ self.sin_coeffs)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        m = np.arange(1, self.cos_coeffs.size + 1)
        ang = 2 * np.pi * np.multiply.outer(t, m)
        return ((-np.sin(ang) * (2 * np.pi * m)) @ self.cos_coeffs
                + (np.cos(ang) * (2 * np.pi * m)) @ self.sin_coeffs)

    def to_json(self) -> dict:
        harmonics = [[a.real, a.imag, b.real, b.imag]
                     for a, b in zip(self.cos_coeffs, self.sin_coeffs)]
        return {"kind": "fourier",
                "const": [self.const.real, self.const.imag],
                "harmonics": harmonics}


class PowerLoop(Loop):
    """Pointwise power z -> z^m of another loop."""

    def __init__(self, base: Loop, m: int):
        if m < 1:
            raise ValueError("power exponent must be a positive integer")
        self.base = base
        self.m = int(m)

    def eval(self, t):
        return self.base.eval(t) ** self.m

    def derivative(self, t):
        return self.m * self.base.eval(t) ** (self.m - 1) * self.base.derivative(t)

    def to_json(self) -> dict:
        return {"kind": "power", "m": self.m, "base": self.base.to_json()}


class ReversedLoop(Loop):
    """Orientation reversal t -> -t of another loop."""

    def __init__(self, base: Loop):
        self.base = base

    def eval(self, t):
        return self.base.eval(-np.asarray(t, dtype=float))

    def derivative(self, t):
        return -self.base.derivative(-np.asarray(t, dtype=float))

    def to_json(self) -> dict:
        return {"kind": "reversed", "base": self.base.to_json()}


def reverse(g: Loop) -> Loop:
    if isinstance(g, ReversedLoop):
        return g.base
    return ReversedLoop(g)


@dataclass(frozen=True)
class SectorSpec:
    """The open sector of angular width 2 pi/(k+1) cut to a disc.

    Loops feeding the twist construction must stay inside
    {r e^{i phi} : 0 < phi < 2 pi/(k+1)} intersected with the disc of radius
    k+1+epsilon, with the stated margin to every boundary.
    """

    k: int
    epsilon: float = 0.1
    angular_margin: float = 1e-3

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.epsilon <= 0 or self.angular_margin <= 0:
            raise ValueError("epsilon and angular_margin must be positive")

    @property
    def width(self) -> float:
        return 2 * np.pi / (self.k + 1)

    @property
    def disc_radius(self) -> float:
        return self.k + 1 + self.epsilon

    def contains(self, w: np.ndarray, margin: float | None = None) -> bool:
        margin = self.angular_margin if margin is None else margin
        w = np.asarray(w, dtype=complex)
        r = np.abs(w)
        phi = np.angle(w)
        # boundary rays pass through the origin: distance to each ray edge
        edge0 = r * np.sin(np.clip(phi, 0.0, np.pi / 2))
        edge1 = r * np.sin(np.clip(self.width - phi, 0.0, np.pi / 2))
        inside_angle = (phi > 0) & (phi < self.width)
        return bool(np.all(inside_angle)
                    and np.all(edge0 > margin) and np.all(edge1 > margin)
                    and np.all(r < self.disc_radius - margin))


def sector_loop(spec: SectorSpec, center_r: float, center_phi: float,
                radius: float, n_check: int = 1024) -> CircleLoop:
    """A circle inside the sector-disc region, validated sample by sample."""
    if center_r <= 0 or radius <= 0:
        raise ValueError("center_r and radius must be positive")
    loop = CircleLoop(center_r * np.exp(1j * center_phi), radius)
    w = loop.samples(n_check)
    violations = []
    phi = np.angle(w)
    if not (np.all(phi > 0) and np.all(phi < spec.width)):
        violations.append(f"angular range (0, {spec.width:.6f})")
    r = np.abs(w)
    if not np.all(r < spec.disc_radius - spec.angular_margin):
        violations.append(f"disc radius {spec.disc_radius}")
    edge0 = r * np.sin(np.clip(phi, 0.0, np.pi / 2))
    edge1 = r * np.sin(np.clip(spec.width - phi, 0.0, np.pi / 2))
    if not (np.all(edge0 > spec.angular_margin) and np.all(edge1 > spec.angular_margin)):
        violations.append(f"boundary-ray margin {spec.angular_margin}")
    if violations:
        raise ValueError("sector_loop: shape violates " + "; ".join(violations))
    return loop


def default_sector_shape(spec: SectorSpec) -> tuple[float, float, float]:
    """A reasonable (center_r, center_phi, radius) for the given sector."""
    center_phi = spec.width / 2
    center_r = (spec.k + 1) / 2.0
    edge_dist = center_r * np.sin(center_phi) if center_phi < np.pi / 2 else center_r
    radius = 0.45 * min(edge_dist, spec.disc_radius - center_r)
    return center_r, center_phi, radius


def power_image(g: Loop, m: int) -> Loop:
    """The loop t -> g(t)^m."""
    if m == 1:
        return g
    return PowerLoop(g, m)


def validate_loop(g: Loop, n: int = 512) -> None:
    """Check closure, regularity, and origin avoidance at n samples."""
    z = g.samples(n, closed=True)
    if abs(z[0] - z[-1]) > 1e-12 * (1 + abs(z[0])):
        raise ValueError("loop is not closed")
    if np.min(np.abs(g.derivative(np.arange(n) / n))) <= 0:
        raise ValueError("loop is not regular (vanishing derivative)")
    if np.min(np.abs(z)) <= 1e-9 * (1 + np.max(np.abs(z))):
        raise ValueError("loop passes through (or too close to) the origin")


def _total_argument(g: Loop, n: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(0.0, 1.0, n + 1)
    z = g.eval(t)
    if np.min(np.abs(z)) < 1e-9:
        raise ValueError("loop too close to origin")
    return z, np.unwrap(np.angle(z))


def winding_number(g: Loop, n: int = 1024) -> int:
    """Winding of the loop about the origin, by adaptive angle unwrapping.

    Doubles the sampling while consecutive angular steps exceed pi/2 or the
    total increment is not within 1e-6 of an integer multiple of 2 pi.
    """
    for _ in range(12):
        z, theta = _total_argument(g, n)
        steps = np.diff(theta)
        total = (theta[-1] - theta[0]) / (2 * np.pi)
        if np.max(np.abs(steps)) <= np.pi / 2 and abs(total - round(total)) <= 1e-6:
            return int(round(total))
        n *= 2
    raise ConvergenceError("winding_number: sampling refinement did not settle")


def enclosed_area(g: Loop, n: int = 256, tol: float = 1e-9) -> float:
    """Signed area (1/2) oint (x dy - y dx), orientation-sensitive.

    Composite trapezoid of (1/2) Im(conj(z) z') over the period, with
    sampling doubled until two consecutive values differ by less than tol.
    """
    prev = None
    for _ in range(17):
        t = np.arange(n) / n
        z = g.eval(t)
        dz = g.derivative(t)
        area = 0.5 * float(np.mean(np.imag(np.conj(z) * dz)))
        if prev is not None and abs(area - prev) < tol:
            return area
        prev = area
        n *= 2
    raise ConvergenceError("enclosed_area: refinement did not converge")


def classify_type(g: Loop) -> LoopType:
    """Standard iff the loop winds around the origin, Chekanov otherwise."""
    return LoopType.STANDARD if winding_number(g) != 0 else LoopType.CHEKANOV


def loop_from_json(obj: dict) -> Loop:
    """Build a Loop from its JSON description.

    Kinds: circle, fourier, sector (the twist loop: a circle in the sector
    of the diagonal, pushed to the base plane by the (k+1)-th power map),
    power, reversed.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("loop spec must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "circle":
        re, im = obj["center"]
        return CircleLoop(complex(re, im), float(obj["radius"]))
    if kind == "fourier":
        re, im = obj["const"]
        harmonics = obj["harmonics"]
        cos_c = [complex(h[0], h[1]) for h in harmonics]
        sin_c = [complex(h[2], h[3]) for h in harmonics]
        return FourierLoop(complex(re, im), cos_c, sin_c)
    if kind == "sector":
        k = int(obj["k"])
        spec = SectorSpec(k,
                          epsilon=float(obj.get("epsilon", 0.1)),
                          angular_margin=float(obj.get("margin", 1e-3)))
        if "center_r" in obj:
            shape = (float(obj["center_r"]), float(obj["center_phi"]),
                     float(obj["radius"]))
        else:
            shape = default_sector_shape(spec)
        return power_image(sector_loop(spec, *shape), k + 1)
    if kind == "power":
        return power_image(loop_from_json(obj["base"]), int(obj["m"]))
    if kind == "reversed":
        return reverse(loop_from_json(obj["base"]))
    raise ValueError(f"unknown loop kind {kind!r}")

"""Apply distortion functions to point sets, invert them, and sample fields.

The forward map is F(p) = p + G(p).  Inversion is a damped Newton iteration
with the analytic Jacobian, starting from the target point (valid because F
has identity Jacobian at the origin and practical coefficients are small).
Step acceptance is monotone in the residual norm, so the iteration reports
failure instead of jumping to a far-away preimage when the target leaves the
local invertibility region.

The working domain is the unit disc in normalized coordinates; callers own
domain validity, nothing is clamped.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .families import DistortionFunction

__all__ = [
    "NoConvergence",
    "SingularJacobian",
    "InversionConfig",
    "apply_distortion",
    "jacobian",
    "invert",
    "circle_points",
    "grid_points",
    "FieldSample",
    "sample_field",
    "write_points_csv",
    "read_points_csv",
    "write_field_csv",
    "read_field_csv",
]

Point = tuple[float, float]

_SINGULAR_DET = 1e-14
_MIN_STEP_SCALE = 2.0**-40
# Newton steps are capped at the working-domain scale (the unit disc).  Near a
# fold the raw step explodes and can land on a far preimage branch; the cap
# keeps the iteration local, so those targets fail loudly instead.
_MAX_STEP = 1.0


class NoConvergence(RuntimeError):
    """Newton iteration exhausted its budget without meeting the residual tolerance."""


class SingularJacobian(RuntimeError):
    """The forward Jacobian became singular at an iterate."""


@dataclass(frozen=True)
class InversionConfig:
    max_iter: int = 50
    step_tol: float = 1e-14
    residual_tol: float = 1e-12
    damping: float = 1.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.step_tol <= 0 or self.residual_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must be in (0, 1]")


def apply_distortion(
    func: DistortionFunction, points: Sequence[Point]
) -> list[Point]:
    """Forward-map each point: output = input + displacement, order preserved."""
    if len(points) == 0:
        return []
    pts = np.asarray(points, dtype=float)
    dx, dy = func.displacement(pts[:, 0], pts[:, 1])
    out = pts + np.stack([dx, dy], axis=1)
    return [(float(x), float(y)) for x, y in out]


def jacobian(func: DistortionFunction, p) -> np.ndarray:
    """Analytic 2x2 Jacobian of F = id + G at p.

    Uses the Wirtinger derivatives of the complex form; every term has total
    degree >= 2, so the result is exactly the identity at the origin.
    """
    x, y = float(p[0]), float(p[1])
    z = complex(x, y)
    zc = z.conjugate()
    fz = 0j
    fzb = 0j
    for (k, l), c in func.poly.terms.items():
        if k:
            fz += c * k * z ** (k - 1) * zc**l
        if l:
            fzb += c * l * z**k * zc ** (l - 1)
    wx = fz + fzb
    wy = 1j * (fz - fzb)
    return np.array(
        [[1.0 + wx.real, wy.real], [wx.imag, 1.0 + wy.imag]]
    )


def invert(
    func: DistortionFunction, target, config: InversionConfig | None = None
) -> Point:
    """Solve F(q) = target by damped Newton from q0 = target.

    Raises SingularJacobian when |det J| < 1e-14 at an iterate and
    NoConvergence when the iteration budget or the monotone line search is
    exhausted; both mean the target is outside the local invertibility region.
    """
    cfg = config if config is not None else InversionConfig()
    t = np.asarray(target, dtype=float)
    q = t.copy()

    def residual(point):
        dx, dy = func.displacement(point[0], point[1])
        return np.array([point[0] + dx - t[0], point[1] + dy - t[1]])

    r = residual(q)
    rnorm = math.hypot(r[0], r[1])
    for _ in range(cfg.max_iter):
        if rnorm < cfg.residual_tol:
            return float(q[0]), float(q[1])
        jac = jacobian(func, q)
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if abs(det) < _SINGULAR_DET:
            raise SingularJacobian(f"|det J| = {abs(det):.3e} at iterate {tuple(q)}")
        step = np.linalg.solve(jac, r)
        step_norm = math.hypot(step[0], step[1])
        if step_norm < cfg.step_tol:
            break
        if step_norm > _MAX_STEP:
            step *= _MAX_STEP / step_norm
        alpha = cfg.damping
        while True:
            q_try = q - alpha * step
            r_try = residual(q_try)
            rnorm_try = math.hypot(r_try[0], r_try[1])
            if rnorm_try < rnorm:
                q, r, rnorm = q_try, r_try, rnorm_try
                break
            alpha *= 0.5
            if alpha < _MIN_STEP_SCALE:
                raise NoConvergence(
                    f"line search stalled with residual {rnorm:.3e}"
                )
    if rnorm < cfg.residual_tol:
        return float(q[0]), float(q[1])
    raise NoConvergence(
        f"no convergence after {cfg.max_iter} iterations (residual {rnorm:.3e})"
    )


def circle_points(radius: float, count: int) -> list[Point]:
    """count points on the origin-centered circle, angle ascending from 0."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if count < 3:
        raise ValueError("count must be >= 3")
    angles = 2.0 * math.pi * np.arange(count) / count
    return [(float(radius * math.cos(a)), float(radius * math.sin(a))) for a in angles]


def grid_points(half_extent: float, per_side: int) -> list[Point]:
    """per_side x per_side grid on [-half_extent, half_extent]^2, row-major."""
    if half_extent <= 0:
        raise ValueError("half_extent must be positive")
    if per_side < 2:
        raise ValueError("per_side must be >= 2")
    coords = np.linspace(-half_extent, half_extent, per_side)
    return [(float(x), float(y)) for y in coords for x in coords]


class FieldSample(NamedTuple):
    source: Point
    displaced: Point


def sample_field(func: DistortionFunction, points: Sequence[Point]) -> list[FieldSample]:
    """Pair each point with its forward image."""
    displaced = apply_distortion(func, points)
    return [FieldSample((float(p[0]), float(p[1])), d) for p, d in zip(points, displaced)]


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_points_csv(path, points: Sequence[Point]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y"])
        for x, y in points:
            writer.writerow([_fmt(x), _fmt(y)])


def read_points_csv(path) -> list[Point]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y"]:
            raise ValueError(f"{path}: expected header 'x,y', got {header!r}")
        return [(float(row[0]), float(row[1])) for row in reader if row]


def write_field_csv(path, samples: Sequence[FieldSample]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "xd", "yd"])
        for s in samples:
            writer.writerow(
                [_fmt(s.source[0]), _fmt(s.source[1]), _fmt(s.displaced[0]), _fmt(s.displaced[1])]
            )


def read_field_csv(path) -> list[FieldSample]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "xd", "yd"]:
            raise ValueError(f"{path}: expected header 'x,y,xd,yd', got {header!r}")
        return [
            FieldSample((float(r[0]), float(r[1])), (float(r[2]), float(r[3])))
            for r in reader
            if r
        ]

"""
Closed-form oracles: calibrations, openings, Cheeger radii and certificates.

For a convex set C, C_rho denotes its opening (the union of all radius-rho
balls inside C). The Cheeger radius R solves rho * P(C_rho) = |C_rho|, and

    v_C(x)       = 1/R       on C_R
                 = 1/r(x)    on the boundary of C_r, r < R
    v_lam,0(x)   = min(v_C(x), 1/lam)   inside C, 0 outside

is the dual certificate of the noiseless problem with f = 1_C. The exact
noiseless solution is u_lam,0 = 1_C - lam * v_lam,0.

A disc of radius R0 is its own Cheeger set; its Cheeger radius (the root of
the equation above) is R0/2, so that h_C = 2/R0 = 1/R.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect, minimize_scalar
from scipy.spatial import ConvexHull, cKDTree

from tvgeo.core.errors import (AlphaTooLarge, EmptyOpening, LambdaTooLarge, NoOracle,
                               NotBracketed)
from tvgeo.core.geometry import BinaryRegion, perimeter, periodic_edt
from tvgeo.core.grid import STENCIL_SCALE, DualField, GridImage, grid_coords
from tvgeo.core.shapes import Disc, Ellipse, RoundedRectangle, Shape, subsample_points

VectorField = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]

_BISECT_STEPS = 12
_MAX_LEVELS = 256


# ---------------------------------------------------------------------------
# Disc calibration
# ---------------------------------------------------------------------------

def disc_calibration(cx: float, cy: float, r: float) -> VectorField:
    """The disc calibration z = x/R inside, R x/|x|^2 outside (centred coordinates)."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")

    def field(x, y):
        dx = np.asarray(x, dtype=np.float64) - cx
        dy = np.asarray(y, dtype=np.float64) - cy
        rr = dx * dx + dy * dy
        inside = rr <= r * r
        scale = np.where(inside, 1.0 / r, r / np.where(inside, 1.0, rr))
        return scale * dx, scale * dy

    return field


def disc_delta(r: float, rho: float) -> float:
    """Margin 1 - sup |z| outside the rho-tube of the circle: rho/(R+rho)."""
    return rho / (r + rho)


def disc_noise_threshold(r: float, lam: float, tube_r: float) -> float:
    """Noise level below which every level line of the disc solution stays in T_r."""
    return min(2.0 * math.sqrt(math.pi) - math.pi, lam * tube_r ** 2 / (8.0 * r ** 2))


def fit_inner_decay(r: float) -> float:
    """Smallest alpha with 1 - d/R <= alpha/sqrt(d^2 + alpha^2) for d in [0, R].

    Writing t = d/R, the condition reads alpha^2 >= R^2 (1-t)^2 t / (2-t).
    """
    res = minimize_scalar(lambda t: -(1.0 - t) ** 2 * t / (2.0 - t),
                          bounds=(0.0, 1.0), method='bounded', options={'xatol': 1e-12})
    return r * math.sqrt(-res.fun)


def sample_dual_field(field: VectorField, n: int) -> DualField:
    """Sample a 2-D vector field onto the staggered 4-fold stencil positions.

    Components 1 and 4 take the x-component at (i+1/2, j) and (i+1/2, j+1),
    components 2 and 3 the y-component at (i, j+1/2) and (i+1, j+1/2). The
    1/sqrt(2) factor keeps ||z_ij|| close to |z| and makes certificate(z)
    approximate div z.
    """
    x, y = grid_coords(n)
    h = 1.0 / n
    z = np.empty((n, n, 4))
    z[..., 0] = field(np.mod(x + 0.5 * h, 1.0), y)[0]
    z[..., 1] = field(x, np.mod(y + 0.5 * h, 1.0))[1]
    z[..., 2] = field(np.mod(x + h, 1.0), np.mod(y + 0.5 * h, 1.0))[1]
    z[..., 3] = field(np.mod(x + 0.5 * h, 1.0), np.mod(y + h, 1.0))[0]
    return DualField(STENCIL_SCALE * z)


# ---------------------------------------------------------------------------
# Openings and Cheeger radius
# ---------------------------------------------------------------------------

def _opened(shape: Shape, rho: float) -> Shape | None:
    """Closed-form opening, or None when the kind has no closed form."""
    if isinstance(shape, Disc):
        if rho > shape.r:
            raise EmptyOpening(f"opening radius {rho} exceeds disc radius {shape.r}")
        return shape
    if isinstance(shape, RoundedRectangle):
        if 2.0 * rho > min(shape.w, shape.h):
            raise EmptyOpening(f"opening radius {rho} exceeds half the short side")
        return shape.opened(rho)
    return None


def has_closed_form(shape: Shape) -> bool:
    return all(isinstance(p, (Disc, RoundedRectangle)) for p in shape.components)


def opening(shape: Shape, rho: float, n: int) -> BinaryRegion:
    """Rasterized opening C_rho on the n x n grid.

    Discs and (rounded) rectangles use their closed forms; other convex
    shapes are eroded then dilated with Euclidean distance transforms of the
    pixel-centre mask (half-pixel corrected). Unions open component-wise.
    """
    if rho < 0:
        raise ValueError(f"opening radius must be nonnegative, got {rho}")
    if len(shape.components) > 1:
        mask = np.zeros((n, n), dtype=bool)
        for part in shape.components:
            mask |= opening(part, rho, n).mask
        return BinaryRegion(mask)
    closed = _opened(shape, rho)
    if closed is not None:
        return BinaryRegion(closed.mask(n))
    mask = shape.mask(n)
    if rho == 0.0:
        return BinaryRegion(mask)
    limit = rho * n + 0.5
    eroded = periodic_edt(mask) >= limit
    if not eroded.any():
        raise EmptyOpening(f"erosion by {rho} leaves nothing at n={n}")
    return BinaryRegion(periodic_edt(~eroded) <= limit)


def _cheeger_gap(shape: Shape, rho: float, n: int) -> float:
    closed = _opened(shape, rho)
    if closed is not None:
        return rho * closed.perimeter - closed.area
    region = opening(shape, rho, n)
    return rho * perimeter(region) - region.area


def cheeger_radius(shape: Shape, n: int = 512) -> float:
    """Root R of rho * P(C_rho) - |C_rho| on (0, inradius].

    Closed forms are solved to 1e-14; other convex shapes use rasterized
    measures at resolution n with tolerance 1/(4n).
    """
    if not shape.is_convex or len(shape.components) != 1:
        raise ValueError("Cheeger radius needs a single convex shape")
    shape = shape.components[0]
    closed = has_closed_form(shape)
    lo = 1e-12 if closed else 1.0 / n
    hi = shape.inradius if closed else 0.98 * shape.inradius
    try:
        g_lo = _cheeger_gap(shape, lo, n)
        g_hi = _cheeger_gap(shape, hi, n)
    except EmptyOpening as e:
        raise NotBracketed(str(e)) from None
    if g_lo * g_hi > 0:
        raise NotBracketed(f"no sign change of the Cheeger equation on [{lo:.3g}, {hi:.3g}]")
    xtol = 1e-15 if closed else 0.25 / n
    return float(bisect(lambda r: _cheeger_gap(shape, r, n), lo, hi, xtol=xtol, maxiter=200))


def cheeger_constant(shape: Shape, n: int = 512) -> float:
    """h = P(C_R)/|C_R| = 1/R for a convex shape."""
    return 1.0 / cheeger_radius(shape, n)


@dataclass
class CheegerReport:
    radius: float
    core_area: float
    core_perimeter: float

    @property
    def h(self) -> float:
        return 1.0 / self.radius

    @property
    def core_ratio(self) -> float:
        """P(C_R)/|C_R| measured on the core itself."""
        return self.core_perimeter / self.core_area

    @property
    def identity_residual(self) -> float:
        return abs(self.core_ratio * self.radius - 1.0)

    def identity_ok(self, tol: float = 1e-8) -> bool:
        return self.identity_residual <= tol


def cheeger_report(shape: Shape, n: int = 512) -> CheegerReport:
    """Cheeger radius together with the measured core, for checking h_{C_R} = 1/R."""
    r = cheeger_radius(shape, n)
    part = shape.components[0]
    closed = _opened(part, r)
    if closed is not None:
        return CheegerReport(r, closed.area, closed.perimeter)
    region = opening(part, r, n)
    return CheegerReport(r, region.area, perimeter(region))


def convex_hull_perimeter(shape: Shape, samples: int = 4096) -> float:
    pts = shape.boundary_points(samples)
    return float(ConvexHull(pts).area)


@dataclass
class Calibrability:
    is_calibrable: bool
    kappa_max: float
    h: float


def calibrable_check(shape: Shape) -> Calibrability:
    """A convex set is calibrable iff its boundary curvature never exceeds P/|C|."""
    h = shape.perimeter / shape.area
    kappa = shape.curvature_max
    return Calibrability(is_calibrable=bool(kappa <= h * (1.0 + 1e-12)), kappa_max=kappa, h=h)


# ---------------------------------------------------------------------------
# Convex certificates
# ---------------------------------------------------------------------------

def _in_opening(shape: Shape, rho: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise membership x in C_rho with a per-point radius (closed-form kinds)."""
    if isinstance(shape, Disc):
        return shape.contains(x, y)
    r = np.maximum(shape.rho, rho)
    qx = np.maximum(shape.x0 + r - x, x - (shape.x0 + shape.w - r))
    qy = np.maximum(shape.y0 + r - y, y - (shape.y0 + shape.h - r))
    sd = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0)) + np.minimum(np.maximum(qx, qy), 0.0) - r
    return sd <= 1e-12


def _closed_radius(shape: Shape, x: np.ndarray, y: np.ndarray, r_cheeger: float,
                   floor: float = 0.0) -> np.ndarray:
    """r(x) by bisection on rho for points of C, kept within [floor, Cheeger radius]."""
    radius = np.full(x.shape, r_cheeger)
    core = _opened(shape, r_cheeger)
    todo = ~core.contains(x, y)
    px, py = x[todo], y[todo]
    lo = np.zeros(px.shape)
    hi = np.full(px.shape, r_cheeger)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        member = _in_opening(shape, mid, px, py)
        lo = np.where(member, mid, lo)
        hi = np.where(member, hi, mid)
    radius[todo] = np.maximum(0.5 * (lo + hi), floor)
    return radius


def _radius_map(shape: Shape, n: int, r_cheeger: float) -> np.ndarray:
    """r(x) = sup{rho : x in C_rho} at pixel centres of C (0 outside), rasterized kinds."""
    inside = shape.mask(n)
    radius = np.zeros((n, n))
    if not inside.any():
        return radius

    # nested stack of openings on a uniform rho ladder
    levels = int(min(_MAX_LEVELS, max(8, math.ceil(4 * n * r_cheeger))))
    step = r_cheeger / levels
    count = np.zeros((n, n), dtype=np.int64)
    current = inside.copy()
    for k in range(1, levels + 1):
        try:
            current &= opening(shape, k * step, n).mask
        except EmptyOpening:
            break
        count += current
    radius[inside] = np.where(count[inside] >= levels, r_cheeger, (count[inside] + 0.5) * step)
    return radius


def _inverse_radius(part: Shape, n: int, cap: float) -> np.ndarray:
    """min(1/r(x), cap) on one convex component.

    Closed-form kinds are cell-averaged over the sub-pixel samples of
    rasterize, with r(x) floored at 1/(4n): 1/r blows up at polygon corners
    and a pixel-centre sample would not integrate to P(C). Rasterized kinds
    are evaluated at pixel centres.
    """
    r_c = cheeger_radius(part, n)
    values = np.zeros((n, n))
    if has_closed_form(part):
        samples = list(subsample_points(n))
        for sx, sy in samples:
            inside = part.contains(sx, sy)
            r = _closed_radius(part, sx[inside], sy[inside], r_c, floor=0.25 / n)
            values[inside] += np.minimum(1.0 / r, cap)
        return values / len(samples)
    radius = _radius_map(part, n, r_c)
    inside = radius > 0
    values[inside] = np.minimum(1.0 / radius[inside], cap)
    return values


def convex_certificate_v0(shape: Shape, n: int) -> GridImage:
    """Rasterized v_C: 1/R on the Cheeger core, 1/r(x) on the rest of C, 0 outside.

    Unions of well-separated convex shapes get the sum of component fields.
    The cell sum satisfies sum(v) / n^2 = P(C) up to discretization.
    """
    values = np.zeros((n, n))
    for part in shape.components:
        values += _inverse_radius(part, n, math.inf)
    return GridImage(values)


def convex_certificate_vlambda(shape: Shape, lam: float, n: int) -> GridImage:
    """Rasterized v_lam,0: v_C on C_lam, 1/lam on C minus C_lam, 0 outside.

    For lam between the Cheeger radius and the inradius the noiseless
    solution vanishes and the field is 1/lam on all of C.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    values = np.zeros((n, n))
    for part in shape.components:
        if lam >= part.inradius:
            raise LambdaTooLarge(f"lambda={lam} must be below the inradius {part.inradius:.6g}")
        values += _inverse_radius(part, n, 1.0 / lam)
    return GridImage(values)


def exact_solution(shape: Shape, lam: float, n: int) -> GridImage:
    """Noiseless solution u_lam,0 = 1_C - lam * v_lam,0.

    Closed-form kinds are cell-averaged over the same sub-pixel samples as
    rasterize, so the result compares directly with a solve of rasterize(C).
    Rasterized kinds are evaluated at pixel centres.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if has_closed_form(shape):
        samples = list(subsample_points(n))
        values = np.zeros((n, n))
        for part in shape.components:
            if lam >= part.inradius:
                raise LambdaTooLarge(f"lambda={lam} must be below the inradius {part.inradius:.6g}")
            r_c = cheeger_radius(part, n)
            for sx, sy in samples:
                inside = part.contains(sx, sy)
                r = _closed_radius(part, sx[inside], sy[inside], r_c, floor=0.25 / n)
                values[inside] += np.maximum(1.0 - lam / r, 0.0)
        return GridImage(values / len(samples))
    v = convex_certificate_vlambda(shape, lam, n)
    indicator = shape.mask(n).astype(np.float64)
    return GridImage(np.maximum(indicator - lam * v.values, 0.0))


def tv_flow_profile(shape: Shape, t: float) -> float:
    """Height (1 - h t)_+ of a calibrable set under the total-variation flow."""
    check = calibrable_check(shape)
    if not check.is_calibrable:
        raise NoOracle(f"{shape} is not calibrable; its TV flow has no constant-speed profile")
    return max(0.0, 1.0 - check.h * t)


# ---------------------------------------------------------------------------
# Oracles used by stability experiments
# ---------------------------------------------------------------------------

def require_oracle(shape: Shape) -> None:
    if not has_closed_form(shape):
        raise NoOracle(f"no closed-form certificate oracle for {shape.kind}")


def boundary_mask(shape: Shape, n: int) -> np.ndarray:
    """Pixels nearest to densely sampled boundary points."""
    mask = np.zeros((n, n), dtype=bool)
    for part in shape.components:
        pts = part.boundary_points(max(1024, 8 * n))
        idx = np.mod(np.rint(pts * n).astype(np.int64), n)
        mask[idx[:, 0], idx[:, 1]] = True
    return mask


def extended_support_mask(shape: Shape, n: int) -> BinaryRegion:
    """Extended support of 1_C: the boundary plus C minus the interior of C_R.

    For a calibrable component C_R = C and only the boundary remains.
    """
    require_oracle(shape)
    mask = boundary_mask(shape, n)
    x, y = grid_coords(n)
    for part in shape.components:
        r_c = cheeger_radius(part, n)
        core = _opened(part, r_c)
        mask |= part.contains(x, y) & (core.signed_distance(x, y) > -0.5 / n)
    return BinaryRegion(mask)


def tube_delta(shape: Shape, rho: float) -> float | None:
    """Closed-form margin 1 - sup |z_0| outside the rho-tube, where one is known."""
    if isinstance(shape, Disc):
        return disc_delta(shape.r, rho)
    return None


# ---------------------------------------------------------------------------
# Boundary curves and the outer calibration
# ---------------------------------------------------------------------------

@dataclass
class BoundaryCurve:
    """Closed curve sampled uniformly in arclength (first and last samples coincide)."""
    s: np.ndarray           # (m+1,)
    points: np.ndarray      # (m+1, 2)
    tangents: np.ndarray    # (m+1, 2)
    normals: np.ndarray     # (m+1, 2), outward
    curvature: np.ndarray   # (m+1,)
    turning: np.ndarray     # (m+1,) integral of curvature from 0 to s

    @property
    def total_length(self) -> float:
        return float(self.s[-1])

    @property
    def samples(self) -> int:
        return len(self.s) - 1

    @property
    def total_turning(self) -> float:
        return float(self.turning[-1])


def _curve_from_angles(theta_of_s, s, point, deriv, curvature, angle) -> BoundaryCurve:
    theta = theta_of_s(s)
    pts = point(theta)
    d = deriv(theta)
    tang = d / np.linalg.norm(d, axis=1, keepdims=True)
    normal = np.column_stack([tang[:, 1], -tang[:, 0]])
    phi = np.unwrap(angle(theta))
    return BoundaryCurve(s=s, points=pts, tangents=tang, normals=normal,
                         curvature=curvature(theta), turning=phi - phi[0])


def boundary_curve(shape: Shape, samples: int = 512) -> BoundaryCurve:
    """Counterclockwise arclength parametrization of a disc, ellipse or rounded rectangle."""
    if isinstance(shape, Disc):
        r = shape.r
        length = 2.0 * math.pi * r
        s = np.linspace(0.0, length, samples + 1)
        return _curve_from_angles(
            lambda s_: s_ / r, s,
            lambda t: np.column_stack([shape.cx + r * np.cos(t), shape.cy + r * np.sin(t)]),
            lambda t: np.column_stack([-np.sin(t), np.cos(t)]),
            lambda t: np.full(t.shape, 1.0 / r),
            lambda t: t + 0.5 * np.pi)

    if isinstance(shape, Ellipse):
        a, b = shape.a, shape.b
        fine = np.linspace(0.0, 2.0 * math.pi, 64 * samples + 1)
        speed = np.sqrt((a * np.sin(fine)) ** 2 + (b * np.cos(fine)) ** 2)
        arclen = cumulative_trapezoid(speed, fine, initial=0.0)
        inverse = CubicSpline(arclen, fine)
        s = np.linspace(0.0, arclen[-1], samples + 1)
        return _curve_from_angles(
            inverse, s,
            lambda t: np.column_stack([shape.cx + a * np.cos(t), shape.cy + b * np.sin(t)]),
            lambda t: np.column_stack([-a * np.sin(t), b * np.cos(t)]),
            lambda t: a * b / ((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2) ** 1.5,
            lambda t: np.arctan2(b * np.cos(t), -a * np.sin(t)))

    if isinstance(shape, RoundedRectangle):
        pts = shape.boundary_points(samples)
        pts = np.vstack([pts, pts[:1]])
        length = shape.perimeter
        s = np.linspace(0.0, length, samples + 1)
        seg = np.diff(pts, axis=0)
        tang = seg / np.maximum(np.linalg.norm(seg, axis=1, keepdims=True), 1e-300)
        tang = np.vstack([tang, tang[:1]])
        normal = np.column_stack([tang[:, 1], -tang[:, 0]])
        rho = shape.rho
        # a sample lies on an arc when it is off both straight-edge lines
        on_x = np.isclose(pts[:, 0], shape.x0) | np.isclose(pts[:, 0], shape.x0 + shape.w)
        on_y = np.isclose(pts[:, 1], shape.y0) | np.isclose(pts[:, 1], shape.y0 + shape.h)
        kappa = np.where(on_x | on_y, 0.0, 1.0 / rho if rho > 0 else 0.0)
        phi = np.unwrap(np.arctan2(tang[:, 1], tang[:, 0]))
        phi[-1] = phi[0] + 2.0 * math.pi
        return BoundaryCurve(s=s, points=pts, tangents=tang, normals=normal,
                             curvature=kappa, turning=phi - phi[0])

    raise NoOracle(f"no arclength parametrization for {shape.kind}")


def _eta(d: np.ndarray) -> np.ndarray:
    """Tent profile min(d, 2-d), clipped at zero beyond d = 2."""
    return np.clip(np.minimum(d, 2.0 - d), 0.0, None)


def _eta_integral(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    return np.where(d <= 1.0, 0.5 * d * d,
                    np.where(d <= 2.0, 1.0 - 0.5 * (2.0 - d) ** 2, 1.0))


@dataclass
class OuterCalibration:
    """Calibration field outside a smooth convex curve in (tangent, normal) coordinates.

        z1(s, d) = -alpha * K(s) * eta(d)
        z2(s, d) = (1 + alpha * H(d) * (kappa(s) - 2 pi / P)) / (1 + kappa(s) d)

    with K(s) the integral of kappa - 2 pi / P from 0 to s and H the integral
    of eta. The field equals the outward normal on the curve and is
    divergence-free outside it.
    """
    curve: BoundaryCurve
    alpha: float

    @property
    def mean_curvature(self) -> float:
        return 2.0 * math.pi / self.curve.total_length

    @property
    def excess(self) -> np.ndarray:
        """K(s) at every curve sample."""
        return self.curve.turning - self.mean_curvature * self.curve.s

    def components(self, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(z1, z2) on the grid of curve samples x d values, each (m+1, len(d))."""
        d = np.atleast_1d(np.asarray(d, dtype=np.float64))
        kappa = self.curve.curvature[:, None]
        k_exc = self.excess[:, None]
        z1 = -self.alpha * k_exc * _eta(d)[None, :]
        z2 = (1.0 + self.alpha * _eta_integral(d)[None, :] * (kappa - self.mean_curvature)) \
            / (1.0 + kappa * d[None, :])
        return z1, z2

    def norm_sq(self, d: np.ndarray) -> np.ndarray:
        z1, z2 = self.components(d)
        return z1 * z1 + z2 * z2

    def at(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate in the plane; NaN inside the curve."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        pts = self.curve.points[:-1]
        tree = cKDTree(pts)
        q = np.column_stack([x.ravel(), y.ravel()])
        dist, idx = tree.query(q)
        outward = np.sum((q - pts[idx]) * self.curve.normals[idx], axis=1) >= 0
        kappa = self.curve.curvature[idx]
        z1 = -self.alpha * self.excess[idx] * _eta(dist)
        z2 = (1.0 + self.alpha * _eta_integral(dist) * (kappa - self.mean_curvature)) \
            / (1.0 + kappa * dist)
        zx = z1 * self.curve.tangents[idx, 0] + z2 * self.curve.normals[idx, 0]
        zy = z1 * self.curve.tangents[idx, 1] + z2 * self.curve.normals[idx, 1]
        zx = np.where(outward, zx, np.nan).reshape(x.shape)
        zy = np.where(outward, zy, np.nan).reshape(x.shape)
        return zx, zy


def _validation_depths() -> np.ndarray:
    return np.concatenate([np.geomspace(1e-4, 0.01, 40, endpoint=False),
                           np.linspace(0.01, 3.0, 300)])


def outer_calibration(curve: BoundaryCurve, alpha: float,
                      depths: np.ndarray | None = None) -> OuterCalibration:
    """Build the outer calibration and check |z| < 1 on a grid of positive depths."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    cal = OuterCalibration(curve, alpha)
    d = _validation_depths() if depths is None else np.asarray(depths, dtype=np.float64)
    worst = float(np.max(cal.norm_sq(d[d > 0])))
    if worst >= 1.0:
        raise AlphaTooLarge(f"alpha={alpha:.6g} gives |z|^2 = {worst:.12g} outside the curve")
    return cal


def select_alpha(curve: BoundaryCurve, max_halvings: int = 40) -> OuterCalibration:
    """Halve alpha from P/(4 pi M) until the validation grid certifies |z| < 1."""
    cal = OuterCalibration(curve, 1.0)
    m = max(float(np.max(cal.excess ** 2)),
            float(np.max((curve.curvature - cal.mean_curvature) ** 2)), 1e-12)
    alpha = curve.total_length / (4.0 * math.pi * m)
    for _ in range(max_halvings):
        try:
            return outer_calibration(curve, alpha)
        except AlphaTooLarge:
            alpha *= 0.5
    raise AlphaTooLarge(f"no admissible alpha after {max_halvings} halvings")


def _central4(f: np.ndarray, step: float, axis: int) -> np.ndarray:
    """Fourth-order periodic central difference along axis."""
    p1, m1 = np.roll(f, -1, axis=axis), np.roll(f, 1, axis=axis)
    p2, m2 = np.roll(f, -2, axis=axis), np.roll(f, 2, axis=axis)
    return (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * step)


def outer_calibration_divergence_residual(cal: OuterCalibration, depths: np.ndarray) -> float:
    """Largest finite-difference residual of the curvilinear divergence identity

        (1/(1+kappa d)) dz1/ds + kappa/(1+kappa d) z2 + dz2/dd = 0

    evaluated in the flux form (dz1/ds + d((1+kappa d) z2)/dd)/(1+kappa d).
    depths must be uniformly spaced; rows whose stencil straddles the kinks
    of eta at d = 1 and d = 2 (or the ends of the grid) are skipped.
    """
    d = np.asarray(depths, dtype=np.float64)
    if len(d) < 5:
        raise ValueError("need at least five depths")
    dd = d[1] - d[0]
    if not np.allclose(np.diff(d), dd, rtol=1e-9, atol=0.0):
        raise ValueError("depths must be uniformly spaced")
    ds = cal.curve.total_length / cal.curve.samples

    z1, z2 = cal.components(d)
    z1, z2 = z1[:-1], z2[:-1]
    kappa = cal.curve.curvature[:-1, None]
    flux = (1.0 + kappa * d[None, :]) * z2

    d_s = _central4(z1, ds, axis=0)
    d_d = _central4(flux, dd, axis=1)
    residual = (d_s + d_d) / (1.0 + kappa * d[None, :])

    valid = np.ones(len(d), dtype=bool)
    valid[:2] = valid[-2:] = False
    for kink in (1.0, 2.0):
        valid &= ~((d - 2 * dd < kink) & (d + 2 * dd > kink))
    if not valid.any():
        raise ValueError("no depth row is free of the eta kinks")
    return float(np.max(np.abs(residual[:, valid])))

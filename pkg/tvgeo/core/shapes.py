"""
Analytic planar shapes on the unit torus and their plain-text description.

Shape description format (one shape per line, decimal reals, '#' starts a comment):

    disc CX CY R
    rectangle X0 Y0 W H
    rounded_rectangle X0 Y0 W H RHO
    ellipse CX CY A B                 (axis-aligned, A along x, B along y)
    polygon X1 Y1 X2 Y2 X3 Y3 ...     (convex; either orientation)
    union SHAPE; SHAPE; ...           (pairwise disjoint convex components)

Parentheses and commas are accepted as separators, so 'disc(0.5, 0.5, 0.25)'
reads the same as 'disc 0.5 0.5 0.25'. Coordinates are domain units: x runs
along grid rows, y along columns (see tvgeo.core.grid).
"""

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from tvgeo.core.errors import ShapeSpecError
from tvgeo.core.grid import GridImage, grid_coords

_SUBSAMPLES = 4
_EDGE_TOL = 1e-12


class Shape:
    """Common interface of every shape kind."""

    kind = 'shape'

    @property
    def area(self) -> float:
        raise NotImplementedError

    @property
    def perimeter(self) -> float:
        raise NotImplementedError

    @property
    def curvature_max(self) -> float:
        """Essential supremum of boundary curvature (inf at corners)."""
        raise NotImplementedError

    @property
    def inradius(self) -> float:
        raise NotImplementedError

    @property
    def is_convex(self) -> bool:
        return True

    @property
    def components(self) -> list['Shape']:
        return [self]

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def signed_distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Euclidean distance to the boundary, negative inside."""
        raise NotImplementedError

    def boundary_points(self, m: int = 512) -> np.ndarray:
        """m points on the boundary in counterclockwise order, shape (m, 2)."""
        raise NotImplementedError

    def mask(self, n: int) -> np.ndarray:
        """Pixel-centre membership on the n x n grid."""
        x, y = grid_coords(n)
        return self.contains(x, y)

    def __str__(self) -> str:
        return format_shape(self)


@dataclass(frozen=True)
class Disc(Shape):
    cx: float
    cy: float
    r: float
    kind = 'disc'

    def __post_init__(self):
        if not self.r > 0:
            raise ShapeSpecError(f"disc radius must be positive, got {self.r}")

    @property
    def area(self) -> float:
        return math.pi * self.r ** 2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.r

    @property
    def curvature_max(self) -> float:
        return 1.0 / self.r

    @property
    def inradius(self) -> float:
        return self.r

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.r ** 2

    def signed_distance(self, x, y):
        return np.hypot(x - self.cx, y - self.cy) - self.r

    def boundary_points(self, m=512):
        t = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([self.cx + self.r * np.cos(t), self.cy + self.r * np.sin(t)])


@dataclass(frozen=True)
class RoundedRectangle(Shape):
    """Axis-aligned rectangle [x0, x0+w] x [y0, y0+h] with corner arcs of radius rho."""
    x0: float
    y0: float
    w: float
    h: float
    rho: float = 0.0
    kind = 'rounded_rectangle'

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ShapeSpecError(f"rectangle sides must be positive, got {self.w} x {self.h}")
        if not 0.0 <= self.rho <= 0.5 * min(self.w, self.h):
            raise ShapeSpecError(f"corner radius {self.rho} must lie in [0, min(w, h)/2]")

    @property
    def area(self) -> float:
        return self.w * self.h - (4.0 - math.pi) * self.rho ** 2

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.w + self.h) - (8.0 - 2.0 * math.pi) * self.rho

    @property
    def curvature_max(self) -> float:
        return math.inf if self.rho == 0.0 else 1.0 / self.rho

    @property
    def inradius(self) -> float:
        return 0.5 * min(self.w, self.h)

    def _core(self, x, y):
        # offsets from the inner rectangle shrunk by rho
        cxl, cxh = self.x0 + self.rho, self.x0 + self.w - self.rho
        cyl, cyh = self.y0 + self.rho, self.y0 + self.h - self.rho
        qx = np.maximum(cxl - x, x - cxh)
        qy = np.maximum(cyl - y, y - cyh)
        return qx, qy

    def signed_distance(self, x, y):
        qx, qy = self._core(x, y)
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        return outside + inside - self.rho

    def contains(self, x, y):
        return self.signed_distance(x, y) <= _EDGE_TOL

    def boundary_points(self, m=512):
        return _rounded_rect_outline(self, m)

    def opened(self, rho: float) -> 'RoundedRectangle':
        """The opening by radius-rho balls (closed form)."""
        return RoundedRectangle(self.x0, self.y0, self.w, self.h, max(self.rho, rho))


class Rectangle(RoundedRectangle):
    """Sharp-cornered rectangle; a rounded rectangle with rho = 0."""
    kind = 'rectangle'

    def __init__(self, x0: float, y0: float, w: float, h: float):
        super().__init__(x0, y0, w, h, 0.0)


@dataclass(frozen=True)
class Ellipse(Shape):
    cx: float
    cy: float
    a: float
    b: float
    kind = 'ellipse'

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ShapeSpecError(f"ellipse semi-axes must be positive, got {self.a}, {self.b}")

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    @property
    def perimeter(self) -> float:
        # Ramanujan's second approximation
        a, b = self.a, self.b
        hh = ((a - b) / (a + b)) ** 2
        return math.pi * (a + b) * (1.0 + 3.0 * hh / (10.0 + math.sqrt(4.0 - 3.0 * hh)))

    @property
    def curvature_max(self) -> float:
        return max(self.a / self.b ** 2, self.b / self.a ** 2)

    @property
    def inradius(self) -> float:
        return min(self.a, self.b)

    def contains(self, x, y):
        return ((x - self.cx) / self.a) ** 2 + ((y - self.cy) / self.b) ** 2 <= 1.0

    def signed_distance(self, x, y):
        return _polyline_signed_distance(self, x, y, 4096)

    def boundary_points(self, m=512):
        t = 2.0 * np.pi * np.arange(m) / m
        return np.column_stack([self.cx + self.a * np.cos(t), self.cy + self.b * np.sin(t)])


@dataclass(frozen=True)
class ConvexPolygon(Shape):
    vertices: tuple[tuple[float, float], ...]
    kind = 'polygon'

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ShapeSpecError("polygon needs at least three (x, y) vertices")
        if _shoelace(v) < 0:
            object.__setattr__(self, 'vertices', tuple(map(tuple, v[::-1])))
            v = v[::-1]
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if np.any(cross < -1e-12) or _shoelace(v) <= 0:
            raise ShapeSpecError("polygon vertices must describe a convex polygon with positive area")

    @property
    def _v(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.float64)

    def _halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        v = self._v
        e = np.roll(v, -1, axis=0) - v
        normals = np.column_stack([e[:, 1], -e[:, 0]])
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = np.sum(normals * v, axis=1)
        return normals, offsets

    @property
    def area(self) -> float:
        return float(_shoelace(self._v))

    @property
    def perimeter(self) -> float:
        v = self._v
        return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())

    @property
    def curvature_max(self) -> float:
        return math.inf

    @property
    def inradius(self) -> float:
        # Chebyshev centre: maximize r subject to n_k . p + r <= c_k
        normals, offsets = self._halfplanes()
        a_ub = np.column_stack([normals, np.ones(len(normals))])
        res = linprog(c=[0.0, 0.0, -1.0], A_ub=a_ub, b_ub=offsets,
                      bounds=[(None, None), (None, None), (0.0, None)], method='highs')
        return float(res.x[2])

    def contains(self, x, y):
        normals, offsets = self._halfplanes()
        inside = np.ones(np.shape(x), dtype=bool)
        for (nx, ny), c in zip(normals, offsets):
            inside &= nx * x + ny * y <= c + _EDGE_TOL
        return inside

    def signed_distance(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        v = self._v
        best = np.full(np.shape(x), np.inf)
        for p, q in zip(v, np.roll(v, -1, axis=0)):
            best = np.minimum(best, _segment_distance(x, y, p, q))
        return np.where(self.contains(x, y), -best, best)

    def boundary_points(self, m=512):
        v = self._v
        lengths = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        s = np.arange(m) * lengths.sum() / m
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        k = np.clip(np.searchsorted(cum, s, side='right') - 1, 0, len(v) - 1)
        t = (s - cum[k]) / lengths[k]
        return v[k] + t[:, None] * (np.roll(v, -1, axis=0)[k] - v[k])


@dataclass(frozen=True)
class Union(Shape):
    parts: tuple[Shape, ...]
    kind = 'union'

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ShapeSpecError("union needs at least one component")
        for part in self.parts:
            if isinstance(part, Union):
                raise ShapeSpecError("union components must be convex shapes, not unions")
        for i, a in enumerate(self.parts):
            for b in self.parts[i + 1:]:
                pa = a.boundary_points(256)
                pb = b.boundary_points(256)
                if (np.min(b.signed_distance(pa[:, 0], pa[:, 1])) <= 0.0
                        or np.min(a.signed_distance(pb[:, 0], pb[:, 1])) <= 0.0):
                    raise ShapeSpecError(f"union components overlap or touch: {a} and {b}")

    @property
    def components(self) -> list[Shape]:
        return list(self.parts)

    @property
    def is_convex(self) -> bool:
        return len(self.parts) == 1

    @property
    def area(self) -> float:
        return sum(p.area for p in self.parts)

    @property
    def perimeter(self) -> float:
        return sum(p.perimeter for p in self.parts)

    @property
    def curvature_max(self) -> float:
        return max(p.curvature_max for p in self.parts)

    @property
    def inradius(self) -> float:
        return max(p.inradius for p in self.parts)

    def contains(self, x, y):
        inside = np.zeros(np.shape(x), dtype=bool)
        for p in self.parts:
            inside |= p.contains(x, y)
        return inside

    def signed_distance(self, x, y):
        return np.minimum.reduce([p.signed_distance(x, y) for p in self.parts])

    def boundary_points(self, m=512):
        return np.vstack([p.boundary_points(m) for p in self.parts])


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------

def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segment_distance(x, y, p, q):
    dx, dy = q[0] - p[0], q[1] - p[1]
    t = ((x - p[0]) * dx + (y - p[1]) * dy) / (dx * dx + dy * dy)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(x - (p[0] + t * dx), y - (p[1] + t * dy))


def _polyline_signed_distance(shape: Shape, x, y, m: int):
    pts = shape.boundary_points(m)
    tree = cKDTree(pts)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dist, _ = tree.query(np.column_stack([x.ravel(), y.ravel()]))
    dist = dist.reshape(np.shape(x))
    return np.where(shape.contains(x, y), -dist, dist)


def _rounded_rect_outline(r: RoundedRectangle, m: int) -> np.ndarray:
    """Counterclockwise outline sampled uniformly in arclength."""
    rho = r.rho
    xl, xh = r.x0 + rho, r.x0 + r.w - rho
    yl, yh = r.y0 + rho, r.y0 + r.h - rho
    # piecewise path: bottom edge, corner, right edge, corner, ...
    pieces = [
        ('line', (xl, r.y0), (xh, r.y0)),
        ('arc', (xh, yl), -0.5 * np.pi),
        ('line', (r.x0 + r.w, yl), (r.x0 + r.w, yh)),
        ('arc', (xh, yh), 0.0),
        ('line', (xh, r.y0 + r.h), (xl, r.y0 + r.h)),
        ('arc', (xl, yh), 0.5 * np.pi),
        ('line', (r.x0, yh), (r.x0, yl)),
        ('arc', (xl, yl), np.pi),
    ]
    lengths = [math.dist(a, b) if kind == 'line' else 0.5 * np.pi * rho
               for kind, a, b in pieces]
    total = sum(lengths)
    s = np.arange(m) * total / m
    out = np.empty((m, 2))
    start = 0.0
    for (kind, a, b), length in zip(pieces, lengths):
        sel = (s >= start) & (s < start + length) if length > 0 else np.zeros(m, dtype=bool)
        t = (s[sel] - start) / length if length > 0 else s[sel]
        if kind == 'line':
            out[sel, 0] = a[0] + t * (b[0] - a[0])
            out[sel, 1] = a[1] + t * (b[1] - a[1])
        else:
            ang = b + t * 0.5 * np.pi
            out[sel, 0] = a[0] + rho * np.cos(ang)
            out[sel, 1] = a[1] + rho * np.sin(ang)
        start += length
    return out


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def rasterize(shape: Shape, n: int) -> GridImage:
    """Anti-aliased indicator: each pixel holds its covered area fraction.

    The fraction is estimated from a 4x4 sub-grid over the pixel cell centred
    on (i/n, j/n); sample coordinates wrap onto [0, 1).
    """
    if n < 16:
        raise ValueError(f"rasterize needs n >= 16, got {n}")
    acc = np.zeros((n, n))
    for sx, sy in subsample_points(n):
        acc += shape.contains(sx, sy)
    return GridImage(acc / _SUBSAMPLES ** 2)


def subsample_points(n: int):
    """Yield the 4x4 sub-pixel sample grids (x, y), each (n, n), wrapped onto [0, 1)."""
    x, y = grid_coords(n)
    offsets = ((np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES - 0.5) / n
    for ox in offsets:
        for oy in offsets:
            yield np.mod(x + ox, 1.0), np.mod(y + oy, 1.0)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_ARITY = {'disc': 3, 'rectangle': 4, 'rounded_rectangle': 5, 'ellipse': 4}


def _numbers(tokens: list[str], text: str) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ShapeSpecError(f"non-numeric parameter in shape {text!r}") from None


def _parse_one(text: str) -> Shape:
    tokens = re.sub(r'[(),]', ' ', text).split()
    if not tokens:
        raise ShapeSpecError("empty shape description")
    kind, params = tokens[0].lower(), _numbers(tokens[1:], text)
    if kind in _ARITY and len(params) != _ARITY[kind]:
        raise ShapeSpecError(f"{kind} takes {_ARITY[kind]} parameters, got {len(params)} in {text!r}")
    if kind == 'disc':
        return Disc(*params)
    if kind == 'rectangle':
        return Rectangle(*params)
    if kind == 'rounded_rectangle':
        return RoundedRectangle(*params)
    if kind == 'ellipse':
        return Ellipse(*params)
    if kind == 'polygon':
        if len(params) < 6 or len(params) % 2:
            raise ShapeSpecError(f"polygon needs an even number (>= 6) of coordinates in {text!r}")
        return ConvexPolygon(tuple(zip(params[0::2], params[1::2])))
    raise ShapeSpecError(f"unknown shape kind {kind!r}")


def parse_shape(text: str) -> Shape:
    """Parse one shape description line (comments allowed)."""
    text = text.split('#', 1)[0].strip()
    if not text:
        raise ShapeSpecError("empty shape description")
    head, _, rest = text.partition(' ')
    if head.lower() == 'union':
        parts = [p for p in rest.split(';') if p.strip()]
        if not parts:
            raise ShapeSpecError("union has no components")
        return Union(tuple(_parse_one(p) for p in parts))
    return _parse_one(text)


def _num(v: float) -> str:
    return repr(float(v))


def format_shape(shape: Shape) -> str:
    """Inverse of parse_shape (shortest round-trip decimals)."""
    if isinstance(shape, Union):
        return 'union ' + '; '.join(format_shape(p) for p in shape.parts)
    if isinstance(shape, Disc):
        vals = [shape.cx, shape.cy, shape.r]
    elif isinstance(shape, Rectangle):
        vals = [shape.x0, shape.y0, shape.w, shape.h]
    elif isinstance(shape, RoundedRectangle):
        vals = [shape.x0, shape.y0, shape.w, shape.h, shape.rho]
    elif isinstance(shape, Ellipse):
        vals = [shape.cx, shape.cy, shape.a, shape.b]
    elif isinstance(shape, ConvexPolygon):
        vals = [c for vertex in shape.vertices for c in vertex]
    else:
        raise ShapeSpecError(f"cannot format {type(shape).__name__}")
    return ' '.join([shape.kind] + [_num(v) for v in vals])


def load_shapes(path: str | Path) -> list[Shape]:
    """Read every shape in a description file, skipping blank and comment lines."""
    shapes = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split('#', 1)[0].strip()
        if not body:
            continue
        try:
            shapes.append(parse_shape(body))
        except ShapeSpecError as e:
            raise ShapeSpecError(f"{path}:{lineno}: {e}") from None
    return shapes

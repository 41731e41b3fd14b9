"""
Level sets, contours and distances on the periodic grid.

Contours are extracted with marching squares (skimage.measure.find_contours)
at level 0.5 of the mask after a 3x3 periodic box smoothing. Curve vertices
are stored in domain units: a vertex (x, y) corresponds to the fractional
grid position (row, col) = (x*n, y*n). Closed outer curves run
counterclockwise and hole curves clockwise in the (x, y) frame. Curves that
reach the array border are kept open and flagged as wrapped.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree
from skimage import draw, measure

from tvgeo.core.errors import EmptyContour, RadiusTooSmall
from tvgeo.core.grid import GridImage


@dataclass
class BinaryRegion:
    mask: np.ndarray   # shape: (n, n), dtype bool
    zero_level: bool = False   # set for the t = 0 level-set convention

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @property
    def area(self) -> float:
        return float(self.mask.sum()) / self.n ** 2

    @property
    def empty(self) -> bool:
        return not self.mask.any()

    def complement(self) -> 'BinaryRegion':
        return BinaryRegion(~self.mask)


@dataclass
class ContourSet:
    n: int
    curves: list[np.ndarray] = field(default_factory=list)   # each (m, 2) in domain units
    holes: list[bool] = field(default_factory=list)
    wrapped: list[bool] = field(default_factory=list)

    @property
    def lengths(self) -> list[float]:
        return [float(np.linalg.norm(np.diff(c, axis=0), axis=1).sum()) for c in self.curves]

    @property
    def total_length(self) -> float:
        return float(sum(self.lengths))

    @property
    def count(self) -> int:
        return len(self.curves)

    @property
    def empty(self) -> bool:
        return not self.curves

    def vertices(self) -> np.ndarray:
        if not self.curves:
            return np.empty((0, 2))
        return np.vstack(self.curves)

    def extend(self, other: 'ContourSet') -> None:
        self.curves.extend(other.curves)
        self.holes.extend(other.holes)
        self.wrapped.extend(other.wrapped)


@dataclass
class JordanComponent:
    outer: list[np.ndarray]
    holes: list[np.ndarray]
    wrapped: bool = False


@dataclass
class DistanceMap:
    dist: np.ndarray   # shape: (n, n), domain units

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def tube(self, r: float) -> BinaryRegion:
        """T_r = {dist <= r}."""
        return BinaryRegion(self.dist <= r)

    def at(self, points: np.ndarray) -> np.ndarray:
        """Bilinear periodic interpolation at (m, 2) domain-unit points."""
        if len(points) == 0:
            return np.empty(0)
        coords = np.asarray(points, dtype=np.float64).T * self.n
        return ndimage.map_coordinates(self.dist, coords, order=1, mode='grid-wrap')


# ---------------------------------------------------------------------------
# Level sets
# ---------------------------------------------------------------------------

def level_set(u: GridImage, t: float) -> BinaryRegion:
    """{u >= t} for t > 0, {u <= t} for t < 0; t = 0 goes through level_set_zero."""
    if t > 0:
        return BinaryRegion(u.values >= t)
    if t < 0:
        return BinaryRegion(u.values <= t)
    return level_set_zero(u)


def level_set_zero(u: GridImage) -> BinaryRegion:
    """Complement of the union of the negative level sets, i.e. {u >= 0}, flagged."""
    return BinaryRegion(~(u.values < 0), zero_level=True)


# ---------------------------------------------------------------------------
# Contours and Jordan decomposition
# ---------------------------------------------------------------------------

def _signed_area(curve: np.ndarray) -> float:
    x, y = curve[:, 0], curve[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _is_closed(curve: np.ndarray) -> bool:
    return len(curve) > 2 and np.allclose(curve[0], curve[-1])


def _boundary_curves(mask: np.ndarray) -> list[np.ndarray]:
    """Marching-squares curves of a mask in grid units (smoothed first, raw as fallback)."""
    if mask.all() or not mask.any():
        return []
    smooth = ndimage.uniform_filter(mask.astype(np.float64), size=3, mode='wrap')
    curves = measure.find_contours(smooth, 0.5)
    if not curves:
        # too thin to survive smoothing
        curves = measure.find_contours(mask.astype(np.float64), 0.5)
    return [c for c in curves if len(c) > 1]


def _orient(curve: np.ndarray, ccw: bool) -> np.ndarray:
    if _is_closed(curve) and (_signed_area(curve) > 0) != ccw:
        return curve[::-1].copy()
    return curve


def jordan_decompose(region: BinaryRegion) -> list[JordanComponent]:
    """Split a region into connected components, each with outer curves and hole curves.

    Components are 8-connected; holes are 4-connected pieces of the
    complement enclosed by a component. Curves are in domain units.
    """
    n = region.n
    labels, count = measure.label(region.mask, connectivity=2, return_num=True)
    components = []
    for k in range(1, count + 1):
        comp = labels == k
        filled = ndimage.binary_fill_holes(comp)
        outer = [_orient(c / n, ccw=True) for c in _boundary_curves(filled)]
        hole_labels, hole_count = measure.label(filled & ~comp, connectivity=1, return_num=True)
        holes = []
        for j in range(1, hole_count + 1):
            holes.extend(_orient(c / n, ccw=False) for c in _boundary_curves(hole_labels == j))
        wrapped = any(not _is_closed(c) for c in outer + holes)
        components.append(JordanComponent(outer=outer, holes=holes, wrapped=wrapped))
    return components


def contours(region: BinaryRegion) -> ContourSet:
    """All boundary curves of a region: outer curves counterclockwise, holes clockwise."""
    out = ContourSet(region.n)
    for comp in jordan_decompose(region):
        for c in comp.outer:
            out.curves.append(c)
            out.holes.append(False)
            out.wrapped.append(not _is_closed(c))
        for c in comp.holes:
            out.curves.append(c)
            out.holes.append(True)
            out.wrapped.append(not _is_closed(c))
    return out


def reconstruct(components: list[JordanComponent], n: int) -> BinaryRegion:
    """Rasterize a Jordan decomposition (closed curves only) back to a mask."""
    mask = np.zeros((n, n), dtype=bool)
    for comp in components:
        fill = np.zeros((n, n), dtype=bool)
        for c in comp.outer:
            if _is_closed(c):
                rr, cc = draw.polygon(c[:, 0] * n, c[:, 1] * n, shape=(n, n))
                fill[rr, cc] = True
        for c in comp.holes:
            if _is_closed(c):
                rr, cc = draw.polygon(c[:, 0] * n, c[:, 1] * n, shape=(n, n))
                fill[rr, cc] = False
        mask |= fill
    return BinaryRegion(mask)


def area(region: BinaryRegion) -> float:
    return region.area


def perimeter(region: BinaryRegion) -> float:
    """Total contour length in domain units (0 for the empty set and the full torus)."""
    return contours(region).total_length


def isoperimetric_ok(region: BinaryRegion, rel_tol: float = 0.05) -> bool:
    """4 pi min(|E|, 1-|E|) <= P(E)^2, up to a relative discretization tolerance."""
    a = region.area
    return 4.0 * math.pi * min(a, 1.0 - a) <= perimeter(region) ** 2 * (1.0 + rel_tol)


def coarea_tv(u: GridImage, ts: np.ndarray) -> float:
    """Co-area estimate of the total variation: sum over t of P(level_set(u, t)) dt.

    ts must be uniformly spaced and avoid 0.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if len(ts) < 2:
        raise ValueError("need at least two levels")
    dt = float(ts[1] - ts[0])
    return sum(perimeter(level_set(u, float(t))) for t in ts) * abs(dt)


def perimeter_bounds(v: GridImage) -> tuple[float, float]:
    """(p_min, p_max) for level sets E with P(E) <= integral of v over E.

    p_min = 4 pi / ||v||_inf from the isoperimetric inequality;
    p_max = ||v||_L2 from Cauchy-Schwarz with |E| <= 1.
    """
    vmax = float(np.max(np.abs(v.values)))
    l2 = float(np.sqrt(np.sum(v.values ** 2))) / v.n
    p_min = 4.0 * math.pi / vmax if vmax > 0 else math.inf
    return p_min, l2


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def periodic_edt(mask: np.ndarray) -> np.ndarray:
    """Periodic Euclidean distance (pixels) from each True pixel to the nearest False one.

    False pixels get 0; if there is no False pixel every distance is inf.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.all():
        return np.full(mask.shape, np.inf)
    n0, n1 = mask.shape
    tiled = np.tile(mask, (3, 3))
    dist = ndimage.distance_transform_edt(tiled)
    return dist[n0:2 * n0, n1:2 * n1]


def distance_map(source: BinaryRegion) -> DistanceMap:
    """Distance (domain units) from every pixel to the nearest source pixel."""
    return DistanceMap(periodic_edt(~source.mask) / source.n)


def _densify(curve: np.ndarray, step: float) -> np.ndarray:
    if len(curve) < 2:
        return curve
    seg = np.diff(curve, axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    pieces = [curve[:1]]
    for p, d, length in zip(curve[:-1], seg, lengths):
        k = max(1, int(math.ceil(length / step)))
        t = np.arange(1, k + 1)[:, None] / k
        pieces.append(p + t * d)
    return np.vstack(pieces)


def _dense_points(curves: ContourSet, step_px: float = 0.25) -> np.ndarray:
    step = step_px / curves.n
    pts = [_densify(c, step) for c in curves.curves]
    return np.vstack(pts) if pts else np.empty((0, 2))


def hausdorff(a: ContourSet, b: ContourSet) -> float:
    """Symmetric Hausdorff distance between two curve sets (domain units)."""
    pa, pb = _dense_points(a), _dense_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyContour("Hausdorff distance needs two nonempty curve sets")
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return float(max(d_ab.max(), d_ba.max()))


def curves_to_mask(curves: ContourSet) -> BinaryRegion:
    """Pixels nearest to densely sampled curve points."""
    n = curves.n
    mask = np.zeros((n, n), dtype=bool)
    pts = _dense_points(curves)
    if len(pts):
        idx = np.mod(np.rint(pts * n).astype(np.int64), n)
        mask[idx[:, 0], idx[:, 1]] = True
    return BinaryRegion(mask)


@dataclass
class TubeCheck:
    contained: bool
    worst_violation: float
    max_distance: float


def tube_contains(curves: ContourSet, source: BinaryRegion | ContourSet | DistanceMap,
                  r: float) -> TubeCheck:
    """Whether every curve vertex lies within distance r of the source set."""
    if r < 0:
        raise ValueError(f"tube radius must be nonnegative, got {r}")
    if isinstance(source, DistanceMap):
        dmap = source
    elif isinstance(source, ContourSet):
        dmap = distance_map(curves_to_mask(source))
    else:
        dmap = distance_map(source)
    verts = curves.vertices()
    if len(verts) == 0:
        return TubeCheck(True, 0.0, 0.0)
    worst = float(np.max(dmap.at(verts)))
    return TubeCheck(contained=worst <= r, worst_violation=max(0.0, worst - r), max_distance=worst)


def density_ratio(region: BinaryRegion, point: tuple[int, int], r: float) -> tuple[float, float]:
    """(|B(x,r) & E| / |B(x,r)|, complement fraction) by pixel counting around grid point x."""
    n = region.n
    if r < 3.0 / n:
        raise RadiusTooSmall(f"radius {r} covers fewer than 3 pixels at n={n}")
    rad = r * n
    k = int(math.floor(rad))
    di, dj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1), indexing='ij')
    inside = di ** 2 + dj ** 2 <= rad ** 2
    i, j = point
    rows = np.mod(i + di[inside], n)
    cols = np.mod(j + dj[inside], n)
    frac = float(region.mask[rows, cols].mean())
    return frac, 1.0 - frac


def boundary_pixels(region: BinaryRegion) -> np.ndarray:
    """(k, 2) indices of region pixels with a 4-neighbour outside (periodic)."""
    m = region.mask
    edge = m & ~(np.roll(m, 1, 0) & np.roll(m, -1, 0) & np.roll(m, 1, 1) & np.roll(m, -1, 1))
    return np.argwhere(edge)


def set_energy(region: BinaryRegion, v: GridImage, sign: int = 1) -> float:
    """P(E) - sign * integral of v over E."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if region.empty:
        return 0.0
    return perimeter(region) - sign * float(v.values[region.mask].sum()) / v.n ** 2

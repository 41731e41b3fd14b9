"""
Numeric certificates and stability experiments.

The numeric side (solver sweeps, saturation maps) is always compared with
the closed-form oracles of tvgeo.core.analytic, never with itself: the
noiseless certificate v_0 of a shape comes from convex_certificate_v0.

Stability runs follow this recipe per (lambda, sigma, seed):

    y = rasterize(shape) + w,   w ~ N(0, sigma^2) i.i.d. (PCG64, seeded)
    solve, then for every sampled t and tube radius r check that every
    level line of u lies within distance r of the extended support.

The tube criterion is only claimed when the measured certificate deviation
satisfies ||v_lam,w - v_0|| <= delta_{r/2} * min(r/(2C), sqrt(4 pi)), with C
the square root of the largest level-set area seen in the experiment and
delta from the closed-form calibration (discs only; other shapes are
reported as unverifiable).

Two distances are judged against that threshold. The analytic verdict uses
certificate_distance = ||v_lam,w - v_0|| with v_0 from the oracle as is; on
a grid it also carries the discretization error of the scheme, which at
practical n can exceed the threshold. The primary verdict uses
measured_distance = ||v_lam,w - v_lam,0|| + ||v_lam,0 - v_0||, where the
first term is measured against the noiseless solve on the same grid and
the second comes from the closed forms. The triangle inequality makes it
an upper bound on ||v_lam,w - v_0|| within the discrete model.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from tvgeo.core import analytic
from tvgeo.core.geometry import (BinaryRegion, ContourSet, contours, distance_map, hausdorff,
                                 level_set, perimeter_bounds, tube_contains)
from tvgeo.core.grid import DualField, GridImage, gradient_magnitude, l2_norm
from tvgeo.core.shapes import Shape, rasterize
from tvgeo.core.solver import SolveResult, SolverConfig, solve

RNG_NAME = 'numpy.random.PCG64'
DEFAULT_LEVELS = tuple(round(0.1 * k, 1) for k in range(1, 10))

SATISFIED = 'satisfied'
VIOLATED = 'violated'
UNVERIFIABLE = 'unverifiable'


def noise(n: int, sigma: float, seed: int) -> tuple[GridImage, float]:
    """I.i.d. Gaussian noise image and its discrete L^2 norm."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.Generator(np.random.PCG64(seed))
    w = GridImage(sigma * rng.standard_normal((n, n)))
    return w, l2_norm(w)


def saturation(z: DualField) -> GridImage:
    """Per-pixel norm of a dual field, in [0, 1] for feasible fields."""
    return GridImage(z.norms())


def _with_lambda(cfg: SolverConfig, lam: float) -> SolverConfig:
    return SolverConfig(lam=lam, tau=cfg.tau, max_iters=cfg.max_iters,
                        gap_tol=cfg.gap_tol, record_every=cfg.record_every)


# ---------------------------------------------------------------------------
# Minimal-norm certificate sweeps
# ---------------------------------------------------------------------------

@dataclass
class CertificateEstimate:
    lam: float
    v: GridImage
    z: DualField
    gap: float
    l2_norm: float
    iters: int = 0


@dataclass
class MncSweep:
    estimates: list[CertificateEstimate]

    def __iter__(self):
        return iter(self.estimates)

    def __len__(self) -> int:
        return len(self.estimates)

    def __getitem__(self, k: int) -> CertificateEstimate:
        return self.estimates[k]

    @property
    def differences(self) -> list[float]:
        """Relative L^2 distance of each estimate to the previous one (nan for the first)."""
        out = [math.nan]
        for prev, cur in zip(self.estimates, self.estimates[1:]):
            ref = max(cur.l2_norm, 1e-300)
            out.append(l2_norm(GridImage(cur.v.values - prev.v.values)) / ref)
        return out

    @property
    def norm_slope(self) -> float:
        """Slope of log ||v_lam|| against log lam (0 on a plateau, -1/2 for a square)."""
        lams = np.array([e.lam for e in self.estimates])
        norms = np.array([e.l2_norm for e in self.estimates])
        keep = norms > 0
        if keep.sum() < 2:
            return 0.0
        return float(np.polyfit(np.log(lams[keep]), np.log(norms[keep]), 1)[0])


def mnc_estimate(f: GridImage, lambdas: list[float], cfg: SolverConfig | None = None,
                 progress: Callable[[CertificateEstimate], None] | None = None) -> MncSweep:
    """Noiseless certificates v_lam,0 down a decreasing lambda sweep (warm-started)."""
    if not lambdas:
        raise ValueError("lambda list is empty")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly decreasing")
    base = cfg or SolverConfig(lam=lambdas[0])
    estimates = []
    z = None
    for lam in lambdas:
        res = solve(f, _with_lambda(base, lam), z0=z)
        z = res.z
        est = CertificateEstimate(lam=lam, v=res.v, z=res.z, gap=res.gap,
                                  l2_norm=l2_norm(res.v), iters=res.iters)
        estimates.append(est)
        if progress is not None:
            progress(est)
    return MncSweep(estimates)


# ---------------------------------------------------------------------------
# Extended support from saturation
# ---------------------------------------------------------------------------

@dataclass
class ExtendedSupportMap:
    saturation: GridImage
    epsilon: float
    result: SolveResult | None = None

    @property
    def region(self) -> BinaryRegion:
        return self.threshold(self.epsilon)

    def threshold(self, epsilon: float) -> BinaryRegion:
        """{saturation >= 1 - epsilon}; shrinks as epsilon decreases."""
        return BinaryRegion(self.saturation.values >= 1.0 - epsilon)


def extended_support(f: GridImage, lam_small: float, epsilon: float = 0.02,
                     cfg: SolverConfig | None = None) -> ExtendedSupportMap:
    """Saturation map of a converged dual solution started from z = 0."""
    if not 0.001 < epsilon < 0.2:
        raise ValueError(f"epsilon must lie in (0.001, 0.2), got {epsilon}")
    run_cfg = _with_lambda(cfg, lam_small) if cfg is not None else SolverConfig(lam=lam_small)
    res = solve(f, run_cfg)
    return ExtendedSupportMap(saturation=saturation(res.z), epsilon=epsilon, result=res)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass
class BurgerOsher:
    lhs: float
    rhs: float

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs * 1.01


def burger_osher_bound(u: GridImage, v0: GridImage, tube: BinaryRegion, delta: float,
                       lam: float, noise_norm: float) -> BurgerOsher:
    """(1 - delta) TV(u outside T) against |w|^2/(2 lam) + lam |v|^2/2 + |w| |v|."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    density = gradient_magnitude(u).values
    tv_out = float(density[~tube.mask].sum()) / u.n ** 2
    vn = l2_norm(v0)
    rhs = noise_norm ** 2 / (2.0 * lam) + lam * vn ** 2 / 2.0 + noise_norm * vn
    return BurgerOsher(lhs=(1.0 - delta) * tv_out, rhs=rhs)


def jump_height_bound(rhs: float, r: float, delta: float) -> float:
    """Bound 2 rhs / (r (1 - delta)) on the oscillation of u over regions outside T_r."""
    return 2.0 * rhs / (r * (1.0 - delta))


@dataclass
class NonExpansiveness:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def _slack(res: SolveResult) -> float:
    # primal strong convexity: ||u - u*||^2 / 2 <= absolute gap
    return math.sqrt(2.0 * max(res.absolute_gap, 0.0)) / res.lam


def non_expansiveness(y1: GridImage, y2: GridImage, lam: float,
                      cfg: SolverConfig | None = None) -> NonExpansiveness:
    """||v1 - v2|| against ||y1 - y2|| / lam plus the slack of both inexact solves."""
    run_cfg = _with_lambda(cfg, lam) if cfg is not None else SolverConfig(lam=lam)
    r1, r2 = solve(y1, run_cfg), solve(y2, run_cfg)
    lhs = l2_norm(GridImage(r1.v.values - r2.v.values))
    rhs = l2_norm(GridImage(y1.values - y2.values)) / lam + _slack(r1) + _slack(r2)
    return NonExpansiveness(lhs=lhs, rhs=rhs)


def boundary_contours(shape: Shape, n: int, samples: int = 2048) -> ContourSet:
    """Closed polylines through the analytic boundary of every component."""
    out = ContourSet(n)
    for part in shape.components:
        pts = part.boundary_points(samples)
        out.curves.append(np.vstack([pts, pts[:1]]))
        out.holes.append(False)
        out.wrapped.append(False)
    return out


# ---------------------------------------------------------------------------
# Hausdorff convergence
# ---------------------------------------------------------------------------

@dataclass
class HausdorffStep:
    k: int
    lam: float
    noise_norm: float
    distance: float   # inf when the level set is empty
    iters: int


def hausdorff_convergence(shape: Shape, n: int, k_max: int = 4, lam0: float = 0.1,
                          noise_ratio: float = 0.05, seed: int = 0, level: float = 0.5,
                          cfg: SolverConfig | None = None) -> list[HausdorffStep]:
    """Distance from the `level` line of u_k to the boundary along lam_k = lam0 2^-k.

    The noise is one fixed standard-normal draw scaled so that
    ||w_k|| / lam_k = noise_ratio * lam_k / lam0, which tends to zero with k.
    """
    f = rasterize(shape, n)
    base, _ = noise(n, 1.0, seed)
    truth = boundary_contours(shape, n)
    steps = []
    z = None
    for k in range(k_max + 1):
        lam = lam0 * 2.0 ** -k
        sigma = noise_ratio * lam * lam / lam0
        w = GridImage(sigma * base.values)
        y = GridImage(f.values + w.values)
        run_cfg = _with_lambda(cfg, lam) if cfg is not None else SolverConfig(lam=lam)
        res = solve(y, run_cfg, z0=z)
        z = res.z
        lines = contours(level_set(res.u, level))
        dist = hausdorff(lines, truth) if not lines.empty else math.inf
        steps.append(HausdorffStep(k=k, lam=lam, noise_norm=l2_norm(w), distance=dist,
                                   iters=res.iters))
    return steps


# ---------------------------------------------------------------------------
# Stability experiments
# ---------------------------------------------------------------------------

@dataclass
class StabilityRecord:
    lam: float
    sigma: float
    seed: int
    r: float
    noise_norm: float
    contained: bool
    worst_violation: float
    hausdorff: dict[float, float]
    certificate_distance: float
    noise_deviation: float
    oracle_offset: float
    delta_half_r: float | None
    bo_lhs: float
    bo_rhs: float
    jump_bound: float | None
    max_level_area: float
    perimeter_violations: int
    iters: int
    gap: float
    hypothesis: str = UNVERIFIABLE
    hypothesis_threshold: float = math.nan
    analytic_hypothesis: str = UNVERIFIABLE

    @property
    def bo_satisfied(self) -> bool:
        return self.bo_lhs <= self.bo_rhs * 1.01

    @property
    def measured_distance(self) -> float:
        """Noise-induced certificate deviation plus the closed-form offset v_lam,0 - v_0."""
        return self.noise_deviation + self.oracle_offset

    @property
    def key(self) -> tuple:
        return (self.lam, self.sigma, self.seed, self.r)


@dataclass
class StabilityReport:
    shape: str
    n: int
    records: list[StabilityRecord] = field(default_factory=list)
    c_tilde: float = math.nan
    levels: tuple[float, ...] = DEFAULT_LEVELS
    lines: dict[tuple, ContourSet] = field(default_factory=dict)   # (lam, sigma, seed) -> level lines

    def under_hypothesis(self) -> list[StabilityRecord]:
        return [r for r in self.records if r.hypothesis == SATISFIED]

    @property
    def containment_rate(self) -> float:
        """Fraction of hypothesis-satisfied records whose level lines stayed in the tube."""
        sel = self.under_hypothesis()
        if not sel:
            return math.nan
        return sum(r.contained for r in sel) / len(sel)

    @property
    def passed(self) -> bool:
        """Containment under the hypothesis and the Burger-Osher bound on every record."""
        return (all(r.contained for r in self.under_hypothesis())
                and all(r.bo_satisfied for r in self.records))


@dataclass
class _Cell:
    lam: float
    sigma: float
    seed: int
    result: SolveResult
    noise_norm: float
    lines: dict[float, ContourSet]
    areas: list[float]
    noise_deviation: float


def _run_cell(f: GridImage, ref: SolveResult, cfg: SolverConfig, sigma: float, seed: int,
              levels: tuple[float, ...]) -> _Cell:
    lam = ref.lam
    if sigma == 0.0:
        res, w_norm = ref, 0.0
    else:
        w, w_norm = noise(f.n, sigma, seed)
        res = solve(GridImage(f.values + w.values), _with_lambda(cfg, lam), z0=ref.z)
    lines, areas = {}, []
    for t in levels:
        region = level_set(res.u, t)
        areas.append(region.area)
        lines[t] = contours(region)
    deviation = l2_norm(GridImage(res.v.values - ref.v.values))
    return _Cell(lam=lam, sigma=sigma, seed=seed, result=res, noise_norm=w_norm,
                 lines=lines, areas=areas, noise_deviation=deviation)


def stability_experiment(shape: Shape, n: int, lambdas: list[float], sigmas: list[float],
                         seeds: list[int], r_list: list[float],
                         cfg: SolverConfig | None = None,
                         levels: tuple[float, ...] = DEFAULT_LEVELS,
                         threads: int = 1,
                         progress: Callable[[str], None] | None = None) -> StabilityReport:
    """Tube-containment experiment over every (lambda, sigma, seed) cell.

    Each lambda gets one noiseless reference solve; noisy solves are
    warm-started from its dual field. Cells run on `threads` workers and the
    records come back sorted by (lambda, sigma, seed, r).
    """
    analytic.require_oracle(shape)
    if not lambdas:
        raise ValueError("lambda list is empty")
    if not r_list:
        raise ValueError("tube radius list is empty")
    base = cfg or SolverConfig(lam=lambdas[0])
    f = rasterize(shape, n)
    v0 = analytic.convex_certificate_v0(shape, n)
    support = analytic.extended_support_mask(shape, n)
    dmap = distance_map(support)
    truth = boundary_contours(shape, n)
    p_min, p_max = perimeter_bounds(v0)

    refs: dict[float, SolveResult] = {}
    offsets: dict[float, float] = {}
    for lam in lambdas:
        refs[lam] = solve(f, _with_lambda(base, lam))
        v_lam0 = analytic.convex_certificate_vlambda(shape, lam, n)
        offsets[lam] = l2_norm(GridImage(v_lam0.values - v0.values))
        if progress is not None:
            progress(f"reference lambda={lam:g}: {refs[lam].iters} iterations, gap {refs[lam].gap:.3g}")

    jobs = [(lam, sigma, seed) for lam in lambdas for sigma in sigmas
            for seed in (seeds if sigma > 0 else seeds[:1])]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(_run_cell, f, refs[lam], base, sigma, seed, levels)
                   for lam, sigma, seed in jobs]
        cells = []
        for fut in futures:
            cell = fut.result()
            cells.append(cell)
            if progress is not None:
                progress(f"lambda={cell.lam:g} sigma={cell.sigma:g} seed={cell.seed}: "
                         f"{cell.result.iters} iterations")

    max_area = max((a for c in cells for a in c.areas), default=0.0)
    c_tilde = math.sqrt(max_area)

    records = []
    run_lines = {}
    for cell in cells:
        u = cell.result.u
        lines = ContourSet(n)
        for t in levels:
            lines.extend(cell.lines[t])
        run_lines[(cell.lam, cell.sigma, cell.seed)] = lines
        dists = {t: (hausdorff(cell.lines[t], truth) if not cell.lines[t].empty else math.nan)
                 for t in levels}
        bad_perimeters = sum(
            1 for t in levels
            if not cell.lines[t].empty
            and not (p_min * 0.95 <= cell.lines[t].total_length <= p_max * 1.05))
        for r in r_list:
            check = tube_contains(lines, dmap, r)
            delta = analytic.tube_delta(shape, r / 2.0)
            bo = burger_osher_bound(u, v0, dmap.tube(r), delta if delta is not None else 0.0,
                                    cell.lam, cell.noise_norm)
            rec = StabilityRecord(
                lam=cell.lam, sigma=cell.sigma, seed=cell.seed, r=r,
                noise_norm=cell.noise_norm, contained=check.contained,
                worst_violation=check.worst_violation, hausdorff=dists,
                certificate_distance=l2_norm(GridImage(cell.result.v.values - v0.values)),
                noise_deviation=cell.noise_deviation, oracle_offset=offsets[cell.lam],
                delta_half_r=delta, bo_lhs=bo.lhs, bo_rhs=bo.rhs,
                jump_bound=jump_height_bound(bo.rhs, r, delta) if delta is not None else None,
                max_level_area=max(cell.areas, default=0.0),
                perimeter_violations=bad_perimeters,
                iters=cell.result.iters, gap=cell.result.gap)
            _judge(rec, c_tilde)
            records.append(rec)

    records.sort(key=lambda rec: rec.key)
    return StabilityReport(shape=str(shape), n=n, records=records, c_tilde=c_tilde,
                           levels=tuple(levels), lines=run_lines)


def _judge(rec: StabilityRecord, c_tilde: float) -> None:
    """Fill in whether the measured run meets the tube theorem's hypothesis.

    `hypothesis` judges measured_distance, `analytic_hypothesis` judges
    certificate_distance; both share the threshold and the low-noise range.
    """
    if rec.delta_half_r is None:
        rec.hypothesis = rec.analytic_hypothesis = UNVERIFIABLE
        return
    geometric = rec.r / (2.0 * c_tilde) if c_tilde > 0 else math.inf
    threshold = rec.delta_half_r * min(geometric, math.sqrt(4.0 * math.pi))
    rec.hypothesis_threshold = threshold
    low_noise = rec.lam <= 1.0 and rec.noise_norm <= 0.25 * math.sqrt(4.0 * math.pi) * rec.lam
    ok = low_noise and rec.measured_distance <= threshold
    rec.hypothesis = SATISFIED if ok else VIOLATED
    ok = low_noise and rec.certificate_distance <= threshold
    rec.analytic_hypothesis = SATISFIED if ok else VIOLATED

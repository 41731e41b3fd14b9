"""
Dual projected-gradient solver for the discrete ROF problem

    min_u  h^2 * ( 1/2 sum (u - y)^2 + lam * STENCIL_SCALE * sum ||grad u|| )

The dual variable z lives in the per-pixel unit ball. With mu = lam * STENCIL_SCALE
the primal solution is recovered as u = y - mu * div z, and the certificate
v = (y - u)/lam = STENCIL_SCALE * div z is the discrete dual certificate.

One iteration:

    u <- y - mu * div z
    z <- Proj( z - (tau / mu) * grad u )

which is projected gradient descent on 1/2 ||div z - y/mu||^2, stable for
tau < 2/||grad||^2 <= 2/(16 n^2).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from tvgeo.core.errors import InfeasibleDual, NonFiniteInput, StepTooLarge
from tvgeo.core.grid import STENCIL_SCALE, DualField, GridImage, _div, _grad

# Callback signature: (iteration, primal, dual, relative gap)
Progress = Callable[[int, float, float, float], None]

_FEASIBILITY_TOL = 1e-9
_PROJECTION_SLACK = 1e-13


@dataclass
class SolverConfig:
    lam: float
    tau: float | None = None          # None: 0.99 * 2 / (16 n^2)
    max_iters: int = 50_000
    gap_tol: float = 1e-6
    record_every: int = 50

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if self.gap_tol < 0:
            raise ValueError(f"gap_tol must be nonnegative, got {self.gap_tol}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be positive, got {self.record_every}")

    def step(self, n: int) -> float:
        """Resolved step size for an n x n grid."""
        return self.tau if self.tau is not None else default_tau(n)


@dataclass
class SolveResult:
    u: GridImage
    z: DualField
    v: GridImage
    iters: int
    lam: float
    gap_history: list[tuple[int, float, float, float]] = field(default_factory=list)
    gap_tol: float = 0.0

    @property
    def gap(self) -> float:
        """Relative duality gap at termination."""
        return self.gap_history[-1][3] if self.gap_history else float('nan')

    @property
    def absolute_gap(self) -> float:
        """Primal energy minus dual objective at termination."""
        if not self.gap_history:
            return float('nan')
        _, p, d, _ = self.gap_history[-1]
        return p - d

    @property
    def converged(self) -> bool:
        return bool(self.gap_history) and self.gap <= self.gap_tol


def default_tau(n: int) -> float:
    return 0.99 * 2.0 / (16.0 * n * n)


def project_unit_balls(z: DualField) -> DualField:
    """Per-pixel projection z / max(||z||, 1); feasible pixels pass unchanged.

    Projected vectors may exceed unit norm by a few ulps.
    """
    return DualField(_project(z.vectors))


def _project(z: np.ndarray) -> np.ndarray:
    # vectors within rounding of the sphere stay put, so projecting twice is exact
    norms = np.sqrt(np.sum(z ** 2, axis=-1, keepdims=True))
    return np.where(norms > 1.0 + _PROJECTION_SLACK, z / np.maximum(norms, 1.0), z)


def _check_feasible(z: np.ndarray) -> None:
    worst = float(np.sqrt(np.max(np.sum(z ** 2, axis=-1)))) if z.size else 0.0
    if worst > 1.0 + _FEASIBILITY_TOL:
        raise InfeasibleDual(f"dual field leaves the unit ball (max norm {worst:.12g})")


def _primal(u: np.ndarray, y: np.ndarray, lam: float) -> float:
    n = u.shape[0]
    g = _grad(u)
    tv = STENCIL_SCALE * float(np.sum(np.sqrt(np.sum(g ** 2, axis=-1))))
    return (0.5 * float(np.sum((u - y) ** 2)) + lam * tv) / n ** 2


def _dual(z: np.ndarray, y: np.ndarray, lam: float) -> float:
    n = y.shape[0]
    r = y - lam * STENCIL_SCALE * _div(z)
    return 0.5 * (float(np.sum(y ** 2)) - float(np.sum(r ** 2))) / n ** 2


def primal_energy(u: GridImage, y: GridImage, lam: float) -> float:
    return _primal(u.values, y.values, lam)


def dual_objective(z: DualField, y: GridImage, lam: float) -> float:
    _check_feasible(z.vectors)
    return _dual(z.vectors, y.values, lam)


def duality_gap(u: GridImage, z: DualField, y: GridImage, lam: float) -> float:
    """Primal energy of u minus dual objective of z (nonnegative by weak duality)."""
    return primal_energy(u, y, lam) - dual_objective(z, y, lam)


def relative_gap(primal: float, dual: float) -> float:
    return (primal - dual) / (abs(primal) + 1.0)


def solve(y: GridImage, cfg: SolverConfig, z0: DualField | None = None,
          progress: Progress | None = None) -> SolveResult:
    """Run the projected dual iteration until the relative gap drops below cfg.gap_tol.

    z0 warm-starts the dual variable (projected first); the default start is z = 0.
    progress, if given, is called at every recorded iteration.
    """
    if not y.is_finite:
        raise NonFiniteInput("input image contains NaN or Inf")
    n = y.n
    tau = cfg.step(n)
    if tau >= 2.0 / (16.0 * n * n):
        raise StepTooLarge(f"tau={tau:.6g} must be below 2/(16 n^2) = {2.0 / (16.0 * n * n):.6g}")

    yv = y.values
    lam = cfg.lam
    mu = lam * STENCIL_SCALE
    if z0 is not None:
        if z0.n != n:
            raise ValueError(f"warm start has n={z0.n}, image has n={n}")
        z = _project(z0.vectors.copy())
    else:
        z = np.zeros((n, n, 4))

    history: list[tuple[int, float, float, float]] = []
    it = 0
    while it < cfg.max_iters:
        it += 1
        u = yv - mu * _div(z)
        z = _project(z - (tau / mu) * _grad(u))
        if it % cfg.record_every == 0 or it == cfg.max_iters:
            u = yv - mu * _div(z)
            p = _primal(u, yv, lam)
            d = _dual(z, yv, lam)
            rel = relative_gap(p, d)
            history.append((it, p, d, rel))
            if progress is not None:
                progress(it, p, d, rel)
            if rel <= cfg.gap_tol:
                break

    v = STENCIL_SCALE * _div(z)
    u = yv - lam * v
    return SolveResult(u=GridImage(u), z=DualField(z), v=GridImage(v), iters=it, lam=lam,
                       gap_history=history, gap_tol=cfg.gap_tol)


def solve_sweep(y: GridImage, lambdas: list[float], cfg: SolverConfig,
                progress: Callable[[float, SolveResult], None] | None = None) -> list[SolveResult]:
    """Solve for each lambda in turn, warm-starting from the previous dual field.

    lambdas should be decreasing; the results come back in the given order.
    """
    if not lambdas:
        raise ValueError("lambda list is empty")
    results = []
    z = None
    for lam in lambdas:
        step_cfg = SolverConfig(lam=lam, tau=cfg.tau, max_iters=cfg.max_iters,
                                gap_tol=cfg.gap_tol, record_every=cfg.record_every)
        res = solve(y, step_cfg, z0=z)
        results.append(res)
        z = res.z
        if progress is not None:
            progress(lam, res)
    return results

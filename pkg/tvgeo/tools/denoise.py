"""tv-denoise: Total-variation (ROF) denoising with its dual certificate."""

import math
import click
import numpy as np
from pathlib import Path
from tvgeo.core import analytic
from tvgeo.core.certify import DEFAULT_LEVELS, boundary_contours, noise
from tvgeo.core.errors import LambdaTooLarge, TvgeoError
from tvgeo.core.geometry import ContourSet, contours, distance_map, level_set
from tvgeo.core.grid import GridImage, gradient_magnitude, grid_coords, l2_norm, total_variation
from tvgeo.core.imageio import load_input, save
from tvgeo.core.params import GRID, SHAPE, solver_config, tube_radii
from tvgeo.core.report import write_config, write_csv, write_svg
from tvgeo.core.shapes import Shape, rasterize
from tvgeo.core.solver import SolveResult, solve

METRIC_COLUMNS = [
    'lambda', 'sigma', 'seed', 'n', 'noise_norm', 'iters', 'converged',
    'primal', 'dual', 'gap', 'tv_u',
    'u_interior_mean', 'u_exterior_mean', 'v_interior_mean', 'v_l2_norm',
    'exact_l2_error', 'r', 'tv_inside_tube', 'tv_outside_tube',
]


def _progress(verbose: bool):
    if not verbose:
        return None

    def report(it, primal, dual, rel):
        click.echo(f"  iter {it}: primal {primal:.10g}  dual {dual:.10g}  gap {rel:.3g}", err=True)

    return report


def _bands(shape: Shape, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixels more than two pixels inside / outside the shape boundary."""
    x, y = grid_coords(n)
    sd = shape.signed_distance(x, y)
    return sd < -2.0 / n, sd > 2.0 / n


def _mean(values: np.ndarray, mask: np.ndarray) -> float:
    return float(values[mask].mean()) if mask.any() else math.nan


def _exact_error(u: GridImage, shape: Shape, lam: float) -> float | None:
    if lam <= 0 or not analytic.has_closed_form(shape):
        return None
    try:
        exact = analytic.exact_solution(shape, lam, u.n)
    except LambdaTooLarge:
        return None
    ref = l2_norm(exact)
    if ref == 0:
        return None
    return l2_norm(GridImage(u.values - exact.values)) / ref


def _metric_rows(u, res: SolveResult | None, shape, lam, sigma, seed, noise_norm,
                 radii) -> list[tuple]:
    n = u.n
    head = [lam, sigma, seed, n, noise_norm]
    if res is not None:
        _, primal, dual, gap = res.gap_history[-1]
        head += [res.iters, res.converged, primal, dual, gap]
    else:
        head += [0, None, None, None, None]
    head.append(total_variation(u))

    if shape is None:
        v_norm = l2_norm(res.v) if res is not None else None
        return [tuple(head + [None, None, None, v_norm, None, None, None, None])]

    inner, outer = _bands(shape, n)
    head += [_mean(u.values, inner), _mean(u.values, outer)]
    if res is not None:
        head += [_mean(res.v.values, inner), l2_norm(res.v)]
    else:
        head += [None, None]
    head.append(_exact_error(u, shape, lam))

    if not analytic.has_closed_form(shape):
        return [tuple(head + [None, None, None])]
    dmap = distance_map(analytic.extended_support_mask(shape, n))
    density = gradient_magnitude(u).values
    rows = []
    for r in radii:
        tube = dmap.tube(r).mask
        rows.append(tuple(head + [r, float(density[tube].sum()) / n ** 2,
                                  float(density[~tube].sum()) / n ** 2]))
    return rows


def _level_lines(u: GridImage) -> ContourSet:
    lines = ContourSet(u.n)
    for t in DEFAULT_LEVELS:
        lines.extend(contours(level_set(u, t)))
    return lines


@click.command()
@click.argument('input', default=None, required=False)
@click.option('--shape', 'shape', type=SHAPE, default=None,
              help='Shape spec or file: rasterized as the clean image when no INPUT is given, '
                   'and used as the closed-form reference.')
@click.option('--n', 'n', type=GRID, default=256, show_default=True,
              help='Grid side length when rasterizing --shape.')
@click.option('--lambda', 'lam', default=0.05, show_default=True,
              help='Regularization weight (0 leaves the image untouched).')
@click.option('--sigma', default=0.0, show_default=True,
              help='Standard deviation of added Gaussian noise.')
@click.option('--seed', default=0, show_default=True, help='Noise seed (PCG64).')
@click.option('--tau', default=None, type=float,
              help='Dual step size. Defaults to 0.99 * 2 / (16 n^2).')
@click.option('--max-iters', default=50_000, show_default=True, help='Iteration cap.')
@click.option('--gap-tol', default=1e-6, show_default=True, help='Relative duality gap target.')
@click.option('--record-every', default=50, show_default=True,
              help='Iterations between gap evaluations.')
@click.option('--tube-r', 'tube_r', multiple=True, type=float, default=(3.0,), show_default=True,
              help='Tube radius in pixels for TV inside/outside the tube (repeatable).')
@click.option('--out', 'out', default=None,
              help="Output directory. Defaults to '<stem>_denoise'.")
@click.option('--plain', is_flag=True, help='Write plain (P2) PGM files.')
@click.option('--no-timestamp', is_flag=True, help='Omit the timestamp comment from SVG output.')
@click.option('--verbose', is_flag=True, help='Report solver progress on stderr.')
def main(input, shape, n, lam, sigma, seed, tau, max_iters, gap_tol, record_every, tube_r,
         out, plain, no_timestamp, verbose):
    """Denoise an image by the ROF model and emit its dual certificate.

    Writes y.pgm, u.pgm and v.pgm (each with a scaling sidecar), levels.svg
    with the level lines t = 0.1 ... 0.9 of u, metrics.csv and config.json
    into the output directory.

    \b
    INPUT   .pgm file or '-' for stdin pipe (optional when --shape is given).

    \b
    Examples:
      tv-denoise --shape 'disc 0.5 0.5 0.25' --n 128 --lambda 0.05 --out disc
      tv-denoise --shape 'disc 0.5 0.5 0.25' --sigma 0.2 --seed 7 --out noisy
      tv-denoise photo.pgm --lambda 0.02 --out photo_tv
    """
    # ---- validate
    if lam < 0:
        raise click.BadParameter("lambda must be nonnegative", param_hint='--lambda')
    if sigma < 0:
        raise click.BadParameter("sigma must be nonnegative", param_hint='--sigma')
    cfg = solver_config(lam, tau, max_iters, gap_tol, record_every) if lam > 0 else None

    # ---- input
    if input is not None or shape is None:
        try:
            clean, stem = load_input(input)
        except FileNotFoundError:
            raise click.UsageError("No input: provide an INPUT image, a pipe or --shape")
        except TvgeoError as e:
            raise click.ClickException(str(e))
    else:
        clean, stem = rasterize(shape, n), shape.kind
    n = clean.n
    radii = tube_radii(tube_r, n)

    w_norm = 0.0
    y = clean
    if sigma > 0:
        w, w_norm = noise(n, sigma, seed)
        y = GridImage(clean.values + w.values)

    out_dir = Path(out) if out else Path(f"{stem}_denoise")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(out_dir, 'tv-denoise', {
        'input': input, 'shape': str(shape) if shape else None, 'n': n, 'lambda': lam,
        'sigma': sigma, 'seed': seed, 'tau': cfg.step(n) if cfg else None,
        'max_iters': max_iters, 'gap_tol': gap_tol, 'record_every': record_every,
        'tube_r': list(tube_r), 'plain': plain,
    })
    save(y, out_dir / 'y.pgm', plain=plain)

    # ---- solve
    try:
        if cfg is None:
            click.echo("lambda=0: u = y, certificate skipped", err=True)
            res, u = None, y
        else:
            res = solve(y, cfg, progress=_progress(verbose))
            u = res.u
            save(res.v, out_dir / 'v.pgm', plain=plain)
        save(u, out_dir / 'u.pgm', plain=plain)

        # ---- metrics and overlay
        rows = _metric_rows(u, res, shape, lam, sigma, seed, w_norm, radii)
        write_csv(out_dir / 'metrics.csv', METRIC_COLUMNS, rows)
        layers = [(_level_lines(u), 'blue')]
        if shape is not None:
            layers.insert(0, (boundary_contours(shape, n), 'black'))
            if analytic.has_closed_form(shape):
                support = analytic.extended_support_mask(shape, n)
                layers.append((contours(distance_map(support).tube(radii[0])), 'red'))
        write_svg(out_dir / 'levels.svg', layers, n, title=f"tv-denoise lambda={lam:g}",
                  timestamp=not no_timestamp)
    except TvgeoError as e:
        raise click.ClickException(f"{e} (partial results in {out_dir})")

    if res is not None:
        status = 'converged' if res.converged else 'not converged'
        click.echo(f"Denoised n={n} lambda={lam:g}: {res.iters} iterations, gap {res.gap:.3g} "
                   f"({status}) → {out_dir}", err=True)
    else:
        click.echo(f"Copied n={n} → {out_dir}", err=True)

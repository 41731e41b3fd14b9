"""tv-certify: Compare numeric certificates with the closed-form convex certificate."""

import sys
import click
import numpy as np
from pathlib import Path
from tvgeo.core import analytic
from tvgeo.core.errors import TvgeoError
from tvgeo.core.grid import GridImage, l2_norm
from tvgeo.core.imageio import save
from tvgeo.core.params import GRID, SHAPE, solver_config
from tvgeo.core.report import write_config, write_csv
from tvgeo.core.shapes import rasterize
from tvgeo.core.solver import solve

CERTIFY_COLUMNS = ['lambda', 'iters', 'gap', 'converged', 'cheeger_radius',
                   'v_l2_norm', 'oracle_l2_norm', 'l1_error', 'l2_error', 'passed']


def relative_errors(v: GridImage, oracle: GridImage) -> tuple[float, float]:
    """Relative L1 and L2 distances of v from the oracle field."""
    diff = v.values - oracle.values
    l1 = float(np.abs(diff).sum() / max(np.abs(oracle.values).sum(), 1e-300))
    l2 = l2_norm(GridImage(diff)) / max(l2_norm(oracle), 1e-300)
    return l1, l2


@click.command()
@click.option('--shape', 'shape', type=SHAPE, required=True,
              help='Convex shape (or union of convex shapes), spec or file.')
@click.option('--n', 'n', type=GRID, default=256, show_default=True, help='Grid side length.')
@click.option('--lambda', 'lambdas', multiple=True, type=float,
              help='Regularization weight (repeatable).')
@click.option('--tau', default=None, type=float,
              help='Dual step size. Defaults to 0.99 * 2 / (16 n^2).')
@click.option('--max-iters', default=50_000, show_default=True, help='Iteration cap per lambda.')
@click.option('--gap-tol', default=1e-6, show_default=True, help='Relative duality gap target.')
@click.option('--record-every', default=50, show_default=True,
              help='Iterations between gap evaluations.')
@click.option('--max-l1-error', default=0.10, show_default=True,
              help='Largest accepted relative L1 error; exit status 1 above it.')
@click.option('--out', 'out', default=None, help="Output directory. Defaults to '<kind>_certify'.")
@click.option('--plain', is_flag=True, help='Write plain (P2) PGM files.')
@click.option('--verbose', is_flag=True, help='Report solver progress on stderr.')
def main(shape, n, lambdas, tau, max_iters, gap_tol, record_every, max_l1_error, out,
         plain, verbose):
    """Solve the noiseless problem for 1_C and check v_lambda against its closed form.

    The reference is v = min(v_C, 1/lambda) on C, with v_C = 1/R on the
    Cheeger core C_R and 1/r on the boundary of the opening C_r elsewhere.
    Writes certify.csv plus v_<k>.pgm and oracle_<k>.pgm per lambda.

    \b
    Examples:
      tv-certify --shape 'rectangle 0.25 0.25 0.5 0.5' --lambda 0.02
      tv-certify --shape 'disc 0.5 0.5 0.25' --n 128 --lambda 0.05 --lambda 0.02
    """
    if not lambdas:
        raise click.UsageError("Empty lambda list: give at least one --lambda")
    if any(lam <= 0 for lam in lambdas):
        raise click.BadParameter("lambdas must be positive", param_hint='--lambda')
    if any(lam >= part.inradius for lam in lambdas for part in shape.components):
        raise click.BadParameter("every lambda must be below the inradius of each component",
                                 param_hint='--lambda')
    ordered = sorted(set(lambdas), reverse=True)
    base = solver_config(ordered[0], tau, max_iters, gap_tol, record_every)

    out_dir = Path(out) if out else Path(f"{shape.kind}_certify")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(out_dir, 'tv-certify', {
        'shape': str(shape), 'n': n, 'lambda': ordered, 'tau': base.step(n),
        'max_iters': max_iters, 'gap_tol': gap_tol, 'record_every': record_every,
        'max_l1_error': max_l1_error, 'plain': plain,
    })

    progress = None
    if verbose:
        def progress(it, primal, dual, rel):
            click.echo(f"  iter {it}: gap {rel:.3g}", err=True)

    f = rasterize(shape, n)
    rows = []
    z = None
    try:
        radius = analytic.cheeger_radius(shape, n) if len(shape.components) == 1 else None
        for k, lam in enumerate(ordered):
            cfg = solver_config(lam, tau, max_iters, gap_tol, record_every)
            res = solve(f, cfg, z0=z, progress=progress)
            z = res.z
            oracle = analytic.convex_certificate_vlambda(shape, lam, n)
            l1, l2 = relative_errors(res.v, oracle)
            rows.append((lam, res.iters, res.gap, res.converged, radius,
                         l2_norm(res.v), l2_norm(oracle), l1, l2, l1 <= max_l1_error))
            save(res.v, out_dir / f"v_{k}.pgm", plain=plain)
            save(oracle, out_dir / f"oracle_{k}.pgm", plain=plain)
            click.echo(f"lambda={lam:g}: L1 error {l1:.4f}, L2 error {l2:.4f}", err=True)
    except TvgeoError as e:
        write_csv(out_dir / 'certify.csv', CERTIFY_COLUMNS, rows)
        raise click.ClickException(f"{e} (partial results in {out_dir})")
    write_csv(out_dir / 'certify.csv', CERTIFY_COLUMNS, rows)

    failed = [row[0] for row in rows if not row[-1]]
    if failed:
        click.echo(f"L1 error above {max_l1_error:g} for lambda = "
                   f"{', '.join(f'{lam:g}' for lam in failed)}", err=True)
        sys.exit(1)
    click.echo(f"All {len(rows)} certificates within {max_l1_error:g} → {out_dir}", err=True)

"""tv-sweep: Approximate the minimal-norm certificate along a decreasing lambda sweep."""

import math
import click
from pathlib import Path
from tvgeo.core import analytic
from tvgeo.core.certify import boundary_contours, extended_support, mnc_estimate
from tvgeo.core.errors import TvgeoError
from tvgeo.core.geometry import contours
from tvgeo.core.grid import GridImage, l2_norm
from tvgeo.core.imageio import load_input, save
from tvgeo.core.params import GRID, SHAPE, solver_config
from tvgeo.core.report import write_config, write_csv, write_svg
from tvgeo.core.shapes import rasterize

SWEEP_COLUMNS = ['index', 'lambda', 'iters', 'gap', 'v_l2_norm', 'v_max', 'relative_change',
                 'oracle_l2_norm', 'oracle_l2_error']


def _oracle(shape, lam: float, n: int) -> GridImage | None:
    if shape is None:
        return None
    try:
        return analytic.convex_certificate_vlambda(shape, lam, n)
    except TvgeoError:
        return None


@click.command()
@click.argument('input', default=None, required=False)
@click.option('--shape', 'shape', type=SHAPE, default=None,
              help='Shape spec or file, rasterized when no INPUT is given.')
@click.option('--n', 'n', type=GRID, default=256, show_default=True,
              help='Grid side length when rasterizing --shape.')
@click.option('--lambda', 'lambdas', multiple=True, type=float,
              help='Regularization weight (repeatable; solved in decreasing order).')
@click.option('--tau', default=None, type=float,
              help='Dual step size. Defaults to 0.99 * 2 / (16 n^2).')
@click.option('--max-iters', default=50_000, show_default=True, help='Iteration cap per lambda.')
@click.option('--gap-tol', default=1e-6, show_default=True, help='Relative duality gap target.')
@click.option('--record-every', default=50, show_default=True,
              help='Iterations between gap evaluations.')
@click.option('--eps-sat', default=0.02, show_default=True,
              help='Saturation threshold: the extended support is {|z| >= 1 - eps}.')
@click.option('--out', 'out', default=None, help="Output directory. Defaults to '<stem>_sweep'.")
@click.option('--plain', is_flag=True, help='Write plain (P2) PGM files.')
@click.option('--no-timestamp', is_flag=True, help='Omit the timestamp comment from SVG output.')
@click.option('--verbose', is_flag=True, help='Report each finished lambda on stderr.')
def main(input, shape, n, lambdas, tau, max_iters, gap_tol, record_every, eps_sat, out,
         plain, no_timestamp, verbose):
    """Noiseless certificates v_lambda down a lambda sweep, plus a saturation map.

    For f = 1_C the certificates converge to the minimal-norm certificate as
    lambda decreases. Writes sweep.csv, v_<k>.pgm per lambda, saturation.pgm
    and support.svg (the {|z| >= 1 - eps} region at the smallest lambda).

    \b
    INPUT   .pgm file or '-' for stdin pipe (optional when --shape is given).

    \b
    Examples:
      tv-sweep --shape 'disc 0.5 0.5 0.25' --lambda 0.1 --lambda 0.05 --lambda 0.02
      tv-sweep --shape 'rectangle 0.25 0.25 0.5 0.5' --lambda 0.04 --lambda 0.01 --eps-sat 0.05
    """
    # ---- validate
    if not lambdas:
        raise click.UsageError("Empty lambda list: give at least one --lambda")
    if any(lam <= 0 for lam in lambdas):
        raise click.BadParameter("lambdas must be positive", param_hint='--lambda')
    if not 0.001 < eps_sat < 0.2:
        raise click.BadParameter("eps must lie in (0.001, 0.2)", param_hint='--eps-sat')
    ordered = sorted(set(lambdas), reverse=True)
    cfg = solver_config(ordered[0], tau, max_iters, gap_tol, record_every)

    # ---- input
    if input is not None or shape is None:
        try:
            f, stem = load_input(input)
        except FileNotFoundError:
            raise click.UsageError("No input: provide an INPUT image, a pipe or --shape")
        except TvgeoError as e:
            raise click.ClickException(str(e))
    else:
        f, stem = rasterize(shape, n), shape.kind
    n = f.n

    out_dir = Path(out) if out else Path(f"{stem}_sweep")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(out_dir, 'tv-sweep', {
        'input': input, 'shape': str(shape) if shape else None, 'n': n, 'lambda': ordered,
        'tau': cfg.step(n), 'max_iters': max_iters, 'gap_tol': gap_tol,
        'record_every': record_every, 'eps_sat': eps_sat, 'plain': plain,
    })

    def report(est):
        if verbose:
            click.echo(f"  lambda={est.lam:g}: {est.iters} iterations, gap {est.gap:.3g}, "
                       f"|v| {est.l2_norm:.6g}", err=True)

    # ---- sweep
    rows = []
    try:
        sweep = mnc_estimate(f, ordered, cfg, progress=report)
        for k, (est, change) in enumerate(zip(sweep, sweep.differences)):
            save(est.v, out_dir / f"v_{k}.pgm", plain=plain)
            oracle = _oracle(shape, est.lam, n)
            if oracle is not None:
                o_norm = l2_norm(oracle)
                o_err = l2_norm(GridImage(est.v.values - oracle.values)) / o_norm if o_norm else None
            else:
                o_norm = o_err = None
            rows.append((k, est.lam, est.iters, est.gap, est.l2_norm,
                         float(est.v.values.max()), change, o_norm, o_err))
        write_csv(out_dir / 'sweep.csv', SWEEP_COLUMNS, rows)

        # ---- saturation map at the smallest lambda
        support = extended_support(f, ordered[-1], eps_sat, cfg)
        save(support.saturation, out_dir / 'saturation.pgm', plain=plain)
        layers = [(contours(support.region), 'red')]
        if shape is not None:
            layers.insert(0, (boundary_contours(shape, n), 'black'))
        write_svg(out_dir / 'support.svg', layers, n,
                  title=f"saturation >= {1 - eps_sat:g} at lambda={ordered[-1]:g}",
                  timestamp=not no_timestamp)
    except TvgeoError as e:
        if rows:
            write_csv(out_dir / 'sweep.csv', SWEEP_COLUMNS, rows)
        raise click.ClickException(f"{e} (partial results in {out_dir})")

    click.echo(f"Swept {len(ordered)} lambdas, |v| slope {sweep.norm_slope:.3f} → {out_dir}",
               err=True)
    if shape is not None:
        check = analytic.calibrable_check(shape) if shape.is_convex else None
        if check is not None and check.is_calibrable:
            ref = shape.perimeter / math.sqrt(shape.area)
            click.echo(f"Calibrable: minimal-norm |v| = P/sqrt(|C|) = {ref:.6g}", err=True)

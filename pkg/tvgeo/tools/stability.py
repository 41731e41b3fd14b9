"""tv-stability: Tube-containment experiment for level lines of noisy solutions."""

import math
import sys
import click
from pathlib import Path
from tvgeo.core import analytic
from tvgeo.core.certify import SATISFIED, boundary_contours, stability_experiment
from tvgeo.core.errors import TvgeoError
from tvgeo.core.geometry import contours, distance_map
from tvgeo.core.params import GRID, SHAPE, solver_config, tube_radii
from tvgeo.core.report import write_config, write_stability, write_svg


@click.command()
@click.option('--shape', 'shape', type=SHAPE, required=True,
              help='Disc, (rounded) rectangle or a union of them; spec or file.')
@click.option('--n', 'n', type=GRID, default=256, show_default=True, help='Grid side length.')
@click.option('--lambda', 'lambdas', multiple=True, type=float,
              help='Regularization weight (repeatable).')
@click.option('--sigma', 'sigmas', multiple=True, type=float, default=(0.0,), show_default=True,
              help='Noise standard deviation (repeatable).')
@click.option('--seed', 'seeds', multiple=True, type=int, default=(0,), show_default=True,
              help='Noise seed (repeatable).')
@click.option('--tube-r', 'tube_r', multiple=True, type=float, default=(16.0,), show_default=True,
              help='Tube radius in pixels (repeatable).')
@click.option('--tau', default=None, type=float,
              help='Dual step size. Defaults to 0.99 * 2 / (16 n^2).')
@click.option('--max-iters', default=50_000, show_default=True, help='Iteration cap per solve.')
@click.option('--gap-tol', default=1e-6, show_default=True, help='Relative duality gap target.')
@click.option('--record-every', default=50, show_default=True,
              help='Iterations between gap evaluations.')
@click.option('--threads', default=1, show_default=True, envvar='TVGEO_THREADS',
              help='Worker threads for independent cells [env: TVGEO_THREADS].')
@click.option('--out', 'out', default=None, help="Output directory. Defaults to '<kind>_stability'.")
@click.option('--svg/--no-svg', default=True, show_default=True,
              help='Write one level-line overlay per (lambda, sigma, seed) run.')
@click.option('--no-timestamp', is_flag=True, help='Omit the timestamp comment from SVG output.')
@click.option('--verbose', is_flag=True, help='Report each finished cell on stderr.')
def main(shape, n, lambdas, sigmas, seeds, tube_r, tau, max_iters, gap_tol, record_every,
         threads, out, svg, no_timestamp, verbose):
    """Check that level lines of noisy ROF solutions stay in a tube around the extended support.

    Every (lambda, sigma, seed) run is solved, its level lines t = 0.1 ... 0.9
    are tested against each tube radius, and the record says whether the
    measured certificate deviation met the low-noise hypothesis. Writes
    stability.csv, run_<k>.svg overlays and config.json.

    Exit status is 0 iff every run meeting the hypothesis stayed in its tube
    and the Burger-Osher bound held on every run.

    \b
    Examples:
      tv-stability --shape 'disc 0.5 0.5 0.25' --lambda 0.08 --lambda 0.04 --sigma 0.004
      TVGEO_THREADS=4 tv-stability --shape 'disc 0.5 0.5 0.25' --lambda 0.04 \\
          --sigma 0 --sigma 0.002 --seed 1 --seed 2 --seed 3 --tube-r 8 --tube-r 16
    """
    # ---- validate
    if not lambdas:
        raise click.UsageError("Empty lambda list: give at least one --lambda")
    if any(lam <= 0 for lam in lambdas):
        raise click.BadParameter("lambdas must be positive", param_hint='--lambda')
    if any(s < 0 for s in sigmas):
        raise click.BadParameter("sigmas must be nonnegative", param_hint='--sigma')
    if threads < 1:
        raise click.BadParameter("need at least one thread", param_hint='--threads')
    if not analytic.has_closed_form(shape):
        raise click.BadParameter(f"no closed-form certificate for {shape.kind}",
                                 param_hint='--shape')
    ordered = sorted(set(lambdas), reverse=True)
    cfg = solver_config(ordered[0], tau, max_iters, gap_tol, record_every)
    radii = tube_radii(tube_r, n)

    out_dir = Path(out) if out else Path(f"{shape.kind}_stability")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(out_dir, 'tv-stability', {
        'shape': str(shape), 'n': n, 'lambda': ordered, 'sigma': list(sigmas),
        'seed': list(seeds), 'tube_r': list(tube_r), 'tau': cfg.step(n),
        'max_iters': max_iters, 'gap_tol': gap_tol, 'record_every': record_every,
        'threads': threads,
    })

    progress = (lambda msg: click.echo(f"  {msg}", err=True)) if verbose else None

    # ---- run
    try:
        report = stability_experiment(shape, n, ordered, list(sigmas), list(seeds), radii,
                                      cfg=cfg, threads=threads, progress=progress)
    except TvgeoError as e:
        raise click.ClickException(f"{e} (config in {out_dir})")
    write_stability(report, out_dir / 'stability.csv')

    # ---- overlays
    if svg:
        truth = boundary_contours(shape, n)
        dmap = distance_map(analytic.extended_support_mask(shape, n))
        tubes = [(contours(dmap.tube(r)), 'red') for r in radii]
        for k, (key, lines) in enumerate(sorted(report.lines.items())):
            lam, sigma, seed = key
            write_svg(out_dir / f"run_{k}.svg", [(truth, 'black')] + tubes + [(lines, 'blue')], n,
                      title=f"lambda={lam:g} sigma={sigma:g} seed={seed}",
                      timestamp=not no_timestamp)

    # ---- summary
    sel = report.under_hypothesis()
    strict = sum(r.analytic_hypothesis == SATISFIED for r in report.records)
    rate = report.containment_rate
    rate_text = 'n/a' if math.isnan(rate) else f"{100 * rate:.1f}%"
    bo_bad = sum(not r.bo_satisfied for r in report.records)
    click.echo(f"{len(report.records)} records, {len(sel)} under the hypothesis "
               f"({strict} on the analytic distance), "
               f"containment {rate_text}, Burger-Osher violations {bo_bad}, "
               f"C~ = {report.c_tilde:.4g} → {out_dir}", err=True)
    if not report.passed:
        sys.exit(1)

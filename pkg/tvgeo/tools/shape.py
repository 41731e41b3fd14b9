"""tv-shape: Rasterize a shape description to a PGM image."""

import sys
import click
from tvgeo.core.certify import noise
from tvgeo.core.grid import GridImage
from tvgeo.core.imageio import is_pipe, save, write_pipe
from tvgeo.core.params import GRID, SHAPE
from tvgeo.core.shapes import rasterize


@click.command()
@click.argument('output', default=None, required=False)
@click.option('--shape', 'shape', type=SHAPE, required=True,
              help="Shape spec ('disc 0.5 0.5 0.25') or a file of shape lines.")
@click.option('--n', 'n', type=GRID, default=256, show_default=True, help='Grid side length.')
@click.option('--sigma', default=0.0, show_default=True,
              help='Standard deviation of added Gaussian noise.')
@click.option('--seed', default=0, show_default=True, help='Noise seed (PCG64).')
@click.option('--plain', is_flag=True, help='Write plain (P2) PGM instead of binary P5.')
def main(output, shape, n, sigma, seed, plain):
    """Rasterize a shape indicator, optionally with Gaussian noise.

    Each pixel holds the covered fraction of its cell. Files get a scaling
    sidecar (<file>.txt); piped output maps [0, 1] onto the pixel range and
    clips values outside it.

    \b
    OUTPUT  .pgm file or '-' for stdout pipe.

    \b
    Examples:
      tv-shape --shape 'disc 0.5 0.5 0.25' disc.pgm
      tv-shape --shape 'rectangle 0.25 0.25 0.5 0.5' --n 128 --sigma 0.1 noisy.pgm
      tv-shape --shape shapes.txt | tv-denoise --lambda 0.05 --out run
    """
    if sigma < 0:
        raise click.BadParameter("sigma must be nonnegative", param_hint='--sigma')

    image = rasterize(shape, n)
    if sigma > 0:
        w, _ = noise(n, sigma, seed)
        image = GridImage(image.values + w.values)

    if output == '-' or (output is None and is_pipe(sys.stdout)):
        write_pipe(image, plain=plain)
    elif output is None:
        raise click.UsageError("No output: provide an OUTPUT file or pipe stdout")
    else:
        save(image, output, plain=plain)
        click.echo(f"Rasterized {shape} at n={n} → {output}", err=True)

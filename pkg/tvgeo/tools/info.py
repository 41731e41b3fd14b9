"""tv-info: Display facts about a grid image or a shape."""

import json
import sys
import click
from tvgeo.core import analytic
from tvgeo.core.errors import TvgeoError
from tvgeo.core.grid import GridImage, l2_norm, total_variation
from tvgeo.core.imageio import is_pipe, load_input
from tvgeo.core.params import GRID, SHAPE
from tvgeo.core.shapes import Shape


def _image_facts(image: GridImage) -> dict:
    v = image.values
    return {
        'n': image.n,
        'min': float(v.min()),
        'max': float(v.max()),
        'mean': float(v.mean()),
        'l2_norm': l2_norm(image),
        'total_variation': total_variation(image),
    }


def _component_facts(part: Shape, n: int) -> dict:
    facts = {
        'spec': str(part),
        'area': part.area,
        'perimeter': part.perimeter,
        'inradius': part.inradius,
        'curvature_max': part.curvature_max,
    }
    try:
        r = analytic.cheeger_radius(part, n)
        facts['cheeger_radius'] = r
        facts['cheeger_constant'] = 1.0 / r
    except TvgeoError as e:
        facts['cheeger_radius'] = None
        facts['cheeger_constant'] = None
        facts['cheeger_error'] = str(e)
    check = analytic.calibrable_check(part)
    facts['calibrable'] = check.is_calibrable
    facts['h'] = check.h
    return facts


def _shape_facts(shape: Shape, n: int) -> dict:
    facts = {
        'kind': shape.kind,
        'spec': str(shape),
        'area': shape.area,
        'perimeter': shape.perimeter,
        'inradius': shape.inradius,
        'convex': shape.is_convex,
        'closed_form': analytic.has_closed_form(shape),
        'components': [_component_facts(p, n) for p in shape.components],
    }
    if len(shape.components) > 1:
        facts['hull_perimeter'] = analytic.convex_hull_perimeter(shape)
    return facts


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return '-'
    return str(value)


def _print_block(facts: dict, indent: str = '') -> None:
    for key, value in facts.items():
        if key == 'components':
            for k, comp in enumerate(value):
                click.echo(f"{indent}Component {k}:")
                _print_block(comp, indent + '  ')
            continue
        label = key.replace('_', ' ').capitalize()
        click.echo(f"{indent}{label:<17}: {_fmt(value)}")


@click.command()
@click.argument('input', default=None, required=False)
@click.option('--shape', 'shape', type=SHAPE, default=None,
              help='Shape spec or file to describe instead of (or besides) an image.')
@click.option('--n', 'n', type=GRID, default=512, show_default=True,
              help='Resolution for rasterized Cheeger radii (ellipses, polygons).')
@click.option('--json', 'as_json', is_flag=True, help='Output as JSON')
def main(input, shape, n, as_json):
    """Display facts about a PGM grid image and/or a shape.

    Images report size, range, L2 norm and total variation. Shapes report
    area, perimeter, inradius, Cheeger radius and calibrability per component.

    \b
    INPUT   .pgm file or '-' for stdin pipe.

    \b
    Examples:
      tv-info noisy.pgm
      tv-info --shape 'rectangle 0.25 0.25 0.5 0.5'
      tv-shape --shape 'disc 0.5 0.5 0.25' | tv-info --json
    """
    facts = {}
    if input is not None or (shape is None and is_pipe(sys.stdin)):
        try:
            image, _ = load_input(input)
        except TvgeoError as e:
            raise click.ClickException(str(e))
        facts['image'] = _image_facts(image)
    if shape is not None:
        facts['shape'] = _shape_facts(shape, n)
    if not facts:
        raise click.UsageError("Nothing to describe: provide an INPUT image or --shape")

    if as_json:
        click.echo(json.dumps(facts, indent=2))
        return
    for section, block in facts.items():
        click.echo(f"[{section}]")
        _print_block(block)

"""Shared click parameter types: shape specs (inline text or a file) and grid sizes."""

from pathlib import Path

import click

from tvgeo.core.errors import ShapeSpecError
from tvgeo.core.shapes import Shape, Union, load_shapes, parse_shape
from tvgeo.core.solver import SolverConfig


class ShapeParam(click.ParamType):
    """Click parameter type for a shape: an inline spec ('disc 0.5 0.5 0.25') or a spec file.

    A file holding several shapes is read as their union.
    """
    name = 'SHAPE'

    def convert(self, value, param, ctx):
        if value is None or isinstance(value, Shape):
            return value
        text = str(value).strip()
        try:
            if Path(text).is_file():
                shapes = load_shapes(text)
                if not shapes:
                    self.fail(f"{text!r} holds no shapes", param, ctx)
                if len(shapes) == 1:
                    return shapes[0]
                return Union(tuple(p for s in shapes for p in s.components))
            return parse_shape(text)
        except ShapeSpecError as e:
            self.fail(str(e), param, ctx)


class GridSizeParam(click.ParamType):
    """Grid side length: an integer >= 16."""
    name = 'N'

    def convert(self, value, param, ctx):
        if isinstance(value, int) and not isinstance(value, bool):
            n = value
        else:
            try:
                n = int(str(value).strip())
            except ValueError:
                self.fail(f"{value!r} is not an integer", param, ctx)
        if n < 16:
            self.fail(f"grid size must be at least 16, got {n}", param, ctx)
        return n


SHAPE = ShapeParam()
GRID = GridSizeParam()


def solver_config(lam: float, tau: float | None, max_iters: int, gap_tol: float,
                  record_every: int) -> SolverConfig:
    """SolverConfig from tool options, reporting bad values as usage errors."""
    try:
        return SolverConfig(lam=lam, tau=tau, max_iters=max_iters, gap_tol=gap_tol,
                            record_every=record_every)
    except ValueError as e:
        raise click.BadParameter(str(e)) from None


def tube_radii(pixels: tuple[float, ...], n: int) -> list[float]:
    """Tube radii given in pixels, as domain distances."""
    if any(p <= 0 for p in pixels):
        raise click.BadParameter("tube radii must be positive", param_hint='--tube-r')
    return [p / n for p in pixels]

"""Tests for tv-shape tool."""

import numpy as np
from click.testing import CliRunner

from tvgeo.core.imageio import load, sidecar_path
from tvgeo.core.shapes import Disc, rasterize
from tvgeo.tools.shape import main

DISC = 'disc 0.5 0.5 0.25'


class TestShapeCLI:
    def test_file(self, tmp_path):
        out = tmp_path / "disc.pgm"
        result = CliRunner().invoke(main, ['--shape', DISC, '--n', '32', str(out)])
        assert result.exit_code == 0, result.output
        assert sidecar_path(out).exists()
        expected = rasterize(Disc(0.5, 0.5, 0.25), 32).values
        np.testing.assert_allclose(load(out).values, expected, atol=2e-5)

    def test_pipe(self):
        result = CliRunner().invoke(main, ['--shape', DISC, '--n', '32', '-'])
        assert result.exit_code == 0
        assert result.stdout_bytes.startswith(b'P5\n32 32\n65535\n')
        assert len(result.stdout_bytes) == len(b'P5\n32 32\n65535\n') + 2 * 32 * 32

    def test_plain(self, tmp_path):
        out = tmp_path / "disc.pgm"
        result = CliRunner().invoke(main, ['--shape', DISC, '--n', '16', '--plain', str(out)])
        assert result.exit_code == 0, result.output
        assert out.read_bytes().startswith(b'P2\n')

    def test_noise_is_seeded(self, tmp_path):
        runner = CliRunner()
        paths = [tmp_path / f"{k}.pgm" for k in range(3)]
        for path, seed in zip(paths, ['1', '1', '2']):
            result = runner.invoke(main, ['--shape', DISC, '--n', '32', '--sigma', '0.1',
                                          '--seed', seed, str(path)])
            assert result.exit_code == 0, result.output
        a, b, c = (load(p).values for p in paths)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_shape_file(self, tmp_path):
        spec = tmp_path / "two.txt"
        spec.write_text("disc 0.25 0.5 0.1\ndisc 0.75 0.5 0.1\n")
        out = tmp_path / "two.pgm"
        result = CliRunner().invoke(main, ['--shape', str(spec), '--n', '32', str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_bad_shape(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', 'disc 0.5', str(tmp_path / "x.pgm")])
        assert result.exit_code == 2

    def test_negative_sigma(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', DISC, '--sigma', '-1',
                                           str(tmp_path / "x.pgm")])
        assert result.exit_code == 2

    def test_small_grid(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', DISC, '--n', '8', str(tmp_path / "x.pgm")])
        assert result.exit_code == 2

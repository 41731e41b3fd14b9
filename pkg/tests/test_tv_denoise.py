"""Tests for tv-denoise tool."""

import json

import pytest
from click.testing import CliRunner

from tvgeo.core.report import read_csv
from tvgeo.tools.denoise import METRIC_COLUMNS, main

DISC = 'disc 0.5 0.5 0.25'
FAST = ['--n', '32', '--max-iters', '500', '--no-timestamp']


def _metrics(out):
    columns, rows = read_csv(out / 'metrics.csv')
    assert columns == METRIC_COLUMNS
    return [dict(zip(columns, row)) for row in rows]


class TestDenoiseCLI:
    def test_outputs(self, tmp_path):
        out = tmp_path / "run"
        result = CliRunner().invoke(main, ['--shape', DISC, '--lambda', '0.05', '--out', str(out)]
                                    + FAST)
        assert result.exit_code == 0, result.output
        for name in ['y.pgm', 'u.pgm', 'v.pgm', 'levels.svg', 'metrics.csv', 'config.json']:
            assert (out / name).exists(), name
        rows = _metrics(out)
        assert len(rows) == 1
        assert rows[0]['lambda'] == '0.05'
        assert int(rows[0]['iters']) <= 500
        assert float(rows[0]['r']) == pytest.approx(3 / 32)
        assert 0.0 <= float(rows[0]['exact_l2_error']) < 1.0
        config = json.loads((out / 'config.json').read_text())
        assert config['tool'] == 'tv-denoise'
        assert config['options']['n'] == 32

    def test_tube_radii_rows(self, tmp_path):
        out = tmp_path / "run"
        result = CliRunner().invoke(main, ['--shape', DISC, '--tube-r', '1', '--tube-r', '4',
                                           '--out', str(out)] + FAST)
        assert result.exit_code == 0, result.output
        assert [float(r['r']) for r in _metrics(out)] == [1 / 32, 4 / 32]

    def test_lambda_zero_copies(self, tmp_path):
        out = tmp_path / "copy"
        result = CliRunner().invoke(main, ['--shape', DISC, '--lambda', '0', '--sigma', '0.1',
                                           '--out', str(out)] + FAST)
        assert result.exit_code == 0, result.output
        assert (out / 'u.pgm').read_bytes() == (out / 'y.pgm').read_bytes()
        assert not (out / 'v.pgm').exists()
        row = _metrics(out)[0]
        assert row['iters'] == '0'
        assert float(row['noise_norm']) > 0

    def test_deterministic(self, tmp_path):
        runner = CliRunner()
        for name in ['a', 'b']:
            result = runner.invoke(main, ['--shape', DISC, '--sigma', '0.05', '--seed', '3',
                                          '--out', str(tmp_path / name)] + FAST)
            assert result.exit_code == 0, result.output
        for name in ['metrics.csv', 'levels.svg', 'u.pgm', 'v.pgm']:
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_image_input(self, disc_pgm, tmp_path):
        out = tmp_path / "img"
        result = CliRunner().invoke(main, [str(disc_pgm), '--lambda', '0.05', '--max-iters', '200',
                                           '--out', str(out)])
        assert result.exit_code == 0, result.output
        row = _metrics(out)[0]
        assert row['n'] == '32'
        assert row['exact_l2_error'] == ''

    def test_missing_input(self, tmp_path):
        result = CliRunner().invoke(main, [str(tmp_path / "nope.pgm"), '--out', str(tmp_path)])
        assert result.exit_code == 2

    def test_negative_lambda(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', DISC, '--lambda', '-0.1',
                                           '--out', str(tmp_path)])
        assert result.exit_code == 2

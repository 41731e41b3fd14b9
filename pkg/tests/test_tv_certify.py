"""Tests for tv-certify tool."""

import numpy as np
import pytest
from click.testing import CliRunner

from tvgeo.core.grid import GridImage
from tvgeo.core.report import read_csv
from tvgeo.tools.certify import CERTIFY_COLUMNS, main, relative_errors

DISC = 'disc 0.5 0.5 0.25'


class TestRelativeErrors:
    def test_values(self):
        oracle = GridImage(np.full((4, 4), 2.0))
        v = GridImage(np.full((4, 4), 2.5))
        l1, l2 = relative_errors(v, oracle)
        assert l1 == pytest.approx(0.25)
        assert l2 == pytest.approx(0.25)

    def test_identical(self):
        oracle = GridImage(np.eye(4))
        assert relative_errors(oracle, oracle) == (0.0, 0.0)


class TestCertifyCLI:
    def test_outputs(self, tmp_path):
        out = tmp_path / "cert"
        result = CliRunner().invoke(main, ['--shape', DISC, '--n', '32', '--lambda', '0.05',
                                           '--max-iters', '500', '--max-l1-error', '2.0',
                                           '--out', str(out)])
        assert result.exit_code == 0, result.output
        columns, rows = read_csv(out / 'certify.csv')
        assert columns == CERTIFY_COLUMNS
        assert len(rows) == 1
        row = dict(zip(columns, rows[0]))
        assert float(row['cheeger_radius']) == pytest.approx(0.125)
        assert row['passed'] == 'true'
        for name in ['v_0.pgm', 'oracle_0.pgm', 'config.json']:
            assert (out / name).exists(), name

    def test_fails_above_threshold(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', DISC, '--n', '32', '--lambda', '0.05',
                                           '--max-iters', '100', '--max-l1-error', '1e-9',
                                           '--out', str(tmp_path / "cert")])
        assert result.exit_code == 1
        _, rows = read_csv(tmp_path / "cert" / 'certify.csv')
        assert rows[0][-1] == 'false'

    def test_lambda_above_inradius(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', 'rectangle 0.25 0.25 0.5 0.5', '--n', '32',
                                           '--lambda', '0.3', '--out', str(tmp_path)])
        assert result.exit_code == 2

    def test_empty_lambda_list(self, tmp_path):
        result = CliRunner().invoke(main, ['--shape', DISC, '--out', str(tmp_path)])
        assert result.exit_code == 2

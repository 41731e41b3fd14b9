"""Tests for tv-info tool."""

import io
import json

import pytest
from click.testing import CliRunner

from tvgeo.core.imageio import write_pipe
from tvgeo.tools.info import main


class TestInfoCLI:
    def test_shape_json(self):
        result = CliRunner().invoke(main, ['--shape', 'rectangle 0.25 0.25 0.5 0.5', '--json'])
        assert result.exit_code == 0, result.output
        facts = json.loads(result.stdout)['shape']
        assert facts['kind'] == 'rectangle'
        assert facts['area'] == pytest.approx(0.25)
        assert facts['closed_form']
        comp = facts['components'][0]
        assert comp['cheeger_radius'] == pytest.approx(0.132540, abs=1e-6)
        assert comp['calibrable'] is False

    def test_union_has_hull(self):
        result = CliRunner().invoke(main, ['--shape', 'union disc 0.25 0.5 0.1; disc 0.75 0.5 0.1',
                                           '--json'])
        assert result.exit_code == 0, result.output
        facts = json.loads(result.stdout)['shape']
        assert len(facts['components']) == 2
        assert 'hull_perimeter' in facts

    def test_rasterized_cheeger(self):
        result = CliRunner().invoke(main, ['--shape', 'ellipse 0.5 0.5 0.3 0.2', '--n', '64',
                                           '--json'])
        assert result.exit_code == 0, result.output
        comp = json.loads(result.stdout)['shape']['components'][0]
        assert comp['cheeger_radius'] > 0
        assert comp['calibrable'] is True

    def test_image_file(self, disc_pgm):
        result = CliRunner().invoke(main, [str(disc_pgm), '--json'])
        assert result.exit_code == 0, result.output
        facts = json.loads(result.stdout)['image']
        assert facts['n'] == 32
        assert facts['min'] == pytest.approx(0.0, abs=1e-6)
        assert facts['max'] == pytest.approx(1.0, abs=1e-6)

    def test_piped_image(self, disc_image):
        buf = io.BytesIO()
        write_pipe(disc_image, buf)
        result = CliRunner().invoke(main, ['--json'], input=buf.getvalue())
        assert result.exit_code == 0, result.output
        assert json.loads(result.stdout)['image']['n'] == 32

    def test_text_output(self):
        result = CliRunner().invoke(main, ['--shape', 'disc 0.5 0.5 0.25'])
        assert result.exit_code == 0, result.output
        assert '[shape]' in result.stdout
        assert 'Component 0:' in result.stdout

    def test_empty_pipe(self):
        result = CliRunner().invoke(main, [], input=b'')
        assert result.exit_code == 1

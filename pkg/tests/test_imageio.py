"""Tests for PGM image I/O."""

import io
import sys

import numpy as np
import pytest

from tvgeo.core.errors import FormatError
from tvgeo.core.grid import GridImage
from tvgeo.core.imageio import (MAXVAL, decode_pgm, encode_pgm, load, load_input, read_pipe,
                                save, sidecar_path, write_pipe)


class _Tty(io.StringIO):
    def isatty(self):
        return True


@pytest.fixture
def signed_image(rng) -> GridImage:
    return GridImage(rng.uniform(-0.2, 1.3, size=(16, 16)))


class TestFiles:
    @pytest.mark.parametrize("plain", [False, True])
    def test_save_load(self, signed_image, tmp_path, plain):
        path = tmp_path / "y.pgm"
        save(signed_image, path, plain=plain)
        assert sidecar_path(path).exists()
        loaded = load(path)
        np.testing.assert_allclose(loaded.values, signed_image.values, atol=2e-5)

    def test_magic(self, signed_image, tmp_path):
        path = tmp_path / "y.pgm"
        save(signed_image, path)
        assert path.read_bytes().startswith(b'P5\n16 16\n65535\n')
        save(signed_image, path, plain=True)
        assert path.read_bytes().startswith(b'P2\n')

    def test_without_sidecar_reads_unit_range(self, signed_image, tmp_path):
        path = tmp_path / "y.pgm"
        save(signed_image, path)
        sidecar_path(path).unlink()
        loaded = load(path)
        assert loaded.values.min() == 0.0
        assert loaded.values.max() == 1.0

    def test_constant_image(self, tmp_path):
        path = tmp_path / "c.pgm"
        save(GridImage(np.full((16, 16), 0.25)), path)
        np.testing.assert_allclose(load(path).values, 0.25)

    def test_malformed_sidecar(self, signed_image, tmp_path):
        path = tmp_path / "y.pgm"
        save(signed_image, path)
        sidecar_path(path).write_text("# tvgeo-scale v1\noffset zero\n")
        with pytest.raises(FormatError):
            load(path)


class TestDecode:
    def test_comments_and_plain(self):
        pixels, maxval = decode_pgm(b'P2\n# made by hand\n2 2\n255\n0 255\n255 0\n')
        assert maxval == 255
        assert pixels.tolist() == [[0.0, 255.0], [255.0, 0.0]]

    def test_eight_bit_binary(self):
        pixels, maxval = decode_pgm(b'P5\n2 2\n255\n' + bytes([0, 255, 128, 0]))
        assert pixels.tolist() == [[0.0, 255.0], [128.0, 0.0]]

    def test_sixteen_bit_is_big_endian(self):
        data, _, _ = encode_pgm(GridImage(np.array([[0.0, 1.0], [1.0, 0.0]])), unit=True)
        assert data.endswith(b'\x00\x00\xff\xff\xff\xff\x00\x00')

    @pytest.mark.parametrize("data", [
        b'P6\n2 2\n255\n' + bytes(12),
        b'P5\n4 4\n65535\n' + bytes(10),
        b'P5\n4',
        b'P2\n2 2\n255\n0 1 2\n',
        b'P2\n2 x\n255\n0 1 2 3\n',
        b'P5\n2 2\n70000\n' + bytes(8),
    ])
    def test_bad_data(self, data):
        with pytest.raises(FormatError):
            decode_pgm(data)

    def test_non_square(self):
        with pytest.raises(FormatError):
            read_pipe(io.BytesIO(b'P2\n2 1\n255\n0 255\n'))


class TestPipes:
    def test_write_read(self):
        img = GridImage(np.linspace(-0.5, 1.5, 256).reshape(16, 16))
        buf = io.BytesIO()
        write_pipe(img, buf)
        buf.seek(0)
        back = read_pipe(buf)
        np.testing.assert_allclose(back.values, np.clip(img.values, 0, 1), atol=1.0 / MAXVAL)

    def test_load_input_dash(self, disc_image, monkeypatch):
        buf = io.BytesIO()
        write_pipe(disc_image, buf)
        monkeypatch.setattr(sys, 'stdin', io.TextIOWrapper(io.BytesIO(buf.getvalue())))
        img, stem = load_input('-')
        assert stem == 'stdin'
        assert img.n == disc_image.n

    def test_load_input_file(self, disc_pgm):
        img, stem = load_input(str(disc_pgm))
        assert stem == disc_pgm.stem
        assert img.n == 32

    def test_load_input_nothing(self, monkeypatch):
        monkeypatch.setattr(sys, 'stdin', _Tty())
        with pytest.raises(FileNotFoundError):
            load_input(None)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from beltrami.field import (ComplexField, Grid, GridMismatchError, RegionMask, field_from_bytes,
                            field_to_bytes, image_measure, l2_norm, mask_from_bytes, mask_to_bytes,
                            measure, read_field, read_mask, restrict, write_field, write_mask)


@pytest.mark.parametrize("n, L", [(32, 4.0), (100, 4.0), (64, 1.5)])
def test_grid_rejects_bad_shape(n, L):
    with pytest.raises(ValueError):
        Grid(n, L)


def test_cell_centres_avoid_origin():
    g = Grid(64, 2.0)
    assert g.r.min() > 0
    assert g.axis[0] == pytest.approx(-2.0 + g.h / 2)
    assert np.allclose(g.axis, -g.axis[::-1])


def test_unit_disk_measure_close_to_pi():
    g = Grid(512, 2.0)
    assert measure(g.unit_disk()) == pytest.approx(np.pi, rel=5 * g.h)


def test_l2_norm_of_disk_indicator():
    g = Grid(256, 2.0)
    chi = ComplexField(g, g.unit_disk().bits.astype(float))
    assert l2_norm(chi) ** 2 == pytest.approx(measure(g.unit_disk()))


def test_samples_are_read_only_and_finite(grid256):
    f = ComplexField.zeros(grid256)
    with pytest.raises(ValueError):
        f.samples[0, 0] = 1
    bad = np.zeros((256, 256), complex)
    bad[3, 3] = np.nan
    with pytest.raises(ValueError):
        ComplexField(grid256, bad)


def test_grid_mismatch_is_an_error():
    a = ComplexField.zeros(Grid(64, 2.0))
    b = ComplexField.zeros(Grid(64, 3.0))
    with pytest.raises(GridMismatchError):
        a + b
    with pytest.raises(GridMismatchError):
        restrict(a, Grid(128, 2.0).full())


def test_restrict_and_masks(grid256):
    f = ComplexField(grid256, np.ones((256, 256)))
    E = grid256.disk(0.5)
    out = restrict(f, E)
    assert np.all(out.samples[~E.bits] == 0)
    assert (E | E.complement()).count == 256 * 256
    assert (E & E.complement()).count == 0


def test_image_measure_rejects_negative_jacobian(grid256):
    J = np.ones((256, 256))
    assert image_measure(J, grid256.unit_disk()) == pytest.approx(measure(grid256.unit_disk()))
    J[128, 128] = -1e-3
    with pytest.raises(ValueError):
        image_measure(J, grid256.full())


def test_cf1_layout_is_row_major_interleaved():
    g = Grid(64, 2.0)
    vals = np.arange(64 * 64) + 1j * np.arange(64 * 64)[::-1]
    f = ComplexField(g, vals.reshape(64, 64))
    buf = field_to_bytes(f)
    assert buf[:4] == b"CF1\0"
    assert int.from_bytes(buf[4:8], "little") == 64
    payload = np.frombuffer(buf, "<f8", offset=16)
    assert payload[2] == 1.0 and payload[3] == vals[1].imag


@given(st.integers(0, 2 ** 32 - 1))
def test_cf1_round_trip(seed):
    g = Grid(64, 2.5)
    r = np.random.default_rng(seed)
    f = ComplexField(g, r.normal(size=(64, 64)) + 1j * r.normal(size=(64, 64)))
    back = field_from_bytes(field_to_bytes(f))
    assert back.grid == g
    assert np.array_equal(back.samples, f.samples)


@given(st.integers(0, 2 ** 32 - 1))
def test_rm1_round_trip(seed):
    g = Grid(64, 2.0)
    E = RegionMask(g, np.random.default_rng(seed).random((64, 64)) < 0.3)
    back = mask_from_bytes(mask_to_bytes(E))
    assert np.array_equal(back.bits, E.bits)


def test_file_round_trip(tmp_path, grid256):
    f = ComplexField(grid256, grid256.z)
    write_field(tmp_path / "z.cf1", f)
    assert np.array_equal(read_field(tmp_path / "z.cf1").samples, f.samples)
    write_mask(tmp_path / "d.rm1", grid256.unit_disk())
    assert np.array_equal(read_mask(tmp_path / "d.rm1").bits, grid256.unit_disk().bits)


@pytest.mark.parametrize("mutate", ["magic", "short", "wrong_kind"])
def test_corrupt_files_are_rejected(mutate):
    g = Grid(64, 2.0)
    buf = field_to_bytes(ComplexField.zeros(g))
    if mutate == "magic":
        buf = b"XX1\0" + buf[4:]
    elif mutate == "short":
        buf = buf[:-8]
    else:
        with pytest.raises(ValueError):
            mask_from_bytes(buf)
        return
    with pytest.raises(ValueError):
        field_from_bytes(buf)

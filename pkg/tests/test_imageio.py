import numpy as np
import pytest

from relightgs.imageio import PfmError, decode_pfm, encode_pfm, read_pfm, tonemap, write_pfm, write_png


def test_one_by_one_gray():
    data = b"Pf\n1 1\n-1.0\n" + np.float32(0.5).astype("<f4").tobytes()
    img = decode_pfm(data)
    assert img.shape == (1, 1, 1) and img[0, 0, 0] == 0.5


def test_round_trip_bit_identical(rng, tmp_path):
    img = rng.normal(size=(8, 16, 3)).astype(np.float32)
    data = encode_pfm(img)
    back = decode_pfm(data)
    assert back.tobytes() == img.tobytes()
    assert encode_pfm(back) == data
    write_pfm(tmp_path / "x.pfm", img)
    assert (tmp_path / "x.pfm").read_bytes() == data
    assert read_pfm(tmp_path / "x.pfm").tobytes() == img.tobytes()


def test_rows_stored_bottom_up():
    img = np.array([[[1.0]], [[2.0]]], dtype=np.float32)
    data = encode_pfm(img)
    payload = np.frombuffer(data[len(b"Pf\n1 2\n-1.0\n"):], dtype="<f4")
    np.testing.assert_array_equal(payload, [2.0, 1.0])


def test_big_endian_accepted():
    vals = np.array([1.5, -2.0, 3.25], dtype=">f4")
    img = decode_pfm(b"PF\n1 1\n1.0\n" + vals.tobytes())
    np.testing.assert_array_equal(img[0, 0], [1.5, -2.0, 3.25])


@pytest.mark.parametrize(
    "data",
    [b"P6\n1 1\n-1.0\n" + b"\0" * 4, b"Pf\n1 x\n-1.0\n", b"Pf\n2 2\n-1.0\n" + b"\0" * 12, b"Pf\n1 1\n0\n" + b"\0" * 4],
)
def test_malformed(data):
    with pytest.raises(PfmError):
        decode_pfm(data)


def test_encode_rejects_two_channels():
    with pytest.raises(PfmError):
        encode_pfm(np.zeros((2, 2, 2)))


def test_tonemap_examples():
    np.testing.assert_array_equal(tonemap(np.array([0.0, 1.0, 0.5, 2.0])), [0, 255, 186, 255])
    assert tonemap(np.array([-1.0]))[0] == 0


def test_write_png(tmp_path, rng):
    from PIL import Image

    write_png(tmp_path / "a.png", rng.uniform(size=(5, 7, 3)))
    write_png(tmp_path / "b.png", rng.uniform(size=(5, 7, 1)))
    assert Image.open(tmp_path / "a.png").size == (7, 5)
    assert Image.open(tmp_path / "b.png").mode == "L"

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qsvdwm.codec import (
    BlockGrid,
    RgbImage,
    ber,
    decode_quaternion,
    encode_quaternion,
    format_bit_grid,
    format_pbm,
    format_ppm,
    load_bits,
    load_pbm,
    load_ppm,
    ncc,
    parse_bit_grid,
    parse_pbm,
    parse_ppm,
    partition,
    psnr,
    reassemble,
    save_bits,
    save_ppm,
    to_bytes,
)
from qsvdwm.quaternion import FormatError, QuatMatrix

u8 = arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(3)))
bitmats = arrays(np.uint8, st.tuples(st.integers(1, 20), st.integers(1, 20)), elements=st.integers(0, 1))


def img_of(a: np.ndarray) -> RgbImage:
    return RgbImage(a / 255.0)


# ---- RgbImage ------------------------------------------------------------------

def test_image_validation():
    with pytest.raises(FormatError):
        RgbImage(np.zeros((2, 2)))
    with pytest.raises(FormatError):
        RgbImage(np.full((2, 2, 3), 1.5))
    with pytest.raises(FormatError):
        RgbImage(np.full((2, 2, 3), np.nan))
    assert RgbImage.from_array(np.full((1, 1, 3), 2.0)).pixels.max() == 1.0


def test_to_bytes_rounding():
    assert list(to_bytes(np.array([0.0, 0.5 / 255, 1.49 / 255, 1.0, -0.2, 1.3]))) == [0, 1, 1, 255, 0, 255]


# ---- PPM ------------------------------------------------------------------------

def test_ppm_two_by_one_example():
    data = b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 0, 255])
    img = parse_ppm(data)
    assert img.shape == (1, 2)
    assert np.array_equal(img.pixels[0], [[1, 0, 0], [0, 0, 1]])
    assert format_ppm(img) == data


def test_ppm_header_comments_and_whitespace():
    data = b"P6 # c\n 1\t1 # size\n255\r" + bytes([10, 20, 30])
    assert np.array_equal(to_bytes(parse_ppm(data).pixels), [[[10, 20, 30]]])


@pytest.mark.parametrize(
    "data",
    [
        b"P5\n1 1\n255\n\x00",
        b"P6\n1 1\n65535\n" + bytes(6),
        b"P6\n2 2\n255\n" + bytes(11),
        b"P6\n1\n",
        b"P6\n0 1\n255\n",
        b"P6\n1 1\n255",
        b"P6\nx 1\n255\n\x00\x00\x00",
    ],
)
def test_ppm_malformed(data):
    with pytest.raises(FormatError):
        parse_ppm(data)


@given(u8)
def test_ppm_round_trip(a):
    img = img_of(a)
    back = parse_ppm(format_ppm(img))
    assert back == img
    assert np.array_equal(to_bytes(back.pixels), a)


def test_ppm_file_round_trip(tmp_path, rng):
    img = img_of(rng.integers(0, 256, (5, 7, 3)))
    save_ppm(img, tmp_path / "x.ppm")
    assert load_ppm(tmp_path / "x.ppm") == img


def test_quantized_is_grid_projection(rng):
    img = RgbImage(rng.uniform(0, 1, (4, 4, 3)))
    q = img.quantized()
    assert np.max(np.abs(q.pixels - img.pixels)) <= 0.5 / 255 + 1e-12
    assert q.quantized() == q


# ---- PBM and bit grids -------------------------------------------------------------

def test_pbm_black_is_zero():
    # 3 wide: one row "black white black" packs to 0b101 << 5
    data = b"P4\n3 1\n" + bytes([0b10100000])
    assert np.array_equal(parse_pbm(data), [[0, 1, 0]])
    assert format_pbm(np.array([[0, 1, 0]])) == data


@given(bitmats)
def test_pbm_round_trip(b):
    assert np.array_equal(parse_pbm(format_pbm(b)), b)


@given(bitmats)
def test_bit_grid_round_trip(b):
    assert np.array_equal(parse_bit_grid(format_bit_grid(b)), b)


@pytest.mark.parametrize("text", ["", "012\n", "01\n0\n", "ab\n"])
def test_bit_grid_malformed(text):
    with pytest.raises(FormatError):
        parse_bit_grid(text)


def test_pbm_rejects_bad_bits():
    with pytest.raises(FormatError):
        format_pbm(np.array([[0, 2]]))
    with pytest.raises(FormatError):
        format_pbm(np.zeros(4))
    with pytest.raises(FormatError):
        parse_pbm(b"P4\n16 2\n\x00\x00")


@pytest.mark.parametrize("name", ["w.pbm", "w.txt"])
def test_load_bits_autodetect(tmp_path, rng, name):
    b = rng.integers(0, 2, (6, 11)).astype(np.uint8)
    save_bits(b, tmp_path / name)
    assert np.array_equal(load_bits(tmp_path / name), b)


def test_load_bits_rejects_binary_junk(tmp_path):
    (tmp_path / "j").write_bytes(b"\xff\xfe\x00")
    with pytest.raises(FormatError):
        load_bits(tmp_path / "j")


def test_logo_payload(logo):
    assert logo.shape == (64, 64)
    assert 0.2 < 1 - logo.mean() < 0.35
    assert logo[0, 0] == 1 and logo[32, 32] == 0


# ---- quaternion encoding and blocks ---------------------------------------------------

def test_encode_pure_pixel():
    img = RgbImage(np.array([[[0.2, 0.4, 0.6]]]))
    Q = encode_quaternion(img)
    assert Q.entry(0, 0).as_array().tolist() == [0.0, 0.2, 0.4, 0.6]
    assert Q.is_pure


@given(u8)
def test_encode_decode_inverse(a):
    img = img_of(a)
    assert decode_quaternion(encode_quaternion(img)) == img


def test_decode_drops_real_and_clamps():
    Q = QuatMatrix.from_planes([[0.7]], [[1.2]], [[-0.1]], [[0.5]])
    assert np.array_equal(decode_quaternion(Q).pixels, [[[1.0, 0.0, 0.5]]])


def test_partition_layout(rng):
    Q = encode_quaternion(RgbImage(rng.uniform(0, 1, (8, 12, 3))))
    g = partition(Q)
    assert g.grid_shape == (2, 3) and g.cropped == (0, 0)
    assert np.array_equal(g.block(1, 2).components(), Q.components()[4:8, 8:12])
    assert reassemble(g) == Q


def test_partition_crops_remainder(rng):
    Q = encode_quaternion(RgbImage(rng.uniform(0, 1, (10, 9, 3))))
    g = partition(Q)
    assert g.grid_shape == (2, 2) and g.cropped == (2, 1)
    assert reassemble(g).shape == (8, 8)
    assert reassemble(g, Q) == Q
    with pytest.raises(FormatError):
        reassemble(g, QuatMatrix.zeros(8, 8))


def test_partition_too_small():
    with pytest.raises(FormatError):
        partition(QuatMatrix.zeros(3, 8))
    with pytest.raises(ValueError):
        partition(QuatMatrix.zeros(8, 8), size=8)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 3), st.integers(0, 3))
def test_partition_reassemble_property(bm, bn, rm, rn):
    a = np.arange((4 * bm + rm) * (4 * bn + rn) * 4, dtype=float).reshape(4 * bm + rm, 4 * bn + rn, 4)
    Q = QuatMatrix.from_components(a)
    g = partition(Q)
    assert isinstance(g, BlockGrid) and g.grid_shape == (bm, bn)
    assert reassemble(g, Q) == Q
    assert g.flat().shape == (bm * bn, 4, 4, 4)


# ---- metrics ---------------------------------------------------------------------------

def test_psnr_identical_is_inf():
    img = RgbImage(np.zeros((4, 4, 3)))
    assert psnr(img, img) == math.inf


def test_psnr_one_level_everywhere():
    a = RgbImage(np.zeros((8, 8, 3)))
    b = RgbImage(np.full((8, 8, 3), 1 / 255))
    assert psnr(a, b) == pytest.approx(20 * math.log10(255), abs=1e-9)


def test_psnr_single_pixel_error():
    a = RgbImage(np.zeros((2, 2, 3)))
    p = np.zeros((2, 2, 3))
    p[0, 0, 0] = 1.0
    # MSE = 1/12 over 12 samples
    assert psnr(a, RgbImage(p)) == pytest.approx(10 * math.log10(12))


def test_psnr_shape_mismatch():
    with pytest.raises(FormatError):
        psnr(RgbImage(np.zeros((2, 2, 3))), RgbImage(np.zeros((2, 3, 3))))


def test_ber_examples():
    w = np.array([[1, 0], [1, 1]])
    assert ber(w, w) == 0.0
    assert ber(w, 1 - w) == 1.0
    assert ber(w, np.array([[1, 0], [0, 1]])) == 0.25
    with pytest.raises(FormatError):
        ber(w, np.zeros((2, 3)))


def test_ncc_examples():
    x = np.array([1.0, 2.0, 3.0])
    assert ncc(x, 2 * x) == pytest.approx(1.0)
    assert ncc(x, -x) == pytest.approx(-1.0)
    assert ncc([1, 0], [0, 1]) == 0.0
    with pytest.raises(ValueError):
        ncc([0, 0], [1, 1])


@given(arrays(np.float64, 10, elements=st.floats(-1e3, 1e3)), arrays(np.float64, 10, elements=st.floats(-1e3, 1e3)))
def test_ncc_bounded(x, y):
    if not (np.any(x) and np.any(y)):
        return
    assert -1 - 1e-12 <= ncc(x, y) <= 1 + 1e-12

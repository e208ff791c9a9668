import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsvdwm.attacks import (
    CHROMA_Q,
    KINDS,
    LUMA_Q,
    AttackSpec,
    bilinear_resize,
    crop_attack,
    dct_coefficients,
    jpeg_attack,
    kind_tag,
    motion_blur_attack,
    motion_kernel,
    quant_table,
    rescale_attack,
    salt_pepper_attack,
    speckle_attack,
)
from qsvdwm.codec import RgbImage, to_bytes

ALL = [
    AttackSpec("jpeg", (40,)),
    AttackSpec("motion_blur", (6, 6)),
    AttackSpec("crop", (0.3,)),
    AttackSpec("rescale", (0.5,)),
    AttackSpec("speckle", (0.05,)),
    AttackSpec("salt_pepper", (0.05,)),
]


def const(v: float, shape=(16, 16)) -> RgbImage:
    return RgbImage(np.full((*shape, 3), v))


def on_grid(img: RgbImage) -> bool:
    return np.array_equal(to_bytes(img.pixels) / 255.0, img.pixels)


def hramp(M=16, N=32) -> RgbImage:
    x = np.arange(N) / 255.0 * 4
    return RgbImage(np.broadcast_to(x[None, :, None], (M, N, 3)).copy())


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
def test_shape_range_and_grid(natural, spec):
    out = spec.apply(natural, 7)
    assert out.shape == natural.shape and on_grid(out)


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
def test_deterministic(natural, spec):
    assert spec.apply(natural, 7) == spec.apply(natural, 7)


# ---- JPEG -----------------------------------------------------------------------------

def test_quant_table_mapping():
    assert np.array_equal(quant_table(LUMA_Q, 50), LUMA_Q)
    assert np.all(quant_table(CHROMA_Q, 100) == 1)
    assert quant_table(LUMA_Q, 1).max() == 255
    assert quant_table(LUMA_Q, 20)[0, 0] == 40  # 16 * 250 / 100
    with pytest.raises(ValueError):
        quant_table(LUMA_Q, 0)


def test_jpeg_q100_mid_gray():
    img = RgbImage(np.full((8, 8, 3), 128 / 255))
    assert np.max(np.abs(jpeg_attack(img, 100).pixels - img.pixels)) <= 2 / 255


def test_jpeg_severity_ordering(natural):
    mse = {q: np.mean((jpeg_attack(natural, q).pixels - natural.pixels) ** 2) for q in (20, 40, 60)}
    assert mse[20] > mse[40] > mse[60]


def test_jpeg_requantization_near_fixed_point(natural):
    once = jpeg_attack(natural, 40)
    c0, c1, c2 = dct_coefficients(natural, 40), dct_coefficients(once, 40), dct_coefficients(jpeg_attack(once, 40), 40)
    first = sum(np.count_nonzero(a != b) for a, b in zip(c0, c1))
    second = sum(np.count_nonzero(a != b) for a, b in zip(c1, c2))
    assert second < first
    assert max(np.max(np.abs(a - b)) for a, b in zip(c1, c2)) <= 1


def test_jpeg_non_multiple_of_8(rng):
    img = RgbImage(rng.uniform(0, 1, (13, 10, 3)))
    assert jpeg_attack(img, 60).shape == (13, 10)


def test_jpeg_close_to_libjpeg(natural):
    Image = pytest.importorskip("PIL.Image")
    for q in (20, 60):
        buf = io.BytesIO()
        Image.fromarray(to_bytes(natural.pixels)).save(buf, "JPEG", quality=q, subsampling=0)
        ref = np.asarray(Image.open(buf)).astype(float)
        ours = to_bytes(jpeg_attack(natural, q).pixels).astype(float)
        assert np.mean(np.abs(ref - ours)) <= 1.0


# ---- motion blur ----------------------------------------------------------------------

def test_motion_kernel_examples():
    assert np.allclose(motion_kernel(3, 0), [[1 / 3] * 3])
    assert np.allclose(motion_kernel(4, 0), [[0.125, 0.25, 0.25, 0.25, 0.125]])
    assert np.allclose(motion_kernel(3, 90), motion_kernel(3, 0).T)
    assert np.allclose(motion_kernel(1, 30), [[1.0]], atol=1e-7)


@given(st.floats(1, 15), st.floats(0, 360))
def test_motion_kernel_normalized(length, angle):
    h = motion_kernel(length, angle)
    assert abs(h.sum() - 1) <= 1e-6 and h.min() >= 0
    assert h.shape[0] % 2 == 1 and h.shape[1] % 2 == 1
    assert np.allclose(h, np.rot90(h, 2))


def test_motion_identity_and_constant(natural):
    assert motion_blur_attack(natural, 1, 0) == natural
    c = const(100 / 255)
    assert motion_blur_attack(c, 9, 9) == c


def test_motion_ramp_interior():
    img = hramp()
    out = motion_blur_attack(img, 3, 0)
    assert np.array_equal(out.pixels[:, 1:-1], img.pixels[:, 1:-1])


def test_motion_rejects_short():
    with pytest.raises(ValueError):
        motion_blur_attack(const(0.5), 0.5, 0)


# ---- crop -------------------------------------------------------------------------------

def test_crop_rows():
    img = const(128 / 255, (512, 8))
    out = crop_attack(img, 0.5)
    assert not out.pixels[:256].any()
    assert np.array_equal(out.pixels[256:], img.pixels[256:])


def test_crop_tiny_ratio_is_identity(natural):
    assert crop_attack(natural, 0.001) == natural


def test_crop_range():
    for r in (0.0, 1.0):
        with pytest.raises(ValueError):
            crop_attack(const(0.5), r)


# ---- rescale -----------------------------------------------------------------------------

def test_rescale_identity_and_constant(natural):
    assert rescale_attack(natural, 1) == natural
    c = const(77 / 255)
    for f in (0.5, 2, 4):
        assert rescale_attack(c, f) == c


def test_rescale_ramp_factor_two():
    img = hramp()
    out = rescale_attack(img, 2)
    assert np.max(np.abs(out.pixels[:, 2:-2] - img.pixels[:, 2:-2])) <= 1 / 255 + 1e-12


def test_bilinear_half_pixel_downsample():
    a = np.arange(4, dtype=float)[None, :, None].repeat(2, 0)
    assert np.allclose(bilinear_resize(a, (2, 2))[0, :, 0], [0.5, 2.5])


def test_rescale_validation():
    with pytest.raises(ValueError):
        rescale_attack(const(0.5, (4, 4)), 0.01)
    with pytest.raises(ValueError):
        rescale_attack(const(0.5), 0)


# ---- noise -------------------------------------------------------------------------------

def test_noise_zero_is_identity(natural):
    assert speckle_attack(natural, 0.0, 5) == natural
    assert salt_pepper_attack(natural, 0.0, 5) == natural


def test_salt_pepper_full_density(natural):
    p = salt_pepper_attack(natural, 1.0, 9).pixels
    assert np.all((p == 0) | (p == 1))
    assert np.all(p.min(axis=2) == p.max(axis=2))
    assert 0.4 < p.mean() < 0.6


def test_salt_pepper_density():
    p = salt_pepper_attack(const(128 / 255, (128, 128)), 0.05, 3).pixels
    hit = np.all(p == 0, axis=2) | np.all(p == 1, axis=2)
    assert 0.04 < hit.mean() < 0.06


def test_speckle_statistics():
    img = const(0.5, (256, 256))
    n = speckle_attack(img, 0.05, 11).pixels / 0.5 - 1
    assert abs(n.mean()) < 0.01
    assert abs(n.var() - 0.05) < 0.003
    assert np.abs(n).max() <= np.sqrt(0.15) + 1 / 255


def test_noise_seed_dependence(natural):
    assert speckle_attack(natural, 0.05, 1) != speckle_attack(natural, 0.05, 2)
    assert salt_pepper_attack(natural, 0.05, 1) == salt_pepper_attack(natural, 0.05, 1)


def test_noise_range_checks():
    with pytest.raises(ValueError):
        speckle_attack(const(0.5), -0.1, 0)
    with pytest.raises(ValueError):
        salt_pepper_attack(const(0.5), 1.5, 0)


# ---- spec parsing -------------------------------------------------------------------------

@pytest.mark.parametrize(
    "text,kind,params,seed",
    [
        ("jpeg:40", "jpeg", (40.0,), None),
        ("motion:9,9", "motion_blur", (9.0, 9.0), None),
        ("crop:0.1", "crop", (0.1,), None),
        ("scale:0.5", "rescale", (0.5,), None),
        ("speckle:0.05,42", "speckle", (0.05,), 42),
        ("sp:0.05,0x10", "salt_pepper", (0.05,), 16),
    ],
)
def test_spec_parse(text, kind, params, seed):
    s = AttackSpec.parse(text)
    assert (s.kind, s.params, s.seed) == (kind, params, seed)


@pytest.mark.parametrize("text", ["jpeg", "jpeg:", "blur:3", "jpeg:0", "jpeg:40.5", "crop:1", "jpeg:40,1", "motion:3", "rescale:x"])
def test_spec_parse_rejects(text):
    with pytest.raises(ValueError):
        AttackSpec.parse(text)


def test_spec_label_round_trip():
    for s in ALL:
        assert AttackSpec.parse(s.label()) == s


def test_default_seed_mixes_kind():
    assert len({kind_tag(k) for k in KINDS}) == len(KINDS)
    img = const(0.5)
    s = AttackSpec("speckle", (0.05,))
    assert s.apply(img, 3) == speckle_attack(img, 0.05, 3 ^ kind_tag("speckle"))
    assert AttackSpec("speckle", (0.05,), seed=3).apply(img, 99) == speckle_attack(img, 0.05, 3)


@settings(max_examples=20)
@given(st.sampled_from(ALL), st.integers(0, 2**64 - 1))
def test_any_seed_keeps_range(spec, seed):
    img = const(0.8, (8, 8))
    out = spec.apply(img, seed)
    assert 0 <= out.pixels.min() and out.pixels.max() <= 1

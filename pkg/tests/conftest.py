import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from qsvdwm.codec import RgbImage, load_pbm, load_ppm

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
IMAGE_DIR = Path(os.environ.get("QSVDWM_IMAGE_DIR", ROOT / "data" / "images"))
LOGO = ROOT / "data" / "watermark_logo.pbm"


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def logo() -> np.ndarray:
    return load_pbm(LOGO)


@pytest.fixture(scope="session")
def lena() -> RgbImage:
    path = IMAGE_DIR / "lena.ppm"
    if not path.exists():
        pytest.skip("lena.ppm not present; run scripts/fetch_images.py")
    return load_ppm(path)


@pytest.fixture(scope="session")
def natural() -> RgbImage:
    """A 128x128 natural crop (scikit-image's astronaut) for fast image-level tests."""
    data = pytest.importorskip("skimage.data")
    return RgbImage(data.astronaut()[96:224, 160:288] / 255.0)

"""Fetch the available standard test images and store them as 512x512 P6 files.

Only Lena and Baboon are redistributed through package registries:

* Lena: ``skimage/data/lena.png`` inside the scikit-image 0.9.3 sdist (PyPI)
* Baboon: ``baboon.png`` inside the ``baboon-image`` 2.1.0 npm tarball

F-16, House, Lostlake and Monolake have no registry mirror; drop 512x512 P6
copies named ``f16.ppm``, ``house.ppm``, ``lostlake.ppm`` and ``monolake.ppm``
into the output directory to enable the full acceptance suite.

Needs Pillow (``pip install artifact[images]``).
"""

from __future__ import annotations

import argparse
import io
import tarfile
import urllib.request
from pathlib import Path

from PIL import Image

SOURCES = {
    "lena": (
        "https://files.pythonhosted.org/packages/71/e7/"
        "881fa2b6195141a2b91035b63ff78a6f11c5dbec5d39b012e9fadc193a95/scikit-image-0.9.3.tar.gz",
        "scikit-image-0.9.3/skimage/data/lena.png",
    ),
    "baboon": (
        "https://registry.npmjs.org/baboon-image/-/baboon-image-2.1.0.tgz",
        "package/baboon.png",
    ),
}


def fetch(url: str, member: str, cache: Path) -> bytes:
    local = cache / url.rsplit("/", 1)[1]
    if not local.exists():
        with urllib.request.urlopen(url, timeout=120) as resp:
            local.write_bytes(resp.read())
    with tarfile.open(local) as tar:
        fh = tar.extractfile(member)
        if fh is None:
            raise FileNotFoundError(member)
        return fh.read()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "images")
    ap.add_argument("--cache", type=Path, default=Path("/tmp/qsvdwm-cache"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    args.cache.mkdir(parents=True, exist_ok=True)
    for name, (url, member) in SOURCES.items():
        img = Image.open(io.BytesIO(fetch(url, member, args.cache))).convert("RGB")
        if img.size != (512, 512):
            img = img.resize((512, 512), Image.Resampling.BICUBIC)
        dst = args.out / f"{name}.ppm"
        img.save(dst, format="PPM")
        print(f"{name}: {dst}")


if __name__ == "__main__":
    main()

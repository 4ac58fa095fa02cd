"""PNG codecs: RGBA sketches and 8-bit grayscale density fields (255 = solid)."""
from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .fem import DensityField
from .model import RasterSketch


def sketch_to_png_bytes(sketch: RasterSketch) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(sketch.pixels, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def sketch_from_png_bytes(data: bytes) -> RasterSketch:
    with Image.open(io.BytesIO(data)) as img:
        pixels = np.asarray(img.convert("RGBA"), dtype=np.uint8)
    return RasterSketch(pixels=pixels)


def density_to_png_bytes(field: DensityField) -> bytes:
    """Grayscale PNG with image row 0 at the top of the domain."""
    gray = np.flipud(np.round(field.rho * 255.0)).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(gray, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def gray_from_png_bytes(data: bytes) -> np.ndarray:
    """Decode any PNG to a [0, 1] float array in bottom-origin element order."""
    with Image.open(io.BytesIO(data)) as img:
        gray = np.asarray(img.convert("L"), dtype=np.float64)
    return np.flipud(gray / 255.0).copy()

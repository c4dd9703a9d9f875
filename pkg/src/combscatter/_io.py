"""Small serialization helpers shared by the exporters."""
from __future__ import annotations

import math
from pathlib import Path


def fmt_float(x: float) -> str:
    """17 significant digits; round-trips through ``float()`` exactly."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def writable_path(path, force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists; pass force=True (--force) to overwrite")
    if path.parent and not path.parent.exists():
        raise FileNotFoundError(f"directory {path.parent} does not exist")
    return path


def db20(magnitude):
    """Amplitude decibels with ``-inf`` for an exact zero."""
    import numpy as np

    mag = np.abs(np.asarray(magnitude))
    with np.errstate(divide="ignore"):
        out = 20 * np.log10(mag)
    if out.ndim == 0:
        return float(out)
    return out

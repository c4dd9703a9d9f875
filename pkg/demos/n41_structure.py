"""What the minimal schemes look like on a 41-mode comb.

Run with ``python3 demos/n41_structure.py``.

The 41-mode configs repeat the isolator and circulator pump sets with a
step of two spacings.  Every mode pair along the targeted diagonal then
sees nearly the same interference, so the isolator suppresses a whole
diagonal.  The circulator shows a strong one-sided diagonal but no
circulation around all of its mode triples.
"""
import numpy as np

from combscatter import build_m, bundled_config, load_config, normalize_pump_off, scattering_matrix
from combscatter.config import load_config_dict
from combscatter.interference import scheme_from_dict

for name in ("isolator41", "circulator41"):
    cfg = load_config(bundled_config(name))
    scheme = scheme_from_dict(load_config_dict(bundled_config(name))["scheme"])
    S = normalize_pump_off(scattering_matrix(build_m(cfg)), scattering_matrix(build_m(cfg.pump_off())))
    db = S.mode_sector().db
    n = db.shape[0]
    print(f"{name}: gamma = {cfg.gamma / (2 * np.pi):g} Hz, step {scheme.step}")
    for k in (2, 4, 6):
        upper = np.array([db[i, i + k] for i in range(n - k)])
        lower = np.array([db[i + k, i] for i in range(n - k)])
        if not np.all(np.isfinite(upper) & np.isfinite(lower)):
            print(f"  offset {k}: no pump path connects these modes")
            continue
        print(f"  offset {k}: mean upper {upper.mean():7.1f} dB, mean lower {lower.mean():7.1f} dB, "
              f"difference {upper.mean() - lower.mean():+6.1f} dB")

"""Five-mode circulator: two of three links circulate.

Run with ``python3 demos/circulator.py``.

Modes a, d, b, e, c sit one spacing apart.  A direct pump at two spacings
links a-b, b-c; a two-hop pump at one spacing offers the detour through d
or e.  The second-order conditions cancel b -> a and c -> b.  The a <-> c
link needs a third-order balance whose loop-phase target sits about pi away
from the second-order one, so one of the three links stays reversed.
"""
import numpy as np

from combscatter import (apply_conditions, build_m, bundled_config, circulator_conditions, circulator_thirdorder,
                         load_config, scattering_matrix)
from combscatter.config import load_config_dict
from combscatter.interference import scheme_from_dict

scheme = scheme_from_dict(load_config_dict(bundled_config("circulator"))["scheme"])
base = load_config(bundled_config("circulator"))
names = scheme.names()

for g in (1e-3, 1e-2, 3e-2):
    cfg = apply_conditions(base, scheme, g)
    S = scattering_matrix(build_m(cfg))
    print(f"g = {g:g}")
    for o, i in scheme.forward():
        fwd = 20 * np.log10(abs(S.element(str(o), str(i))))
        rev = 20 * np.log10(abs(S.element(str(i), str(o))))
        print(f"  {names[i]} -> {names[o]}: forward {fwd:6.1f} dB, reverse {rev:6.1f} dB, margin {fwd - rev:+6.1f}")

second = circulator_conditions(base.comb, base.gamma, 1e-2, scheme.modes)
third = circulator_thirdorder(base.comb, base.gamma, 1e-2, scheme.modes)
print(f"\nloop-phase target, second order: {second.loop_phase_target:+.3f} rad")
print(f"loop-phase target, third order : {third.loop_phase_target:+.3f} rad")
print(f"mismatch {third.extra['phase_mismatch']:+.3f} rad: no single setting circulates all three links")

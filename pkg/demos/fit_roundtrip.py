"""Recovering pump settings from a 41 x 41 scan.

Run with ``python3 demos/fit_roundtrip.py`` (about fifteen seconds).

A synthetic scan of the 41-mode isolator extension stands in for measured
data.  Magnitudes are blind to a two-parameter re-phasing of the modes, so
the fit freezes two pump phases and adjusts gamma, the three amplitudes and
the remaining phase.
"""
from combscatter import PumpTone, bundled_config, fit, full_scan, load_config
from combscatter.sweep_fit import default_free, gauge_fixed_phases, measured_from_scan

truth = load_config(bundled_config("isolator41"))
measured = measured_from_scan(full_scan(truth), truth)
print("gauge-fixed pumps:", gauge_fixed_phases(truth), " free:", ", ".join(default_free(truth)))

pumps = tuple(PumpTone(p.kind, p.offset, p.amplitude * f, p.phase * f)
              for p, f in zip(truth.pumps, (1.2, 0.8, 1.2)))
start = truth.replace(pumps=pumps, coupling_rate=truth.gamma * 0.8)
res = fit(measured, start, seed=1)

print(f"objective {res.initial_objective:.2e} -> {res.objective:.2e} "
      f"after {res.iterations} iterations ({res.evaluations} evaluations)")
print(f"gamma: {res.gamma:.6f} (true {truth.gamma:.6f})")
for k, (p, tone) in enumerate(zip(res.config.pumps, truth.pumps), start=1):
    print(f"pump {k}: amplitude {p.amplitude:.6e} (true {tone.amplitude:.6e}), "
          f"phase {p.phase:+.6f} (true {tone.phase:+.6f})")

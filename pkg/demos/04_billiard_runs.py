"""Full billiard executions: elastic vs plastic on circular and elliptical tables.

Runs the four built-in scenarios, prints their event tables, and writes the
CSV outputs under demo_output/.  If the companion plotting package is
installed, figures are rendered as well (PNG per scenario).
"""

import os

from nhbilliards import PRESET_NAMES, preset, run_scenario

OUT_ROOT = os.path.join(os.path.dirname(__file__), "demo_output")

for name in PRESET_NAMES[:4]:
    out_dir = os.path.join(OUT_ROOT, name)
    result = run_scenario(preset(name), out_dir=out_dir)
    events = result.trace.events
    print(f"\n=== {name}: {len(events)} impacts, termination={result.trace.termination} ===")
    print("  #   time [s]  side   E_pre [J]    E_post [J]")
    for i, ev in enumerate(events):
        print(f"  {i:2d}  {ev.time:8.3f}  {ev.side:5s}  {ev.energy_before:.4e}  {ev.energy_after:.4e}")
    print(f"  files: {out_dir}/trajectory.csv, events.csv, summary.json")

try:
    from nhbplots import PlotSpec, plot_trajectory
except ImportError:
    print("\n(nhbilliards-plots not installed; skipping figures)")
else:
    for name in PRESET_NAMES[:4]:
        out_dir = os.path.join(OUT_ROOT, name)
        import json

        echo = json.load(open(os.path.join(out_dir, "summary.json")))["config_echo"]
        spec = PlotSpec(
            trajectory_csv=os.path.join(out_dir, "trajectory.csv"),
            events_csv=os.path.join(out_dir, "events.csv"),
            a=echo["table"]["a"],
            b=echo["table"]["b"],
            disk_radius=echo["params"]["R"],
            out_path=os.path.join(OUT_ROOT, f"{name}.png"),
            title=name,
        )
        print("figure:", plot_trajectory(spec))

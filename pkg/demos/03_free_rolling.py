"""Free flight of the rolling disk: exact circles and the straight-line limit.

The uncontrolled disk keeps its rolling rate and heading rate, so the
contact point moves on a circle of radius R*thetadot/phidot; as the heading
rate goes to zero the circle opens into a straight line.  A fixed-step RK4
integration of the same dynamics is compared against the closed form.
"""

import numpy as np

from nhbilliards import PennyParams, PennyState, closed_form_flow, rk4_flow

params = PennyParams.thin_disk()

# Reference motion: rolling at 10 rad/s, turning at 0.2 rad/s -> a circle
# of radius 0.01*10/0.2 = 0.5 m.
state = PennyState.from_rolling(0.0, 0.0, 0.0, np.pi / 2, 10.0, 0.2, params)
print("circle radius R*Omega/omega = %.3f m" % (params.R * 10.0 / 0.2))
for t in (0.0, 5.0, 15.0, np.pi / 0.2):  # half a turn at t = pi/omega
    s = closed_form_flow(state, t, params)
    print(f"t = {t:7.3f} s   position = ({s.x:+.4f}, {s.y:+.4f})   heading = {s.phi:.3f} rad")

# With no turning the path is a straight line.
straight = PennyState.from_rolling(0.0, 0.0, 0.0, 0.0, 10.0, 0.0, params)
s = closed_form_flow(straight, 3.0, params)
print("\nstraight case after 3 s: (%.4f, %.4f)  (speed 0.1 m/s)" % (s.x, s.y))

# RK4 on the differential form reproduces the closed form.
numeric = rk4_flow(state, 1.0, 1e-3, params)
exact = closed_form_flow(state, 1.0, params)
err = max(
    abs(getattr(numeric, f) - getattr(exact, f))
    for f in ("x", "y", "theta", "phi", "xdot", "ydot", "thetadot", "phidot")
)
print("\nRK4 (dt = 1e-3) vs closed form at t = 1 s: max coordinate error %.2e" % err)

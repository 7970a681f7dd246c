"""Reproduce the ramping-stress experiment: a Gaussian wall of dislocation
density spreads out and approaches the uniform distribution.

The nominal 200-step variant of this experiment is numerically unstable:
by the final time the transport ratio dt*sup|lambda|/dx sits near 8.6,
far beyond the explicit-upwind limit of 1, and the gradients blow up
around step 52. The -stable presets keep the identical physics with 2000
steps (ratio ~0.86). Run also writes a directory the plots frontend and
`sim audit` can consume.
"""

import sys

from dislosim import linf, run
from dislosim.experiments import preset
from dislosim.scheme import FixedPointDivergedError, RunSinks

print("attempting the nominal 200-step variant (expected to blow up):")
nominal = preset("case1")
try:
    run(nominal.params, nominal.init_plus, nominal.init_minus)
    print("  completed (unexpected at this step count)")
except FixedPointDivergedError as exc:
    print(f"  diverged as analyzed: {exc}")

print("\nrunning case1-stable (2000 steps, same horizon t = 3.38):")
stable = preset("case1-stable")
first = {}


def grab(state, record):
    if state.n == 0:
        first["theta0"] = linf(state.theta_plus_x1)
    if state.n % 500 == 0:
        print(
            f"  n={state.n:4d} t={state.t:5.2f}  max|d_x1 rho+| = "
            f"{linf(state.theta_plus_x1):.5f}  entropy_g = {record.entropy_g:.6f}"
        )


final, records = run(stable.params, stable.init_plus, stable.init_minus, sinks=RunSinks(on_state=grab))
ratio = linf(final.theta_plus_x1) / first["theta0"]
print(f"\ndensity contrast collapsed to {100 * ratio:.1f}% of its initial value;")
print("the distribution is effectively uniform, as the physics predicts.")

if "--write" in sys.argv:
    from dislosim.cli import cmd_preset

    code = cmd_preset("case1-stable", "run_case1_stable")
    print(f"\nwrote run_case1_stable/ (sim exit code {code})")

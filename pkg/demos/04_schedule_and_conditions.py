"""
Scaling schedules and the convergence conditions
================================================

The rescaled clock converges along a schedule (gamma_n, a_n, c_n,
theta_n, alpha_n).  The conditions driving the limit are summed
conditional tail functionals; on a 2-state toy chain every one of them
has a closed form, which is how the estimators earn trust before being
pointed at the p-spin landscape.
"""

import math

import numpy as np

from extremalclock import conditions, engine, pspin

# --- the p-spin schedule at n=16, c=0.25, beta=1 -------------------------
sched = pspin.make_schedule(16, 2, 0.25, 1.0)
print(f"n=16, p=2, c=0.25: gamma={sched.gamma}, alpha={sched.alpha_n}, "
      f"theta={sched.theta_n}, a_n={sched.a_n:.2f}, log c_n={sched.log_c_n}")
# Steeper c means deeper traps but fewer jumps per unit time; at this
# desk scale c=0.25 gives a_n < theta_n (no complete block before t=1),
# which is why the experiment configs default to a flatter c.
flat = pspin.make_schedule(16, 2, 0.05, 1.0)
print(f"blocks in [0, 1]: {sched.blocks_in(1.0)} at c=0.25, "
      f"{flat.blocks_in(1.0)} at c=0.05 (a_n = {flat.a_n:.0f})")

# --- toy chain: everything exponential ------------------------------------
# 2 states, tau = C = 1, pi = 1/2  =>  lambda^{-1} = 2; theta_n = 1,
# c_n = 1, a_n = 10.  One block sum is 2 * Exp(1).
model = engine.CompleteGraphChain(2)
env = engine.ConstantEnvironment(1.0, C=1.0)
toy = engine.ScalingSchedule(n=2, a_n=10.0, log_c_n=0.0, theta_n=1,
                             alpha_n=1.0, v_n=1)
rng = np.random.default_rng(44)
reps = 40_000

q = conditions.q_tail(model, env, toy, 0, 1.0, reps, rng)
print(f"\nblock tail q(1):   {q.mean:.4f} +- {q.sem:.4f}   exact e^-1/2 = {math.exp(-0.5):.4f}")

nu = conditions.nu_t(model, env, toy, 1.0, 1.0, reps, rng)
print(f"intensity nu_1(1): {nu.estimate:.3f} +- {nu.se:.3f}    exact 10 e^-1/2 = {10 * math.exp(-0.5):.3f}")

sg = conditions.sigma_sq_t(model, env, toy, 1.0, 1.0, reps, rng)
print(f"variance sigma^2:  {sg.estimate:.3f} +- {sg.se:.3f}    exact 10 e^-1 = {10 * math.exp(-1.0):.3f}")

# --- exact mixing bound ----------------------------------------------------
# Two-time window probabilities against 2 pi(x) pi(y), exactly.
rep = conditions.mixing_report(5, 75, (0, 1, 2))
print(f"\nmixing n=5: deviation {rep.estimate:.3g} <= bound {rep.target:.3g} "
      f"-> {rep.verdict}")

# --- the jump-term condition on the real landscape -------------------------
inst = pspin.build_instance(16, 2, seed=5, beta=1.0, c=0.25)
penv = pspin.PSpinEnvironment(inst)
cube = pspin.HypercubeSRW(16)
for delta in (0.5, 2.0):
    rep = conditions.condition31_estimate(cube, penv, sched, delta, 1.0,
                                          20_000, rng)
    print(f"condition (3-1) delta={delta}: estimate {rep.estimate:.3f} "
          f"<= 4/(delta gamma beta) = {rep.target:.1f} -> {rep.verdict}")

"""
Exhausting the whole space and the bounded/large dichotomy
==========================================================

On all of R^3 the problem  L u = phi(., u)  has no boundary, so the
library approximates it by solving on nested boxes with constant
boundary data c and watching the solutions as the boxes grow.  Three
instruments combine into one verdict:

  * a truncation study: exhaustion runs on cubes of doubling size,
    tracking the decreasing limit candidate v_c and its interior sup;
  * a blow-up sweep: solutions for growing boundary constants m,
    probing whether u_m keeps pace with m or saturates;
  * a Green-sum diagnostic: truncated Green potentials of the weight
    p, probing whether the whole-space potential could be finite.

A bounded positive solution and arbitrarily large solutions cannot
coexist under the structural hypotheses (nondecreasing concave
absorption with linear growth) -- the report flags the forbidden joint
verdict if the numbers ever suggest it.
"""

import numpy as np

import ellipot as ep

decay = lambda pts: (1.0 + np.linalg.norm(pts, axis=1)) ** (-3.0)
phi = ep.power_phi(decay, 0.5)

# ---------------------------------------------------------------
# 1. One exhaustion run, in detail.
#
# Inside a fixed cube, run_exhaustion solves on a nested sequence of
# sub-boxes with u = c on each sub-box boundary.  The solutions
# restricted to the common core decrease level by level; the outermost
# field is the limit candidate v_c.
# ---------------------------------------------------------------
grid = ep.build_grid(3, 21, (-2.0, 2.0))
exh = ep.build_exhaustion(ep.box_mask(grid), 3)
run = ep.run_exhaustion(exh, phi, 1.0)

header, rows = run.tables()["levels"]
print("  ".join(f"{hcol:>14s}" for hcol in header))
for row in rows:
    print("  ".join(f"{v:14.6g}" for v in row))
print(f"levels decreasing: {run.decreasing_ok}, "
      f"v_c at deepest point: {run.ref_values[-1]:.6f}\n")

# ---------------------------------------------------------------
# 2. Doubling cubes and the interior supremum.
#
# cube_truncation_study repeats that run on cubes of half-width 1, 2, 4
# and classifies each limit candidate: 'saturating' when the interior
# sup sits just below c with the deep interior carrying its share,
# 'trivial' when v_c collapses, 'intermediate' otherwise.  A decaying
# weight starves the absorption far out, so the sup pushes up to c.
# ---------------------------------------------------------------
study = ep.cube_truncation_study([1.0, 2.0, 4.0], phi, c=1.0,
                                 dim=3, shape=21, n_levels=2)
for rec in study.records:
    print(f"half-width {rec.half_width:g}: sup {rec.run.sup_estimate:.6f}, "
          f"verdict {rec.sup_report.verdict}, "
          f"v_c(origin) {rec.origin_value:.6f}")
# the point count is fixed, so h doubles with the box and the sup
# estimates carry O(h) wiggle -- compare them at a matching tolerance
print(f"sup nondecreasing across cubes (tol 1e-3): "
      f"{study.sup_increasing(tol=1e-3)}\n")

# ---------------------------------------------------------------
# 3. Growing boundary constants.
#
# On the largest cube, solve for boundary data m = 1 ... 100.  With a
# sublinear reaction the probe value keeps a fixed fraction of m
# (ratios stay near 1): no envelope, the family blows up.
# ---------------------------------------------------------------
op = ep.assemble(ep.box_mask(ep.build_grid(3, 21, (-4.0, 4.0))))
sweep = ep.blowup_sweep(op, phi, np.geomspace(1.0, 100.0, 9))
print(f"sweep verdict: {sweep.verdict} "
      f"(probe ratios u_m/m from {sweep.ratios.min():.3f} "
      f"to {sweep.ratios.max():.3f})\n")

# ---------------------------------------------------------------
# 4. Green sums of a density, calibrated on two extremes.
#
# Truncated Green potentials over growing cubes probe whether the
# whole-space potential of a density could be finite.  The constant
# density 1 (infinite whole-space potential) keeps adding mass at
# every radius; a Gaussian density levels off.  Densities in between
# need much deeper truncations than these to resolve, because at small
# radii the Dirichlet kernel itself is still growing toward its
# whole-space limit -- which is why this instrument is optional in the
# joint report below.
# ---------------------------------------------------------------
radii = [1.0, 2.0, 4.0]
ops = [ep.assemble(ep.box_mask(ep.build_grid(3, 21, (-r, r))))
       for r in radii]
for label, dens in (("constant 1 ", 1.0),
                    ("exp(-|x|^2)", lambda pts: np.exp(-np.sum(pts**2, 1)))):
    diag = ep.green_potential_diagnostic(ops, radii, dens)
    print(f"green sums of {label}: {np.round(diag.values, 4)} -> "
          f"{diag.verdict} (growth exponent {diag.exponent:.2f})")
print()

# ---------------------------------------------------------------
# 5. The joint verdict.
# ---------------------------------------------------------------
report = ep.dichotomy_report(study, sweep)
print(report.render())

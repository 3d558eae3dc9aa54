"""Network-guided selection: smoothing coefficients over a known variable graph.

The network scenario has three views whose signal variables form hub-and-spoke
blocks. Fitting with the normalized-Laplacian smoothing penalty (graphs
supplied) is compared against the plain row-sparse fit at the same constraint
radii: smoothing encourages connected variables to be kept or dropped
together, which typically recovers more of each block at no false-positive
cost.
"""

import numpy as np

import sida
from sida.data import standardize_with
from sida.gev import solve_gev, whitened_lda_init
from sida.scatter import build_scatter_set
from sida.tuning import view_tau_bounds

spec = sida.ScenarioSpec(scenario="NET1", dims=(120, 120, 120),
                         n_per_class=40, seed=1)
data = sida.generate(spec)
train = sida.standardize(data.train)
test = standardize_with(data.test, train.stats)
print(f"{train.n_views} views, {train.n_samples} samples, "
      f"signal = first 40 variables of each view")
print(f"view-1 graph: {len(data.graphs[0].edges)} edges "
      f"(four 10-variable stars)")

# shared tau policy: the geometric midpoint of each view's usable radius range
scat = build_scatter_set(train)
sol = solve_gev(scat, rho=0.5, r=2)
bounds = view_tau_bounds(scat, sol.gammas, sol.lambdas, rho=0.5)
taus = [float(np.sqrt(lo * hi)) for lo, hi in bounds]
init = whitened_lda_init(scat, 2)
print("taus:", np.round(taus, 3).tolist())

for label, graphs in (("with network smoothing", data.graphs),
                      ("row sparsity only     ", None)):
    model = sida.fit(train, taus=taus, graphs=graphs,
                     scatter_set=scat, init_gammas=init)
    rep = sida.evaluate(model, test, truth=data.truth)
    tpr = [round(v["tpr"], 3) for v in rep.per_view]
    fpr = [round(v["fpr"], 3) for v in rep.per_view]
    print(f"{label}: error={rep.error_rate:.4f} rho_hat={rep.rho_hat:.3f} "
          f"TPR/view={tpr} FPR/view={fpr}")

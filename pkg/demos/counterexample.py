"""The eps=2 collapse on the half-plane: the special points z_R, w_R get
closer in d_2 like 4/(e^{2R}+1), while the uniformity estimate of the pair
blows up.  At eps <= 1 nothing of the sort happens.

Writes report.json and CSV tables into ``demo_out/counterexample``.
"""
from roughuniform.experiments import experiment_counterexample

rep = experiment_counterexample(eps_list=(1.0, 2.0), R_list=(1.0, 2.0))
for row in rep.tables["pairs"]["rows"]:
    R, eps, _, _, d, bound, _, A = row[:8]
    print(f"R={R:g} eps={eps:g}: d_eps={d:.4f} (4/(e^2R+1) = {bound:.4f}), A = {A:.2f}")
print(rep.summary())
rep.write("demo_out/counterexample")

# %% [markdown]
# # Fitting q by gradient ascent
#
# Start from q = Lognormal(0, 1) and climb the ELBO with each gradient
# estimator.  The closed-form run is the noiseless baseline.

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from parvi import LOGNORMAL, GammaExpModel, OptConfig, RngState, VariationalParams, ascend

model = GammaExpModel(3, 1, 1)
start = VariationalParams.from_loc_scale(0.0, 1.0)
print("analytic optimum (mu*, sigma*):", model.optimal_lognormal())

runs = {}
for kind, extra in (("closed-form", {}), ("reparam", {"samples_per_step": 256}), ("score", {"samples_per_step": 256})):
    cfg = OptConfig(grad_estimator=kind, max_steps=3000, rng=RngState(3), **extra)
    params, trace = ascend(model, LOGNORMAL, start, cfg)
    runs[kind] = trace
    print(f"{kind:12s} mu={params.loc:.4f} sigma={params.scale:.4f} steps={len(trace) - 1} status={trace.status}")

# %%
fig, ax = plt.subplots(figsize=(5, 5))
for kind, trace in runs.items():
    ax.plot([r.loc for r in trace], [r.scale for r in trace], lw=1, label=kind)
mu_star, sigma_star = model.optimal_lognormal()
ax.plot(mu_star, sigma_star, "k*", ms=12)
ax.set_xlabel("mu")
ax.set_ylabel("sigma")
ax.legend()
fig.tight_layout()
fig.savefig("fit_paths.png", dpi=120)
print("wrote fit_paths.png")

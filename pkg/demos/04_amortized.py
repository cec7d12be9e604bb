# %% [markdown]
# # Amortized inference
#
# 200 observations, each with its own rate.  Rather than fitting 200
# Lognormals, a 16-unit tanh network maps each x to (mu, log sigma).  The
# per-point optimum is known in closed form, so we can grade the network.

# %%
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from parvi import AmortizeConfig, Dataset, RngState, train_amortized

ds = Dataset.generate(alpha=3, beta=1, n=200, rng=RngState(0, 2**32))
encoder, trace, report = train_amortized(ds, 3, 1, AmortizeConfig(seed=0))
print("status:", trace.status)
print("median |mu_pred - mu*| :", round(report.median_abs_mu_error, 4))
print("sigma_pred range        :", report.sigma_pred.min().round(3), "-", report.sigma_pred.max().round(3), "(sigma* = 0.5)")
print(f"amortization gap        : {report.gap:.4f} exact, {report.gap_mc:.4f} +- {report.gap_se:.4f} MC")

# %%
order = np.argsort(report.x)
fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
a1.plot(report.x[order], report.mu_opt[order], "k-", label="per-point optimum")
a1.plot(report.x, report.mu_pred, ".", ms=4, label="encoder")
a1.set_xscale("log")
a1.set_xlabel("x")
a1.set_ylabel("mu")
a1.legend()
a2.plot(trace.epoch_losses, label="MC training loss")
a2.plot(trace.expected_losses, label="exact loss (epoch mean)")
a2.set_xlabel("epoch")
a2.legend()
fig.tight_layout()
fig.savefig("amortized.png", dpi=120)
print("wrote amortized.png")

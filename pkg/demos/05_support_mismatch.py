# %% [markdown]
# # Why a Normal q cannot approximate a rate posterior
#
# The posterior over a rate lives on (0, inf).  A Normal q puts mass on
# negative rates, where log p(x, z) is -inf, so the ELBO is -inf.  The
# library refuses the pairing up front; with the gate switched off we can
# see the failure as data.

# %%
from parvi import (
    LOGNORMAL,
    NORMAL,
    EstimatorConfig,
    GammaExpModel,
    RngState,
    SupportError,
    VariationalParams,
    elbo_mc,
    support_compatible,
)

model = GammaExpModel(3, 1, 1)
print("normal   :", support_compatible(NORMAL, model).message)
print("lognormal:", support_compatible(LOGNORMAL, model).message)

theta = VariationalParams.from_loc_scale(2.0, 1.0)
try:
    elbo_mc(model, NORMAL, theta, EstimatorConfig(1000, RngState(5)))
except SupportError as exc:
    print("rejected:", exc)

# %%
est = elbo_mc(model, NORMAL, theta, EstimatorConfig(1000, RngState(5), check_support=False))
print("ELBO estimate:", est.value, "first bad draw index:", est.failed_index, "z =", est.failed_draw)

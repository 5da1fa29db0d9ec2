# %% [markdown]
# # Learning-rate schedules and cycle training
#
# Two presets ship with the package: three 25-epoch one-cycle runs, and
# five 8-epoch cosine restarts. Both are lists of `Cycle` objects.

# %%
import numpy as np

from impactscore import (
    LinearClassifier,
    OneCycleConfig,
    SgdrConfig,
    TrainConfig,
    find_lr,
    one_cycle_lr,
    plan_a,
    plan_b,
    run_cycles,
    sgdr_lr,
    stratified_split,
)
from impactscore.synthetic import marker_corpus

cfg = OneCycleConfig(lr_max=1e-2, total_steps=100)
lrs = np.array([one_cycle_lr(cfg, s) for s in range(100)])
print(lrs[0], lrs.max(), lrs[-1], int(lrs.argmax()))

# %%
sg = SgdrConfig(lr_max=1e-2, lr_min=0.0, cycle_epochs=8, n_cycles=5)
print([round(sgdr_lr(sg, e), 6) for e in range(9)])

# %%
print(plan_a().total_epochs, plan_b().total_epochs)

# %% [markdown]
# ## Picking a rate
#
# The range test raises the rate geometrically on a throwaway copy of the
# model and suggests where the smoothed loss drops fastest.

# %%
corpus = marker_corpus(n_docs=500, seed=0)
train, valid = stratified_split(corpus, 0.2, seed=0)
model = LinearClassifier.zeros()
finder = find_lr(model, train, lr_lo=1e-7, lr_hi=10.0, steps=100, config=TrainConfig(seed=0))
print(f"suggested lr {finder.suggestion:.3g}, scanned {len(finder.lrs)} rates, diverged={finder.diverged}")
print(np.all(model.weights == 0))  # the scan never touches the model

# %% [markdown]
# ## Cycles with checkpoints
#
# After each cycle the model is saved and scored on the validation split,
# and the next cycle resumes from the best checkpoint so far.

# %%
result = run_cycles(model, train, valid, plan_b(finder.suggestion), TrainConfig(seed=0))
print([round(s, 3) for s in result.scores], "best cycle", result.best_cycle)
print(len(result.history), "epochs recorded")

# %% [markdown]
# The same structure at a rate of 1e-6 barely moves a zero-initialised
# linear model: 1000 plain SGD steps cannot push any weight far from 0.

# %%
slow = run_cycles(LinearClassifier.zeros(), train, valid, plan_b(), TrainConfig(seed=0))
print([round(s, 3) for s in slow.scores], float(np.abs(slow.model.weights).max()))

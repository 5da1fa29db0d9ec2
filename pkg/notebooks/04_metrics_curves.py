# %% [markdown]
# # Scoring a classifier and plotting its training curve

# %%
import tempfile
from pathlib import Path

from impactscore import ConfusionMatrix, LinearClassifier, TrainConfig, emit_curves, report, run_cycles
from impactscore import find_lr, plan_a, stratified_split
from impactscore.metrics import render_report, render_summary
from impactscore.synthetic import marker_corpus

cm = ConfusionMatrix(tp=733, fp=108, fn=179, tn=629)
rep = report(cm)
print(render_summary(rep))
print(render_report(rep))

# %% [markdown]
# Precision and recall are computed for one positive class. `swapped()`
# moves the viewpoint to the other class; accuracy stays the same.

# %%
other = report(cm.swapped())
print(other.positive, round(other.recall, 4), round(rep.specificity, 4), other.accuracy == rep.accuracy)

# %% [markdown]
# A zero denominator yields 0 and is recorded in `undefined` rather than
# raising.

# %%
print(report(ConfusionMatrix(tp=0, fp=0, fn=3, tn=2)).undefined)

# %% [markdown]
# ## Accuracy against epoch
#
# The history is one row per epoch: 75 for the one-cycle preset.

# %%
corpus = marker_corpus(n_docs=300, seed=1)
tr, va = stratified_split(corpus, 0.2, seed=1)
lr = find_lr(LinearClassifier.zeros(), tr, 1e-7, 10.0, 100, TrainConfig(seed=1)).suggestion
res = run_cycles(LinearClassifier.zeros(), tr, va, plan_a(lr), TrainConfig(seed=1))

out = Path(tempfile.mkdtemp())
emit_curves(res.history, out / "curves.csv", svg_path=out / "curves.svg")
rows = (out / "curves.csv").read_text().splitlines()
print(len(rows) - 1, "epochs")
print(rows[0])
print(rows[-1])

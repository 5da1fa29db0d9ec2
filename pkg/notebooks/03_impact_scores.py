# %% [markdown]
# # Per-word impact scores
#
# To explain one prediction we delete random subsets of words, ask the
# classifier about each variant, and fit a weighted linear model on the
# logit. Each word's coefficient is its contribution; the intercept is
# the bias, and contributions plus bias reproduce the full-sentence score.

# %%
import numpy as np

from impactscore import ExplainConfig, LinearClassifier, TrainConfig, explain, render, stratified_split, train
from impactscore.synthetic import marker_corpus

corpus = marker_corpus(n_docs=500, seed=0)
tr, va = stratified_split(corpus, 0.2, seed=0)
model = train(LinearClassifier.zeros(), tr, TrainConfig(learning_rate=0.5, epochs=5, seed=0)).model

# %%
expl = explain("you are such a freak honestly", model.predict_texts, ExplainConfig(seed=0))
print(render(expl))

# %%
top = expl.ranked()[0]
print(top.token, round(top.contribution, 3))
# in the neg frame the header score keeps the pos-logit sign
print(round(expl.highlighted_sum + expl.bias, 6), round(-expl.score, 6))

# %% [markdown]
# Asking for the other class flips every sign. The two class
# probabilities still sum to one.

# %%
flipped = explain("you are such a freak honestly", model.predict_texts, ExplainConfig(seed=0), target_class="pos")
print([round(a.contribution + b.contribution, 12) for a, b in zip(expl.contributions, flipped.contributions)])
print(expl.probability + flipped.probability)

# %% [markdown]
# For a black box that is already linear in the kept words, the surrogate
# recovers the true weights.

# %%
true_w = {"alpha": 1.5, "beta": -2.0, "gamma": 0.25}


def linear_box(texts):
    z = np.array([sum(true_w[w] for w in t.split()) - 0.1 for t in texts])
    return 1 / (1 + np.exp(-z))


lin = explain("alpha beta gamma", linear_box, ExplainConfig(n_samples=500, ridge_lambda=0.0), target_class="pos")
print({c.token: round(c.contribution, 4) for c in lin.contributions}, round(lin.bias, 4))

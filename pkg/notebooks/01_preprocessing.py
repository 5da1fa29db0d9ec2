# %% [markdown]
# # Cleaning tweets and splitting a corpus
#
# Raw tweets carry URLs, emoji and mixed case. `normalize` strips those,
# and the n-gram hasher turns what is left into a sparse vector.

# %%
import numpy as np

from impactscore import FeatureConfig, extract_ngrams, normalize, stratified_split, tokenize, vectorize
from impactscore.corpus import make_document
from impactscore.synthetic import marker_corpus

raw = "You are a FREAK 🔥🔥  https://t.co/abc   @user #nope"
clean = normalize(raw)
print(repr(clean))
print(normalize(clean) == clean)  # running it twice changes nothing

# %%
tokens = tokenize(clean)
print(tokens)
print(extract_ngrams(tokens, 2))

# %% [markdown]
# Every n-gram lands in one of `2**18` buckets. Repeated unigrams add up
# under term-frequency weighting and saturate at 1 under binary weighting.

# %%
doc = make_document("d1", "freak freak go away")
for weighting in ("term-frequency", "binary"):
    vec = vectorize(doc, FeatureConfig(weighting=weighting))
    print(weighting, dict(zip(vec.indices.tolist(), vec.values.tolist())))

# %% [markdown]
# ## A seeded split
#
# The synthetic marker corpus labels a document `neg` exactly when it
# contains "freak". The split keeps the class balance on both sides.

# %%
corpus = marker_corpus(n_docs=500, seed=0)
train, valid = stratified_split(corpus, valid_fraction=0.2, seed=0)
print(len(train), len(valid))
print(train.counts(), valid.counts())

again, _ = stratified_split(corpus, valid_fraction=0.2, seed=0)
print(again.documents == train.documents)
print(np.mean(valid.y))

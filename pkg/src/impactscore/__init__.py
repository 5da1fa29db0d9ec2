"""Hate-speech tweet classification with per-word probabilistic impact scores."""

from .corpus import (
    BinaryLabel,
    CorpusError,
    Document,
    LabeledCorpus,
    RawRecord,
    binarize,
    load_records,
    make_document,
    normalize,
    read_corpus,
    stratified_split,
    write_jsonl,
)
from .explain import Contribution, ExplainConfig, Explanation, explain, fit_surrogate, render
from .features import FeatureConfig, FeatureVector, extract_ngrams, tokenize, vectorize
from .metrics import ConfusionMatrix, confusion, emit_curves, report
from .model import (
    LinearClassifier,
    TrainConfig,
    load,
    loss_and_gradient,
    predict_logit,
    predict_proba,
    save,
    train,
)
from .schedule import (
    Cycle,
    CyclePlan,
    OneCycleConfig,
    SgdrConfig,
    find_lr,
    one_cycle_lr,
    plan_a,
    plan_b,
    run_cycles,
    sgdr_lr,
)

__version__ = "0.1.0"

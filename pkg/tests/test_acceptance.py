"""Acceptance checks, one test per criterion, each reporting a PASS/FAIL/SKIP line.

Run with ``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``;
the per-criterion lines appear in the terminal summary. All tolerances and runtime
budgets are fixed here and are not tuned per run.

Criterion 7 needs the HASOC English training file: point
``IMPACTSCORE_HASOC_TRAIN`` at it. The first run records a macro-F1 baseline
in ``tests/hasoc_baseline.json``; later runs must land within 2 points of it.
"""

import json
import os
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.special import expit

from impactscore.corpus import NEG, POS, binarize, load_records, stratified_split
from impactscore.explain import Contribution, ExplainConfig, Explanation, explain
from impactscore.features import FeatureConfig, FeatureVector
from impactscore.metrics import ConfusionMatrix, report
from impactscore.model import (
    LinearClassifier,
    TrainConfig,
    accuracy,
    encode,
    load,
    loss_and_gradient,
    save,
    train,
)
from impactscore.schedule import (
    OneCycleConfig,
    SgdrConfig,
    find_lr,
    one_cycle_lr,
    plan_a,
    plan_b,
    run_cycles,
    sgdr_lr,
)
from impactscore.synthetic import filler_vocabulary, marker_corpus

RESULTS: dict[str, tuple[str, str, str]] = {}

SCORE_TOL = 1e-3
# reference values are printed to 3 decimals, so some score gaps land exactly on the tolerance;
# this slack only absorbs the binary representation of those decimals
REPRESENTATION_SLACK = 1e-12
PROBA_TOL = 5e-4
RECOVERY_TOL = 1e-2
GRADIENT_TOL = 1e-5
ANCHOR_TOL = 1e-12
METRIC_TOL = 1e-12
E2E_MIN_VAL_ACC = 0.95
BASELINE_BAND = 0.02

BASELINE_FILE = Path(__file__).with_name("hasoc_baseline.json")


@contextmanager
def criterion(key, title, budget=None):
    t0 = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - t0
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"
    except pytest.skip.Exception as exc:
        RESULTS[key] = ("SKIP", title, str(exc))
        raise
    except BaseException as exc:
        RESULTS[key] = ("FAIL", title, str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
        raise
    else:
        RESULTS[key] = ("PASS", title, f"{elapsed:.2f}s")


def summary_lines():
    return [f"{status:4}  criterion {key}: {title} ({detail})" for key, (status, title, detail) in
            sorted(RESULTS.items())]


REFERENCE_EXPLANATIONS = [
    (6.574, -0.778, 5.796, 0.997, "pos"),
    (3.403, -0.461, 2.941, 0.950, "pos"),
    (2.328, -0.638, 1.690, 0.844, "pos"),
    (4.211, 0.376, -4.588, 0.990, "neg"),
    (5.230, 0.429, -5.660, 0.997, "neg"),
    (6.379, 0.216, -6.596, 0.999, "neg"),
]


def test_criterion_1_decomposition_reproduction():
    with criterion("1", "reference quadruples reproduce score and probability", budget=1.0):
        for total, bias, score, prob, cls in REFERENCE_EXPLANATIONS:
            e = Explanation.from_decomposition(cls, [Contribution("w", 0, total)], bias)
            assert abs(e.score - score) <= SCORE_TOL + REPRESENTATION_SLACK, (total, bias, e.score)
            assert abs(e.probability - prob) < PROBA_TOL, (total, bias, e.probability)


def test_criterion_2_surrogate_oracle_recovery():
    with criterion("2", "linear black box recovered by the surrogate over 20 seeds", budget=10.0):
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            words = filler_vocabulary(int(rng.integers(4, 16)), seed)
            beta = rng.normal(scale=1.5, size=len(words))
            b0 = float(rng.normal())
            coef = dict(zip(words, beta))

            def black_box(texts):
                return expit(np.array([b0 + sum(coef.get(w, 0.0) for w in t.split()) for t in texts]))

            cfg = ExplainConfig(n_samples=1000, ridge_lambda=1e-3, seed=seed)
            e = explain(" ".join(words), black_box, cfg, target_class="pos")
            est = np.array([c.contribution for c in e.contributions])
            assert np.max(np.abs(est - beta)) < RECOVERY_TOL, seed
            assert abs(e.bias - b0) < RECOVERY_TOL, seed


def test_criterion_3_gradient_correctness():
    with criterion("3", "analytic gradients match central differences on 120 instances", budget=5.0):
        rng = np.random.default_rng(7)
        h = 1e-6
        for _ in range(120):
            dim = int(rng.integers(4, 24))
            fc = FeatureConfig(hash_dimension=1 << int(np.ceil(np.log2(dim))))
            d = fc.hash_dimension
            model = LinearClassifier(rng.normal(scale=0.5, size=d), float(rng.normal()), fc)
            batch = []
            for _ in range(int(rng.integers(1, 17))):
                idx = rng.choice(d, size=int(rng.integers(1, d)), replace=False)
                x = FeatureVector.from_dict({int(i): float(rng.uniform(0.5, 3)) for i in idx}, d)
                batch.append((x, POS if rng.random() < 0.5 else NEG))
            lam = float(rng.uniform(0, 0.5))
            _, gw, gb = loss_and_gradient(model, batch, lam)

            def f(w, b):
                return loss_and_gradient(LinearClassifier(w, b, fc), batch, lam)[0]

            fd = np.empty(d + 1)
            for i in range(d):
                e = np.zeros(d)
                e[i] = h
                fd[i] = (f(model.weights + e, model.intercept) - f(model.weights - e, model.intercept)) / (2 * h)
            fd[d] = (f(model.weights, model.intercept + h) - f(model.weights, model.intercept - h)) / (2 * h)
            g = np.append(gw, gb)
            rel = np.linalg.norm(g - fd) / max(np.linalg.norm(g) + np.linalg.norm(fd), 1e-12)
            assert rel < GRADIENT_TOL, rel


def test_criterion_4_schedule_anchors_and_plan_lengths():
    with criterion("4", "schedule anchors exact, plan A/B histories of 75/40 epochs"):
        oc = OneCycleConfig(lr_max=1e-5, total_steps=25 * 7, div_factor=25.0, final_div=1e4)
        assert abs(one_cycle_lr(oc, 0) - 1e-5 / 25) < ANCHOR_TOL
        assert abs(one_cycle_lr(oc, oc.peak_step) - 1e-5) < ANCHOR_TOL
        assert abs(one_cycle_lr(oc, oc.total_steps - 1) - 1e-5 / 1e4) < ANCHOR_TOL
        sg = SgdrConfig(lr_max=1e-6, lr_min=1e-8, cycle_epochs=8)
        assert abs(sgdr_lr(sg, 0) - 1e-6) < ANCHOR_TOL
        assert abs(sgdr_lr(sg, 8) - 1e-8) < ANCHOR_TOL
        assert abs(sgdr_lr(sg, 4) - (1e-6 + 1e-8) / 2) < ANCHOR_TOL

        corp = marker_corpus(n_docs=100, seed=1)
        tr, va = stratified_split(corp, 0.2, seed=0)
        fc = FeatureConfig(hash_dimension=4096)
        for plan, n in ((plan_a(), 75), (plan_b(), 40)):
            res = run_cycles(LinearClassifier.zeros(fc), tr, va, plan, TrainConfig())
            assert len(res.history) == n
            assert res.scores[res.best_cycle - 1] == max(res.scores)


def test_criterion_5_metrics_oracle_equivalence():
    def frac(a, b):
        return Fraction(a, b) if b else Fraction(0)

    with criterion("5", "report fields equal a brute-force recount on 1000 sets", budget=5.0):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 200))
            pred = rng.integers(0, 2, n)
            act = rng.integers(0, 2, n)
            tp = int(sum(1 for p, a in zip(pred, act) if p and a))
            fp = int(sum(1 for p, a in zip(pred, act) if p and not a))
            fn = int(sum(1 for p, a in zip(pred, act) if not p and a))
            tn = n - tp - fp - fn
            r = report(ConfusionMatrix(tp, fp, fn, tn))
            prec_p, rec_p = frac(tp, tp + fp), frac(tp, tp + fn)
            prec_n, rec_n = frac(tn, tn + fn), frac(tn, tn + fp)

            def f1(p, q):
                return 2 * p * q / (p + q) if p + q else Fraction(0)

            sup_p, sup_n = tp + fn, tn + fp
            expected = {
                "accuracy": Fraction(tp + tn, n),
                "precision": prec_p,
                "recall": rec_p,
                "specificity": rec_n,
                "f1": f1(prec_p, rec_p),
            }
            for name, val in expected.items():
                assert abs(getattr(r, name) - float(val)) <= METRIC_TOL, name
            assert abs(r.per_class["neg"].precision - float(prec_n)) <= METRIC_TOL
            assert abs(r.per_class["neg"].f1 - float(f1(prec_n, rec_n))) <= METRIC_TOL
            assert abs(r.macro.f1 - float((f1(prec_p, rec_p) + f1(prec_n, rec_n)) / 2)) <= METRIC_TOL
            wf1 = (f1(prec_p, rec_p) * sup_p + f1(prec_n, rec_n) * sup_n) / n
            assert abs(r.weighted.f1 - float(wf1)) <= METRIC_TOL
            assert r.per_class["pos"].support == sup_p and r.per_class["neg"].support == sup_n


def _end_to_end(lr_max=None):
    corp = marker_corpus(n_docs=500, seed=0)
    tr, va = stratified_split(corp, 0.2, seed=0)
    fc = FeatureConfig()
    cfg = TrainConfig(seed=0)
    plan = plan_b() if lr_max is None else plan_b(lr_max)
    res = run_cycles(LinearClassifier.zeros(fc), tr, va, plan, cfg)
    val_acc = accuracy(res.model, encode(va, fc))
    neg_doc = next(d for d, lab in zip(va.documents, va.labels) if lab == NEG)
    expl = explain(neg_doc, res.model.predict_texts, ExplainConfig(seed=0))
    return val_acc, expl, len(res.history)


def test_criterion_6_end_to_end_plan_b():
    with criterion("6", "plan B at its preset lr 1e-6: val acc >= 0.95 and marker ranked top", budget=60.0):
        val_acc, expl, n_epochs = _end_to_end()
        assert n_epochs == 40
        top = expl.ranked()[0]
        assert val_acc >= E2E_MIN_VAL_ACC, f"validation accuracy {val_acc:.4f} < {E2E_MIN_VAL_ACC}"
        assert expl.target_class == "neg" and top.token == "freak", (expl.target_class, top.token)


def test_criterion_6_supplementary_finder_tuned_lr():
    """Not a gate: the same plan-B cycle structure with its peak lr taken from the LR finder."""
    with criterion("6s", "supplementary: plan B structure with finder-suggested lr", budget=60.0):
        corp = marker_corpus(n_docs=500, seed=0)
        tr, _ = stratified_split(corp, 0.2, seed=0)
        lr = find_lr(LinearClassifier.zeros(), tr, 1e-7, 10.0, 100, TrainConfig(seed=0)).suggestion
        val_acc, expl, n_epochs = _end_to_end(lr)
        assert n_epochs == 40
        assert val_acc >= E2E_MIN_VAL_ACC, f"validation accuracy {val_acc:.4f} (lr {lr:.3g})"
        assert expl.target_class == "neg" and expl.ranked()[0].token == "freak"


def _hasoc_macro_f1(path):
    corp = binarize(load_records(path))
    tr, va = stratified_split(corp, 0.2, seed=0)
    fc = FeatureConfig()
    cfg = TrainConfig(seed=0)
    lr = find_lr(LinearClassifier.zeros(fc), tr, 1e-7, 10.0, 100, cfg).suggestion
    res = run_cycles(LinearClassifier.zeros(fc), tr, va, plan_b(lr), cfg)
    data = encode(va, fc)
    z = data.X @ res.model.weights + res.model.intercept
    pred_pos = z >= 0
    act_pos = data.y == 1
    cm = ConfusionMatrix(
        int(np.sum(pred_pos & act_pos)), int(np.sum(pred_pos & ~act_pos)),
        int(np.sum(~pred_pos & act_pos)), int(np.sum(~pred_pos & ~act_pos)),
    )
    return report(cm).macro.f1


def test_criterion_7_hasoc_baseline_gate():
    with criterion("7", "HASOC macro-F1 within 2 points of the recorded baseline"):
        path = os.environ.get("IMPACTSCORE_HASOC_TRAIN")
        if not path or not Path(path).is_file():
            pytest.skip("HASOC training data not present; criteria 1-6 constitute acceptance")
        f1 = _hasoc_macro_f1(path)
        if not BASELINE_FILE.exists():
            BASELINE_FILE.write_text(json.dumps({"macro_f1": f1, "split_seed": 0}, indent=2) + "\n")
            return
        base = json.loads(BASELINE_FILE.read_text())["macro_f1"]
        assert abs(f1 - base) <= BASELINE_BAND, f"macro-F1 {f1:.4f} vs baseline {base:.4f}"


def test_criterion_8_persistence_round_trip(tmp_path):
    corp = marker_corpus(n_docs=200, seed=4)
    trained = train(LinearClassifier.zeros(), corp, TrainConfig(learning_rate=0.2, epochs=2)).model
    rng = np.random.default_rng(8)
    vocab = filler_vocabulary(300, 4) + ["freak"]
    docs = [" ".join(rng.choice(vocab, size=int(rng.integers(1, 20)))) for _ in range(100)]
    with criterion("8", "save/load gives bit-identical predictions on 100 documents", budget=1.0):
        back = load(save(trained, tmp_path / "model.json"))
        assert back.predict_texts(docs).tobytes() == trained.predict_texts(docs).tobytes()
        assert back.weights.tobytes() == trained.weights.tobytes()
        assert back.intercept == trained.intercept


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

"""Acceptance suite: one test per release criterion, each at its stated
tolerance, printing a PASS/FAIL line (run with ``pytest -s`` to see them).

Criterion 9 needs externally supplied full-scale data; point
PROKWO_FULL_DATA at a directory holding corpus/ (CHAT), lexicon.csv and
administrations.csv to enable it.
"""

import functools
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sps
from scipy.special import expit

from prokwo.cooccurrence import CooccurrenceMatrix, build_cooccurrence
from prokwo.corpus import cumulative_slice
from prokwo.glm import LogisticIRLS, log_likelihood
from prokwo.glmm import MixedLogisticRegression
from prokwo.lexicon import Administration, compute_mcdip, load_lexicon
from prokwo.predictors import (
    document_diversity,
    lexical_diversity,
    pro_kwo,
    pro_kwo_shuffle,
)
from prokwo.stats import pearson, pearson_pvalue

from conftest import FIXTURES, GOLDEN, random_corpus
from oracles import (
    agq_fit,
    brute_force_cooccurrence,
    central_difference_gradient,
    direct_pearson,
    pvalue_from_r,
)


def criterion(number, description, budget_seconds=None):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.monotonic()
            try:
                fn(*args, **kwargs)
            except pytest.skip.Exception:
                print(f"[criterion {number}] SKIP  {description}")
                raise
            except BaseException:
                print(f"[criterion {number}] FAIL  {description}")
                raise
            elapsed = time.monotonic() - start
            print(f"[criterion {number}] PASS  {description} ({elapsed:.1f}s)")
            if budget_seconds is not None:
                assert elapsed < budget_seconds, (
                    f"criterion {number} exceeded its {budget_seconds}s budget"
                )
        return wrapper
    return decorate


def simple_lexicon(words):
    return load_lexicon(
        [{"word": w, "mcdi_category": "c", "grammatical_class": "noun"} for w in words]
    )


@criterion(1, "worked-example scores reproduce exactly")
def test_criterion_1_worked_example():
    counts = np.zeros((6, 6), dtype=np.int64)
    counts[0, 2:] = [10, 10, 100, 100]   # "why"-like row
    counts[1, 2:] = [100, 100, 10, 10]   # "where"-like row
    mcdip = np.array([0.0, 0.0, 0.7, 0.6, 0.2, 0.3])
    pk = pro_kwo(CooccurrenceMatrix(24, sps.csr_matrix(counts)), mcdip)
    assert pk[0] == 63 / 220
    assert pk[1] == 135 / 220
    assert abs(pk[0] - 0.29) < 0.005
    assert abs(pk[1] - 0.61) < 0.005


@criterion(2, "window counting equals brute-force oracle on 100 random corpora",
           budget_seconds=10)
def test_criterion_2_cooccurrence_oracle():
    rng = np.random.default_rng(2024)
    for case in range(100):
        corpus, vocab = random_corpus(
            rng, max_docs=50, max_utterances=30, vocab_size=40
        )
        lexicon = simple_lexicon(vocab)
        sl = cumulative_slice(corpus, 30)
        token_lists = list(sl.iter_token_lists())
        for window in (1, 3, 7):
            got = build_cooccurrence(sl, lexicon, window=window).counts.toarray()
            expected = brute_force_cooccurrence(token_lists, vocab, window)
            assert np.array_equal(got, expected), (case, window)


@criterion(3, "predictor ranges, convexity, and scaling identities",
           budget_seconds=5)
def test_criterion_3_predictor_identities():
    rng = np.random.default_rng(3)

    # ranges on random corpus-derived predictors and survey proportions
    corpus, vocab = random_corpus(rng, max_docs=20, vocab_size=20)
    lexicon = simple_lexicon(vocab)
    sl = cumulative_slice(corpus, 30)
    matrix = build_cooccurrence(sl, lexicon)
    ld = lexical_diversity(matrix)
    dd = document_diversity(sl, lexicon, corpus.document_count)
    assert ((0 <= ld) & (ld <= 1)).all()
    assert ((0 <= dd) & (dd <= 1)).all()
    admins = [
        Administration(
            f"c{i}", 24,
            frozenset(int(j) for j in np.flatnonzero(rng.random(20) < 0.5)),
        )
        for i in range(30)
    ]
    mcdip = compute_mcdip(admins, lexicon).row(24)
    assert ((0 <= mcdip) & (mcdip <= 1)).all()
    pk = pro_kwo(matrix, mcdip)
    finite = np.isfinite(pk)
    assert ((0 <= pk[finite]) & (pk[finite] <= 1)).all()

    # convex-combination bounds on 1,000 random rows
    size = 25
    for _ in range(1000):
        row = rng.integers(0, 30, size=size) * (rng.random(size) < 0.4)
        if row.sum() == 0:
            continue
        m = np.zeros((size, size), dtype=np.int64)
        m[0] = row
        scores = rng.random(size)
        value = pro_kwo(CooccurrenceMatrix(24, sps.csr_matrix(m)), scores)[0]
        support = scores[row > 0]
        assert support.min() - 1e-12 <= value <= support.max() + 1e-12
        assert 0.0 <= value <= 1.0

    # invariance to uniform row scaling
    counts = rng.integers(0, 25, size=(40, 40))
    scores = rng.random(40)
    base = pro_kwo(CooccurrenceMatrix(24, sps.csr_matrix(counts)), scores)
    for k in (3, 17, 1000):
        scaled = pro_kwo(
            CooccurrenceMatrix(24, sps.csr_matrix(counts * k)), scores
        )
        mask = np.isfinite(base)
        assert np.abs(base[mask] - scaled[mask]).max() <= 1e-12


@criterion(4, "shuffled-score null is centred at zero and seed-stable",
           budget_seconds=30)
def test_criterion_4_shuffle_null():
    rng = np.random.default_rng(44)
    size = 200
    counts = rng.integers(0, 12, size=(size, size)) * (rng.random((size, size)) < 0.2)
    matrix = CooccurrenceMatrix(24, sps.csr_matrix(counts))
    mcdip = rng.random(size)  # independent of the co-occurrence structure
    res = pro_kwo_shuffle(matrix, mcdip, mcdip, n_shuffles=1000, seed=2024)
    assert abs(res.mean_r) < 0.05
    again = pro_kwo_shuffle(matrix, mcdip, mcdip, n_shuffles=1000, seed=2024)
    assert res.mean_r == again.mean_r
    assert np.array_equal(res.correlations, again.correlations)


@criterion(5, "correlation and p-value match independent oracles",
           budget_seconds=10)
def test_criterion_5_correlation_correctness():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        n = int(rng.integers(3, 80))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        assert abs(pearson(x, y) - direct_pearson(x, y)) < 1e-12
    for n in (5, 30, 499):
        for r in rng.uniform(-0.97, 0.97, size=40):
            assert abs(pearson_pvalue(float(r), n) - pvalue_from_r(float(r), n)) < 1e-8


@criterion(6, "logistic IRLS: closed forms, gradients, recovery",
           budget_seconds=30)
def test_criterion_6_logistic_irls():
    # closed-form intercepts
    for produced in (10, 25, 50, 75, 90):
        y = np.r_[np.ones(produced), np.zeros(100 - produced)]
        fit = LogisticIRLS().fit(np.empty((100, 0)), y)
        assert abs(fit.intercept_ - np.log(produced / (100 - produced))) < 1e-10

    # analytic score vs central differences
    rng = np.random.default_rng(6)
    X = rng.normal(size=(500, 3))
    eta = 0.4 + X @ np.array([0.9, -0.5, 0.2])
    y = (rng.random(500) < expit(eta)).astype(float)
    A = np.column_stack([np.ones(500), X])
    for _ in range(10):
        beta = rng.normal(scale=0.6, size=4)
        analytic = A.T @ (y - expit(A @ beta))
        numeric = central_difference_gradient(
            lambda b: log_likelihood(A @ b, y), beta, h=1e-5
        )
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(analytic), 1.0)
        assert rel.max() < 1e-6

    # known-coefficient recovery at n = 5000
    true = np.array([-0.5, 1.1, -0.8, 0.3])
    X = rng.normal(size=(5000, 3))
    y = (rng.random(5000) < expit(true[0] + X @ true[1:])).astype(float)
    fit = LogisticIRLS().fit(X, y)
    assert fit.converged_
    assert (np.abs(fit.params_ - true) <= 3.0 * fit.bse_).all()


@criterion(7, "mixed-model core: degenerate, quadrature, Monte-Carlo coverage",
           budget_seconds=300)
def test_criterion_7_glmm_core():
    # (a) zero-variance fit equals plain IRLS
    rng = np.random.default_rng(70)
    n_children, n_words = 25, 10
    xw = rng.normal(size=n_words)
    child = np.repeat(np.arange(n_children), n_words)
    word = np.tile(np.arange(n_words), n_children)
    x = xw[word]
    x = (x - x.mean()) / x.std(ddof=1)
    eta = -0.2 + 0.8 * x + 0.5 * rng.normal(size=n_children)[child]
    y = (rng.random(len(eta)) < expit(eta)).astype(float)
    irls = LogisticIRLS().fit(x[:, None], y)
    degenerate = MixedLogisticRegression(fix_sigma=(0.0, 0.0)).fit(
        x[:, None], y, [child, word]
    )
    assert np.abs(degenerate.params_ - irls.params_).max() < 1e-6

    # (b) single factor, 10 groups x 5 obs, vs 15-node adaptive quadrature
    rng = np.random.default_rng(12)
    group = np.repeat(np.arange(10), 5)
    xs = rng.normal(size=50)
    eta = 0.3 + 0.8 * xs + 0.6 * rng.normal(size=10)[group]
    ys = (rng.random(50) < expit(eta)).astype(float)
    laplace = MixedLogisticRegression().fit(xs[:, None], ys, [group])
    beta_oracle, _, _ = agq_fit(
        np.column_stack([np.ones(50), xs]), ys, group, n_nodes=15
    )
    assert np.abs(laplace.params_ - beta_oracle).max() < 1e-3

    # (c) crossed-design coverage: each true beta inside its 95% Wald CI
    # in at least 90% of 50 replications at 200 children x 50 words
    true_beta = np.array([-0.3, 1.0])
    hits = np.zeros(2)
    for rep in range(50):
        rng = np.random.default_rng(1000 + rep)
        nc, nw = 200, 50
        xw = rng.normal(size=nw)
        child = np.repeat(np.arange(nc), nw)
        word = np.tile(np.arange(nw), nc)
        x = xw[word]
        x = (x - x.mean()) / x.std(ddof=1)
        eta = (
            true_beta[0]
            + true_beta[1] * x
            + 0.8 * rng.normal(size=nc)[child]
            + 0.5 * rng.normal(size=nw)[word]
        )
        y = (rng.random(len(eta)) < expit(eta)).astype(float)
        fit = MixedLogisticRegression().fit(x[:, None], y, [child, word])
        lo = fit.params_ - 1.959964 * fit.bse_
        hi = fit.params_ + 1.959964 * fit.bse_
        hits += (lo <= true_beta) & (true_beta <= hi)
    assert (hits >= 45).all(), f"coverage too low: {hits}/50"


@criterion(8, "end-to-end pipeline reproduces the golden outputs byte-for-byte",
           budget_seconds=30)
def test_criterion_8_golden_run(tmp_path):
    cmd = [
        sys.executable, "-m", "prokwo.cli", "report",
        "--corpus-dir", str(FIXTURES / "chat"),
        "--corpus-format", "chat",
        "--lexicon", str(FIXTURES / "lexicon.csv"),
        "--administrations", str(FIXTURES / "administrations.csv"),
        "--shuffles", "200",
        "--seed", "77",
        "--svg",
        "--out", str(tmp_path),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    golden_files = sorted(p.name for p in GOLDEN.iterdir())
    assert golden_files, "golden directory is empty"
    for name in golden_files:
        produced = tmp_path / name
        assert produced.exists(), f"missing output {name}"
        assert produced.read_bytes() == (GOLDEN / name).read_bytes(), (
            f"{name} differs from golden"
        )


@criterion(9, "full-data qualitative agreement (integration scale)")
def test_criterion_9_full_data_qualitative():
    root = os.environ.get("PROKWO_FULL_DATA")
    if not root:
        pytest.skip(
            "needs the full transcript + survey datasets; set PROKWO_FULL_DATA "
            "to a directory with corpus/, lexicon.csv, administrations.csv"
        )
    root = Path(root)
    from prokwo.corpus import load_corpus
    from prokwo.lexicon import (
        compute_mcdip,
        load_administrations_csv,
        load_lexicon_csv,
        production_records,
    )
    from prokwo.predictors import predictor_table
    from prokwo.stats import correlate_with_outcome
    from prokwo.analysis import ModelSpec, build_design, fit_model

    lexicon = load_lexicon_csv(root / "lexicon.csv")
    corpus, _ = load_corpus(root / "corpus", "chat")
    admins = load_administrations_csv(root / "administrations.csv", lexicon)
    mcdip_table = compute_mcdip(admins, lexicon)
    ages = [18, 21, 24, 27, 30]
    table = predictor_table(corpus, lexicon, mcdip_table, ages)

    # the weighted co-occurrence score correlates with outcomes more
    # strongly than every other predictor at every age
    reports = correlate_with_outcome(table, mcdip_table, ages, grouping="all")
    for age in ages:
        cells = {r.var_a: r.r for r in reports if r.age_months == age}
        for other in ("frequency", "lexical_diversity", "document_diversity"):
            assert cells["pro_kwo"] > cells[other], (age, cells)

    # its single-predictor fixed effect is positive, significant, and grows
    # from 18 to 30 months
    records = production_records(admins, lexicon)
    estimates = {}
    for age in ages:
        spec = ModelSpec(age, ("pro_kwo",))
        design = build_design(records, table, spec)
        result, _ = fit_model(design, spec)
        (term,) = [t for t in result.terms if t.term == "pro_kwo"]
        assert term.estimate > 0 and term.p < 0.001, (age, term)
        estimates[age] = term.estimate
    assert estimates[30] > estimates[18], estimates

    # intercorrelation sign pattern: frequency and the diversity measures
    # positively intercorrelated; the weighted score at most weakly so
    from prokwo.stats import correlate_predictors

    inter = correlate_predictors(table, ages, grouping="all")
    for rep in inter:
        if "pro_kwo" not in (rep.var_a, rep.var_b):
            assert rep.r > 0.5, rep
        else:
            assert rep.r < 0.3, rep

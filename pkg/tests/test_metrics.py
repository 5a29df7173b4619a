import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from capkit.metrics import (
    MetricConfig,
    NgramProfile,
    ScoredPair,
    SynonymTable,
    bleu4_corpus,
    cider_corpus,
    evaluate,
    meteor,
    rouge_l,
)
from capkit.metrics.bleu import clipped_counts
from capkit.metrics.meteor import align, meteor_from_counts
from capkit.metrics.rouge import lcs_length
from capkit.text import TokenizedSentence

from oracles import (
    bleu_counts_oracle,
    bleu_oracle,
    brute_lcs,
    cider_oracle,
    meteor_alignment_oracle,
    meteor_oracle,
)


def pair(cand, *refs, vid="v"):
    return ScoredPair.from_text(vid, cand, list(refs))


def tpair(cand, refs, vid="v"):
    return ScoredPair(vid, TokenizedSentence(tuple(cand)), tuple(TokenizedSentence(tuple(r)) for r in refs))


# ---------------------------------------------------------------- n-grams

@given(st.lists(st.sampled_from("abc"), max_size=10))
def test_ngram_profile_totals(tokens):
    prof = NgramProfile.of(tokens)
    for n in range(1, 5):
        assert sum(prof.order(n).values()) == max(0, len(tokens) - n + 1)


# ---------------------------------------------------------------- BLEU

def test_bleu_identity():
    assert bleu4_corpus([pair("a man is riding a bike", "a man is riding a bike")]) == pytest.approx(100.0, abs=1e-9)


def test_bleu_clipping_forces_zero():
    p = tpair(["a", "a", "a"], [["a"]])
    assert clipped_counts(p.cand_tokens, p.ref_tokens, 1) == (1, 3)
    assert bleu4_corpus([p]) == 0.0


def test_bleu_mini_corpus_against_oracle():
    pairs = [
        pair("a man is riding a red bike", "a man rides a bike", "a man is riding a bicycle on the road"),
        pair("the cat sat on the mat", "the cat is sitting on the mat", "a cat sat on a mat"),
        pair("two dogs play", "two dogs are playing in the grass", "dogs play"),
    ]
    expected = bleu_oracle([(p.cand_tokens, p.ref_tokens) for p in pairs])
    assert 0 < expected < 100
    assert bleu4_corpus(pairs) == pytest.approx(expected, abs=1e-9)


def test_bleu_smoothing_only_affects_zero_precisions():
    p = pair("a man walks", "a woman runs")
    assert bleu4_corpus([p]) == 0.0
    smoothed = bleu4_corpus([p], smoothing=True)
    assert smoothed == pytest.approx(bleu_oracle([(p.cand_tokens, p.ref_tokens)], smoothing=True), abs=1e-12)
    assert smoothed > 0


def test_bleu_brevity_penalty_ties_to_shorter_reference():
    # candidate length 4, references of length 3 and 5 -> r = 3, c > r, no penalty
    p = pair("a b c d", "a b c", "a b c d e")
    stats_bp = bleu_oracle([(p.cand_tokens, p.ref_tokens)])
    assert bleu4_corpus([p]) == pytest.approx(stats_bp, abs=1e-12)


def test_bleu_empty_candidate_scores_zero():
    p = ScoredPair("v", TokenizedSentence(()), (TokenizedSentence(("a",)),))
    assert bleu4_corpus([p]) == 0.0


@given(
    st.lists(st.sampled_from("abcd"), min_size=1, max_size=8),
    st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8), min_size=1, max_size=3),
)
def test_bleu_numerator_never_exceeds_denominator(cand, refs):
    for n in range(1, 5):
        hit, tot = clipped_counts(cand, refs, n)
        assert 0 <= hit <= tot
        assert (hit, tot) == bleu_counts_oracle(cand, refs, n)


# ---------------------------------------------------------------- ROUGE-L

def test_rouge_identity_and_disjoint():
    assert rouge_l(pair("a b c", "a b c")) == pytest.approx(100.0)
    assert rouge_l(pair("a b c", "d e f")) == 0.0


@pytest.mark.parametrize("beta", [0.5, 1.0, 1.2, 3.0])
def test_rouge_swapped_middle_is_beta_independent(beta):
    p = tpair(list("abcd"), [list("acbd")])
    assert lcs_length(p.cand_tokens, p.ref_tokens[0]) == brute_lcs(list("abcd"), list("acbd")) == 3
    assert rouge_l(p, beta) == pytest.approx(75.0, abs=1e-12)


@given(st.lists(st.sampled_from("abc"), max_size=8), st.lists(st.sampled_from("abc"), max_size=8))
def test_lcs_matches_brute_force(a, b):
    assert lcs_length(a, b) == brute_lcs(a, b)


@given(
    st.lists(st.sampled_from("abcde"), min_size=1, max_size=6),
    st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=6), min_size=1, max_size=3),
)
def test_duplicate_reference_never_lowers_rouge_or_meteor(cand, refs):
    p = tpair(cand, refs)
    q = tpair(cand, refs + [refs[0]])
    assert rouge_l(q) >= rouge_l(p)
    assert meteor(q) >= meteor(p)


# ---------------------------------------------------------------- METEOR

def test_meteor_identity_four_tokens():
    # m=4, one chunk: penalty 0.5/64
    assert meteor(pair("a man is running", "a man is running")) == pytest.approx(99.21875, abs=1e-12)


def test_meteor_disjoint():
    assert meteor(pair("a b c", "d e f")) == 0.0


def test_meteor_reordered_against_exhaustive_oracle():
    cand, ref = ["the", "cat", "sat"], ["cat", "the", "sat"]
    counts, chunks = meteor_alignment_oracle(cand, ref)
    a = align(cand, ref, use_stem=False)
    assert (a.stage_counts, a.chunks) == (tuple(counts), chunks) == ((3, 0, 0), 3)
    assert meteor(tpair(cand, [ref]), stemmer=False) == pytest.approx(meteor_oracle(cand, [ref]), abs=1e-12)


def test_meteor_duplicate_tokens_choose_fewest_chunks():
    cand = ["a", "dog", "and", "a", "cat"]
    ref = ["a", "cat", "and", "a", "dog"]
    a = align(cand, ref, use_stem=False)
    counts, chunks = meteor_alignment_oracle(cand, ref)
    assert a.chunks == chunks
    assert a.stage_counts == tuple(counts)


def test_meteor_stem_stage():
    a = align(["a", "man", "runs"], ["a", "man", "running"], use_stem=True)
    assert a.stage_counts == (2, 1, 0)
    assert a.chunks == 1
    assert align(["a", "man", "runs"], ["a", "man", "running"], use_stem=False).stage_counts == (2, 0, 0)


def test_meteor_synonym_stage(tmp_path):
    f = tmp_path / "syn.txt"
    f.write_text("bike bicycle cycle\n# comment\nman guy\n", encoding="utf-8")
    table = SynonymTable.load(f)
    p = pair("a guy rides a bike", "a man rides a bicycle")
    assert meteor(p, synonyms=table) > meteor(p)
    a = align(p.cand_tokens, p.ref_tokens[0], True, table)
    assert a.stage_counts == (3, 0, 2)
    assert a.chunks == 1
    counts, chunks = meteor_alignment_oracle(
        list(p.cand_tokens), list(p.ref_tokens[0]), True, [{"bike", "bicycle", "cycle"}, {"man", "guy"}]
    )
    assert (tuple(counts), chunks) == (a.stage_counts, a.chunks)


def test_meteor_penalty_strictly_monotone_in_chunks():
    for m in range(2, 9):
        scores = [meteor_from_counts(m, ch, m + 1, m + 2) for ch in range(1, m + 1)]
        assert all(x > y for x, y in zip(scores, scores[1:]))


def _random_pair(rng, vocab, max_len=8):
    cand = [rng.choice(vocab) for _ in range(rng.randint(1, max_len))]
    refs = [[rng.choice(vocab) for _ in range(rng.randint(1, max_len))] for _ in range(rng.randint(1, 3))]
    return cand, refs


def test_meteor_random_pairs_against_oracle():
    rng = random.Random(11)
    vocab = [f"w{i}" for i in range(6)]
    for _ in range(60):
        cand, refs = _random_pair(rng, vocab)
        for ref in refs:
            a = align(cand, ref, use_stem=False)
            counts, chunks = meteor_alignment_oracle(cand, ref)
            assert (a.stage_counts, a.chunks) == (tuple(counts), chunks)
        assert meteor(tpair(cand, refs), stemmer=False) == pytest.approx(meteor_oracle(cand, refs), abs=1e-9)


def test_meteor_stemmed_random_pairs_against_oracle():
    rng = random.Random(5)
    vocab = ["run", "runs", "running", "cat", "cats", "play", "played", "a"]
    for _ in range(40):
        cand, refs = _random_pair(rng, vocab, max_len=7)
        assert meteor(tpair(cand, refs), stemmer=True) == pytest.approx(
            meteor_oracle(cand, refs, use_stem=True), abs=1e-9
        )


# ---------------------------------------------------------------- CIDEr

def test_cider_candidate_equals_sole_reference():
    pairs = [
        pair("a man is playing guitar", "a man is playing guitar", vid="A"),
        pair("one cat eats some fish", "two dogs run in parks", vid="B"),
    ]
    res = cider_corpus(pairs)
    assert res.per_video["A"] == pytest.approx(1000.0, abs=1e-6)
    assert res.per_video["B"] == 0.0


def test_cider_single_video_is_degenerate_zero():
    res = cider_corpus([pair("a man is playing guitar", "a man is playing guitar")])
    assert res.per_video["v"] == 0.0
    assert res.mean == 0.0


def test_cider_toy_corpus_against_dense_oracle():
    pairs = [
        pair("a man is slicing a tomato", "a man slices a tomato", "someone is cutting a tomato", vid="v1"),
        pair("a woman is slicing an onion", "a woman cuts an onion", "a lady is slicing onions", vid="v2"),
        pair("a man plays a guitar", "a man is playing a guitar", "a guy strums guitar", vid="v3"),
    ]
    got = cider_corpus(pairs)
    want = cider_oracle([(p.video_id, p.cand_tokens, p.ref_tokens) for p in pairs])
    for vid, val in want.items():
        assert got.per_video[vid] == pytest.approx(val, abs=1e-9)
    assert got.mean == pytest.approx(sum(want.values()) / 3, abs=1e-9)


def test_cider_requires_unique_video_ids():
    with pytest.raises(ValueError):
        cider_corpus([pair("a b", "a b"), pair("c d", "c d")])


@settings(max_examples=50)
@given(
    st.lists(
        st.tuples(
            st.lists(st.sampled_from("abcdef"), min_size=1, max_size=7),
            st.lists(st.sampled_from("abcdef"), min_size=1, max_size=7),
        ),
        min_size=2,
        max_size=4,
    )
)
def test_cider_range_and_cosine_symmetry(rows):
    pairs = [tpair(c, [r], vid=str(i)) for i, (c, r) in enumerate(rows)]
    swapped = [tpair(r, [c], vid=str(i)) for i, (c, r) in enumerate(rows)]
    a = cider_corpus(pairs)
    for v in a.per_video.values():
        assert -1e-9 <= v <= 1000 + 1e-9
    # swapping candidate and sole reference only changes which side the
    # idf of candidate-only n-grams lands on, so compare under equal df
    from capkit.metrics.cider import cosine, document_frequency, tfidf_vectors

    df = document_frequency(pairs)
    for p, q in zip(pairs, swapped):
        u = tfidf_vectors(p.cand_tokens, df, len(pairs))
        w = tfidf_vectors(q.cand_tokens, df, len(pairs))
        for n in range(4):
            assert cosine(u[n], w[n]) == pytest.approx(cosine(w[n], u[n]), abs=1e-15)


# ---------------------------------------------------------------- evaluate

def _identity_corpus():
    return [
        pair("a man is playing a guitar", "a man is playing a guitar", vid="v1"),
        pair("the cat sleeps on the sofa", "the cat sleeps on the sofa", vid="v2"),
        pair("two kids swim in pools", "two kids swim in pools", vid="v3"),
    ]


def test_evaluate_identity():
    r = evaluate(_identity_corpus())
    assert r.bleu4 == pytest.approx(100.0, abs=1e-9)
    assert r.rouge_l == pytest.approx(100.0, abs=1e-9)
    assert r.meteor >= 99.0
    assert r.cider == pytest.approx(1000.0, abs=1e-6)


def test_evaluate_disjoint():
    pairs = [pair("x y z w", "a b c d", vid="1"), pair("p q r s", "e f g h", vid="2")]
    r = evaluate(pairs)
    assert (r.bleu4, r.rouge_l, r.meteor, r.cider) == (0.0, 0.0, 0.0, 0.0)


def test_evaluate_is_composition_and_permutation_invariant():
    pairs = [
        pair("a man is slicing a tomato", "a man slices a tomato", "someone is cutting a tomato", vid="v1"),
        pair("a woman is slicing an onion", "a woman cuts an onion", vid="v2"),
        pair("a man plays a guitar", "a man is playing a guitar", "a guy strums guitar", vid="v3"),
    ]
    cfg = MetricConfig()
    r = evaluate(pairs, cfg)
    assert r.bleu4 == bleu4_corpus(pairs)
    assert r.rouge_l == pytest.approx(sum(rouge_l(p) for p in pairs) / 3, abs=1e-12)
    assert r.meteor == pytest.approx(sum(meteor(p) for p in pairs) / 3, abs=1e-12)
    assert r.cider == cider_corpus(pairs).mean
    for perm in ([2, 0, 1], [1, 2, 0], [2, 1, 0]):
        assert evaluate([pairs[i] for i in perm], cfg) == r


def test_report_bounds():
    r = evaluate(_identity_corpus())
    assert 0 <= r.bleu4 <= 100 and 0 <= r.rouge_l <= 100 and 0 <= r.meteor <= 100
    assert 0 <= r.cider <= 1000
    assert r.formatted().startswith("bleu4=100.0")
    assert not math.isnan(r.cider)

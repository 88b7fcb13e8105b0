"""Smoke tests for the python bindings: one end-to-end pass over the main
operations, plus the arithmetic identities that must hold everywhere."""

import math

import numpy as np
import pytest

import knnmt


@pytest.fixture(scope="module")
def world():
    cfg = knnmt.WorldConfig()
    cfg.dim = 16
    cfg.vocab_size = 16
    cfg.seed = 42
    cfg.languages = [
        knnmt.LanguageSpec(knnmt.LanguageTag("aa", "g1"), 0.04),
        knnmt.LanguageSpec(knnmt.LanguageTag("ab", "g1"), 0.07),
        knnmt.LanguageSpec(knnmt.LanguageTag("ba", "g2"), 0.04),
    ]
    return knnmt.gen_world(cfg)


def build_store(world, lang, n=60, offset=0):
    provider = knnmt.ToyProvider(world, lang)
    corpus = knnmt.gen_corpus(world, lang, n, 6, offset)
    store = knnmt.Datastore(16, knnmt.LanguageTag("en"))
    knnmt.build_from_corpus(corpus, provider, store)
    store.seal()
    return store, corpus


def test_world_is_deterministic(world):
    again = knnmt.gen_world(world.config)
    assert again.content_hash() == world.content_hash()


def test_corpora_are_multiway(world):
    a = knnmt.gen_corpus(world, "aa", 10, 6, 0)
    b = knnmt.gen_corpus(world, "ba", 10, 6, 0)
    for sa, sb in zip(a.sentences, b.sentences):
        assert sa.tokens == sb.tokens


def test_build_merge_and_stats(world):
    store_a, corpus_a = build_store(world, "aa")
    store_b, _ = build_store(world, "ab")
    assert len(store_a) == corpus_a.total_tokens()

    merged = knnmt.merge([store_a, store_b])
    assert len(merged) == len(store_a) + len(store_b)
    stats = merged.stats()
    assert sum(stats.per_origin) == stats.count
    assert stats.per_origin == [len(store_a), len(store_b)]

    keys = merged.keys()
    assert keys.shape == (len(merged), 16)
    assert keys.dtype == np.float32


def test_save_load_roundtrip(world, tmp_path):
    store, _ = build_store(world, "aa")
    path = str(tmp_path / "store.kds")
    knnmt.save(store, path)
    loaded = knnmt.load(path)
    assert len(loaded) == len(store)
    assert np.array_equal(loaded.keys(), store.keys())


def test_search_and_distributions(world):
    store, corpus = build_store(world, "aa")
    index = knnmt.build_flat(store)
    query = store.keys()[5]
    hits = index.search(query, 4)
    assert hits[0].entry_index == 5
    assert hits[0].distance == 0.0

    probs = knnmt.knn_distribution(hits, 10.0, 16)
    assert abs(sum(probs) - 1.0) < 1e-9
    base = [1.0 / 16] * 16
    mixed = knnmt.interpolate(probs, base, 0.5)
    assert abs(sum(mixed) - 1.0) < 1e-9
    assert knnmt.interpolate(probs, base, 0.0) == pytest.approx(base)


def test_ivf_recall(world):
    store, _ = build_store(world, "aa", n=400)
    flat = knnmt.build_flat(store)
    ivf = knnmt.build_ivf(store, knnmt.IndexParams("ivf", nlist=16, nprobe=16, seed=1))
    queries = [store.keys()[i] for i in range(20)]
    assert knnmt.recall_at_k(ivf, flat, queries, 8) == 1.0


def test_fit_and_apply_map(world):
    store_a, _ = build_store(world, "aa")
    store_b, _ = build_store(world, "ab")
    pairs = knnmt.extract_aligned_pairs(store_a, store_b)
    assert len(pairs) == len(store_a)
    fitted = knnmt.fit_linear_map(pairs, 1e-8)
    assert fitted.residual < 0.05

    eye = knnmt.LinearMap.identity(16)
    v = store_a.keys()[0]
    assert knnmt.apply_map(eye, v) == pytest.approx(list(v))

    remapped = knnmt.remap_store(store_a, eye)
    assert np.array_equal(remapped.keys(), store_a.keys())


def test_metrics_and_decode(world):
    store, corpus = build_store(world, "aa")
    index = knnmt.build_flat(store)
    provider = knnmt.ToyProvider(world, "aa")
    test = knnmt.gen_corpus(world, "aa", 20, 6, 900000)

    base = knnmt.token_metrics(provider, None, None, knnmt.RetrievalParams(8, 0.0, 0.2), test)
    aug = knnmt.token_metrics(provider, index, None, knnmt.RetrievalParams(8, 0.5, 0.2), test)
    assert 0.0 < base.accuracy < 1.0
    assert aug.accuracy > base.accuracy

    out = knnmt.decode(provider, index, None, knnmt.RetrievalParams(8, 0.5, 0.2),
                       knnmt.DecodeParams(), test.sentences[0])
    assert len(out) == len(test.sentences[0].tokens)

    assert knnmt.corpus_bleu([out], [test.sentences[0].tokens]) <= 100.0
    assert knnmt.corpus_bleu([[1, 2, 3]], [[1, 2, 3]]) == pytest.approx(100.0)


def test_spearman_and_fixtures():
    rho = knnmt.size_quality_correlation([(1, 2), (2, 5), (3, 9)])
    assert rho == pytest.approx(1.0)

    table = knnmt.fixture_table()
    assert len(table) == 51
    total = sum(row["entries"] for row in table)
    assert total == pytest.approx(125.08e6)
    assert knnmt.fixture_p_uni("no") * 100 == pytest.approx(0.33, abs=0.01)


def test_error_mapping(world):
    with pytest.raises(knnmt.KnnMtError):
        knnmt.Datastore(0, knnmt.LanguageTag("en"))
    store, _ = build_store(world, "aa")
    with pytest.raises(knnmt.KnnMtError):
        store.append(np.zeros(16, dtype=np.float32), 1)  # sealed

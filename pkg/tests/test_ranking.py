import math
import random

import pytest

from storygraph.entities import Entity, EntityMention
from storygraph.ranking import rank_entities, score_entity
from storygraph.textindex import Bm25Params, bm25_term, build_index

from conftest import make_doc


def entity(surface: str, label: str, doc_ids, mentions=1) -> Entity:
    key = (surface.casefold(), label)
    ms = [
        EntityMention(surface, label, doc_id, (0, 1), (0, len(surface)))
        for doc_id in sorted(doc_ids)
        for _ in range(mentions)
    ]
    return Entity(key=key, display=surface, label=label, mentions=ms, doc_ids=set(doc_ids))


class TestScoreEntity:
    def test_absent_terms_score_zero(self, tiny_corpus):
        index = build_index(tiny_corpus)
        assert score_entity(entity("zebra", "MISC", set()), index) == 0.0

    def test_sum_over_containing_docs(self, tiny_corpus):
        index = build_index(tiny_corpus)
        expected = bm25_term("acme", "d1", index) + bm25_term("acme", "d2", index)
        got = score_entity(entity("acme", "ORG", {"d1", "d2"}), index)
        assert got == pytest.approx(expected, abs=1e-12)
        # d1 and d2 have equal length, so both halves match the fixture value.
        assert got == pytest.approx(2 * 0.4471, abs=1e-4)

    def test_identical_statistics_identical_scores(self):
        docs = [
            make_doc("d1", "acme watches beta"),
            make_doc("d2", "beta watches acme"),
        ]
        index = build_index(docs)
        a = score_entity(entity("acme", "ORG", {"d1", "d2"}), index)
        b = score_entity(entity("beta", "ORG", {"d1", "d2"}), index)
        assert a == b

    def test_multi_token_surface(self, tiny_corpus):
        index = build_index(tiny_corpus)
        expected = bm25_term("acme", "d1", index) + bm25_term("buys", "d1", index)
        assert score_entity(entity("acme buys", "MISC", {"d1"}), index) == pytest.approx(expected)

    def test_aggregation_max(self, tiny_corpus):
        index = build_index(tiny_corpus)
        per_doc = [bm25_term("beta", "d1", index), bm25_term("beta", "d3", index)]
        got = score_entity(entity("beta", "ORG", {"d1", "d3"}), index, aggregation="max")
        assert got == pytest.approx(max(per_doc))

    def test_aggregation_mentions(self, tiny_corpus):
        index = build_index(tiny_corpus)
        e = entity("beta", "ORG", {"d1", "d3"}, mentions=2)
        assert score_entity(e, index, aggregation="mentions") == 4.0

    def test_unknown_aggregation(self, tiny_corpus):
        with pytest.raises(ValueError):
            score_entity(entity("a", "ORG", set()), build_index(tiny_corpus), aggregation="median")

    def test_empty_index_rejected(self):
        with pytest.raises(ValueError):
            score_entity(entity("acme", "ORG", set()), build_index([]))


class TestRankEntities:
    def _corpus_and_entities(self, seed=0, n_docs=12, n_entities=5):
        rng = random.Random(seed)
        vocab = [f"name{i}" for i in range(n_entities)] + ["filler", "words", "here"]
        docs = [
            make_doc(f"d{i:02d}", " ".join(rng.choice(vocab) for _ in range(rng.randint(3, 20))))
            for i in range(n_docs)
        ]
        index = build_index(docs)
        entities = []
        for i in range(n_entities):
            surface = f"name{i}"
            containing = {d.id for d in docs if surface in d.body.split()}
            if containing:
                entities.append(entity(surface, "ORG", containing))
        return index, entities

    def test_empty_input(self, tiny_corpus):
        ranked = rank_entities([], build_index(tiny_corpus), k=3)
        assert ranked.entries == []
        assert ranked.k == 3

    def test_top_three_of_five_matches_brute_force(self):
        index, entities = self._corpus_and_entities()
        ranked = rank_entities(entities, index, k=3)
        brute = sorted(
            ((e.key, score_entity(e, index)) for e in entities),
            key=lambda item: (-item[1], item[0]),
        )
        assert [(e.key, s) for e, s in ranked.entries] == [
            (key, pytest.approx(s)) for key, s in brute[:3]
        ]

    def test_scores_populated_on_returned_entities(self):
        index, entities = self._corpus_and_entities()
        ranked = rank_entities(entities, index, k=10)
        for e, s in ranked.entries:
            assert e.score == s > 0.0

    def test_k_larger_than_entity_count(self):
        index, entities = self._corpus_and_entities()
        ranked = rank_entities(entities, index, k=100)
        assert len(ranked.entries) == len(entities)

    def test_zero_score_entities_excluded(self, tiny_corpus):
        index = build_index(tiny_corpus)
        ranked = rank_entities([entity("zebra", "MISC", set())], index, k=5)
        assert ranked.entries == []

    def test_prefix_property(self):
        index, entities = self._corpus_and_entities(seed=3)
        small = rank_entities(entities, index, k=2)
        large = rank_entities(entities, index, k=5)
        assert [(e.key, s) for e, s in small.entries] == [
            (e.key, s) for e, s in large.entries[:2]
        ]

    def test_permutation_invariance(self):
        index, entities = self._corpus_and_entities(seed=5)
        rng = random.Random(9)
        shuffled = list(entities)
        rng.shuffle(shuffled)
        a = rank_entities(entities, index, k=10)
        b = rank_entities(shuffled, index, k=10)
        assert [(e.key, s) for e, s in a.entries] == [(e.key, s) for e, s in b.entries]

    def test_order_preserved_under_corpus_duplication(self):
        # Doubling the corpus with fresh ids preserves every entity's relative
        # statistics, so the ranked order must not change.
        docs = [
            make_doc("d1", "acme acme beta pad"),
            make_doc("d2", "beta gamma pad pad"),
            make_doc("d3", "gamma pad pad pad"),
        ]
        doubled = docs + [make_doc(d.id + "-copy", d.body) for d in docs]
        entities = [
            entity("acme", "ORG", {"d1"}),
            entity("beta", "ORG", {"d1", "d2"}),
            entity("gamma", "ORG", {"d2", "d3"}),
        ]
        entities_doubled = [
            entity("acme", "ORG", {"d1", "d1-copy"}),
            entity("beta", "ORG", {"d1", "d2", "d1-copy", "d2-copy"}),
            entity("gamma", "ORG", {"d2", "d3", "d2-copy", "d3-copy"}),
        ]
        order1 = [e.key for e, _ in rank_entities(entities, build_index(docs), k=5).entries]
        order2 = [
            e.key for e, _ in rank_entities(entities_doubled, build_index(doubled), k=5).entries
        ]
        assert order1 == order2

    def test_oracle_equivalence_on_random_corpora(self):
        rng = random.Random(123)
        for trial in range(30):
            index, entities = self._corpus_and_entities(seed=trial, n_docs=rng.randint(1, 20))
            ranked = rank_entities(entities, index, k=4)
            params = Bm25Params()
            for e, s in ranked.entries:
                expected = sum(
                    bm25_term(term, doc_id, index, params)
                    for doc_id in sorted(e.doc_ids)
                    for term in [e.key[0]]
                )
                assert s == pytest.approx(expected, abs=1e-9)

    def test_bad_k(self, tiny_corpus):
        with pytest.raises(ValueError):
            rank_entities([], build_index(tiny_corpus), k=0)

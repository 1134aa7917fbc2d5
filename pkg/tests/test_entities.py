import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from storygraph.documents import AnnotatedDocument, Document
from storygraph.entities import (
    ENTITY_LABELS,
    VALID_TAGS,
    EntityMention,
    ExtractorError,
    HttpExtractor,
    StdioExtractor,
    canonicalize,
    decode_mentions,
    evaluate,
    external_extract,
    is_bio_valid,
    label_tokens,
    load_gazetteer,
    mentions_to_tags,
    repair_bio,
)
from storygraph.textindex import tokenize

GAZ = {
    ("acme", "corp"): "ORG",
    ("jane", "doe"): "PER",
    ("london",): "LOC",
}


def _doc(body: str, doc_id: str = "d1") -> Document:
    return Document(doc_id, "fixture", "", body)


class TestLabelTokens:
    def test_gazetteer_pass(self):
        doc = _doc("Acme Corp hired Jane Doe in London")
        tags = label_tokens(doc, tokenize(doc.body), GAZ)
        assert tags == ["B-ORG", "I-ORG", "O", "B-PER", "I-PER", "O", "B-LOC"]

    def test_capitalization_fallback(self):
        doc = _doc("Acme Corp hired Jane Doe in London")
        tags = label_tokens(doc, tokenize(doc.body), {})
        assert tags == ["B-MISC", "I-MISC", "O", "B-MISC", "I-MISC", "O", "B-MISC"]

    def test_all_lowercase_all_outside(self):
        doc = _doc("nothing capitalized happens in this text")
        tags = label_tokens(doc, tokenize(doc.body), {})
        assert tags == ["O"] * 6

    def test_lone_sentence_opener_dropped(self):
        doc = _doc("The deal closed. Yesterday Acme Corp won.")
        tags = label_tokens(doc, tokenize(doc.body), GAZ)
        # "The" and "Yesterday" are lone sentence-initial capitals; gazetteer wins for Acme Corp.
        assert tags == ["O", "O", "O", "O", "B-ORG", "I-ORG", "O"]

    def test_sentence_initial_run_of_two_kept(self):
        doc = _doc("Acme Holdings fell sharply.")
        tags = label_tokens(doc, tokenize(doc.body), {})
        assert tags == ["B-MISC", "I-MISC", "O", "O"]

    def test_run_does_not_cross_sentence_boundary(self):
        doc = _doc("they met Ada. Brown arrived later.")
        tags = label_tokens(doc, tokenize(doc.body), {})
        # "Ada" ends a sentence; "Brown" starts the next one alone: two
        # singleton runs, only the non-sentence-initial one survives.
        assert tags == ["O", "O", "B-MISC", "O", "O", "O"]

    def test_longest_gazetteer_match_wins(self):
        gaz = {("acme",): "ORG", ("acme", "corp"): "ORG", ("acme", "corp", "europe"): "ORG"}
        doc = _doc("acme corp europe expanded")
        assert label_tokens(doc, tokenize(doc.body), gaz) == ["B-ORG", "I-ORG", "I-ORG", "O"]

    def test_token_mismatch_rejected(self):
        doc = _doc("some text")
        other = tokenize("different words")
        with pytest.raises(ValueError, match="align"):
            label_tokens(doc, other, {})

    @given(st.text(max_size=120))
    @settings(max_examples=150, deadline=None)
    def test_output_always_valid_bio_of_same_length(self, body):
        doc = _doc(body)
        tokens = tokenize(body)
        tags = label_tokens(doc, tokens, GAZ)
        assert len(tags) == len(tokens)
        assert is_bio_valid(tags)


class TestDecodeMentions:
    def test_offsets_from_fixture(self):
        doc = _doc("Acme Corp hired Jane Doe in London")
        tokens = tokenize(doc.body)
        mentions = decode_mentions(label_tokens(doc, tokens, GAZ), tokens, doc)
        assert [(m.surface, m.label, m.char_span) for m in mentions] == [
            ("Acme Corp", "ORG", (0, 9)),
            ("Jane Doe", "PER", (16, 24)),
            ("London", "LOC", (28, 34)),
        ]
        assert [m.token_span for m in mentions] == [(0, 2), (3, 5), (6, 7)]

    def test_all_outside(self):
        doc = _doc("one two three")
        assert decode_mentions(["O", "O", "O"], tokenize(doc.body), doc) == []

    def test_orphan_inside_repaired(self):
        doc = _doc("Jane spoke")
        mentions = decode_mentions(["I-PER", "O"], tokenize(doc.body), doc)
        assert [(m.surface, m.label, m.token_span) for m in mentions] == [("Jane", "PER", (0, 1))]

    def test_length_mismatch_rejected(self):
        doc = _doc("one two")
        with pytest.raises(ValueError, match="tags for"):
            decode_mentions(["O"], tokenize(doc.body), doc)


def _tag_sequences():
    tag = st.sampled_from(sorted(VALID_TAGS))
    return st.lists(tag, max_size=30)


class TestBioRoundTrip:
    @given(_tag_sequences())
    @settings(max_examples=300, deadline=None)
    def test_repair_always_produces_valid_bio(self, tags):
        assert is_bio_valid(repair_bio(tags))

    @given(_tag_sequences())
    @settings(max_examples=300, deadline=None)
    def test_decode_then_retag_reproduces_repaired_tags(self, tags):
        body = " ".join(f"tok{i}" for i in range(len(tags)))
        doc = _doc(body)
        tokens = tokenize(body)
        repaired = repair_bio(tags)
        mentions = decode_mentions(list(tags), tokens, doc)
        assert mentions_to_tags(mentions, len(tokens)) == repaired


class TestCanonicalize:
    def _mention(self, surface, label, doc_id, start=0):
        return EntityMention(surface, label, doc_id, (start, start + 1), (0, len(surface)))

    def test_casefold_grouping_and_display(self):
        mentions = [
            self._mention("Acme", "ORG", "d1"),
            self._mention("ACME", "ORG", "d2"),
        ]
        (entity,) = canonicalize(mentions)
        assert entity.key == ("acme", "ORG")
        assert entity.doc_ids == {"d1", "d2"}
        assert entity.display == "Acme"  # tie on counts; first seen wins

    def test_label_is_part_of_key(self):
        mentions = [self._mention("Jordan", "PER", "d1"), self._mention("Jordan", "LOC", "d2")]
        entities = canonicalize(mentions)
        assert len(entities) == 2
        assert {e.key for e in entities} == {("jordan", "PER"), ("jordan", "LOC")}

    def test_empty(self):
        assert canonicalize([]) == []

    def test_modal_display(self):
        mentions = [
            self._mention("acme", "ORG", "d1"),
            self._mention("Acme", "ORG", "d2"),
            self._mention("Acme", "ORG", "d3"),
        ]
        (entity,) = canonicalize(mentions)
        assert entity.display == "Acme"

    def test_idempotent_and_order_invariant(self):
        mentions = [
            self._mention("Acme", "ORG", "d1"),
            self._mention("Beta", "ORG", "d2"),
            self._mention("ACME", "ORG", "d3"),
        ]
        forward = canonicalize(mentions)
        backward = canonicalize(list(reversed(mentions)))
        assert [e.key for e in forward] == [e.key for e in backward]
        assert [e.doc_ids for e in forward] == [e.doc_ids for e in backward]


class TestEvaluate:
    def _predicted(self, doc_id, spans):
        return [
            EntityMention("x", label, doc_id, (0, 1), (s, e)) for s, e, label in spans
        ]

    def test_identity_is_perfect(self):
        gold = [AnnotatedDocument("Acme hired Jane", [(0, 4, "ORG"), (11, 15, "PER")])]
        predicted = [self._predicted("d1", gold[0].labels)]
        result = evaluate(gold, predicted)
        assert (result.precision, result.recall, result.f1) == (1.0, 1.0, 1.0)

    def test_half_match(self):
        gold = [AnnotatedDocument("Acme hired Jane", [(0, 4, "ORG"), (11, 15, "PER")])]
        predicted = [self._predicted("d1", [(0, 4, "ORG"), (11, 14, "PER")])]
        result = evaluate(gold, predicted)
        assert (result.precision, result.recall, result.f1) == (0.5, 0.5, 0.5)
        assert (result.tp, result.fp, result.fn) == (1, 1, 1)

    def test_empty_predictions_vacuous_precision(self):
        gold = [AnnotatedDocument("Acme hired Jane", [(0, 4, "ORG")])]
        result = evaluate(gold, [[]])
        assert result.precision == 1.0
        assert result.recall == 0.0
        assert result.f1 == 0.0

    def test_subset_predictions_keep_precision_one(self):
        gold = [AnnotatedDocument("Acme hired Jane", [(0, 4, "ORG"), (11, 15, "PER")])]
        predicted = [self._predicted("d1", [(0, 4, "ORG")])]
        result = evaluate(gold, predicted)
        assert result.precision == 1.0
        assert result.recall == 0.5

    def test_per_label_breakdown(self):
        gold = [AnnotatedDocument("Acme hired Jane", [(0, 4, "ORG"), (11, 15, "PER")])]
        predicted = [self._predicted("d1", [(0, 4, "ORG"), (11, 14, "PER")])]
        result = evaluate(gold, predicted)
        assert result.per_label["ORG"].f1 == 1.0
        assert result.per_label["PER"].f1 == 0.0
        assert set(result.per_label) == set(ENTITY_LABELS)

    def test_document_count_mismatch(self):
        with pytest.raises(ValueError, match="different document sets"):
            evaluate([AnnotatedDocument("x", [])], [])

    def test_mixed_doc_ids_rejected(self):
        gold = [AnnotatedDocument("Acme hired Jane", [])]
        predicted = [
            self._predicted("d1", [(0, 4, "ORG")]) + self._predicted("d2", [(11, 15, "PER")])
        ]
        with pytest.raises(ValueError, match="document id mismatch"):
            evaluate(gold, predicted)


class TestGazetteerFile:
    def test_load(self, fixture_dir):
        gaz = load_gazetteer(fixture_dir / "gazetteer.tsv")
        assert gaz[("acme", "corp")] == "ORG"
        assert gaz[("london",)] == "LOC"

    def test_bad_label(self, tmp_path):
        path = tmp_path / "gaz.tsv"
        path.write_text("acme corp\tCOMPANY\n", encoding="utf-8")
        with pytest.raises(ValueError, match="unknown label"):
            load_gazetteer(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_gazetteer(tmp_path / "gaz.tsv")


class _StubHandler(BaseHTTPRequestHandler):
    behavior = "echo_o"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        request = json.loads(self.rfile.read(length))
        n = len(request["tokens"])
        if self.behavior == "echo_o":
            tags = ["O"] * n
        elif self.behavior == "wrong_length":
            tags = ["O"] * (n + 3)
        else:
            tags = ["B-PER"] + ["O"] * (n - 1) if n else []
        body = json.dumps({"tags": tags}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


ECHO_O_SCRIPT = """
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"tags": ["O"] * len(req["tokens"])}), flush=True)
"""


class TestExternalExtract:
    def test_http_echo_stub_passthrough(self, stub_server):
        _StubHandler.behavior = "echo_o"
        doc = _doc("Acme Corp hired Jane Doe")
        tokens = tokenize(doc.body)
        tags = external_extract(doc, tokens, HttpExtractor(stub_server))
        assert tags == ["O"] * len(tokens)

    def test_wrong_length_falls_back_to_baseline(self, stub_server):
        _StubHandler.behavior = "wrong_length"
        doc = _doc("Acme Corp hired Jane Doe in London")
        tokens = tokenize(doc.body)
        tags = external_extract(doc, tokens, HttpExtractor(stub_server), GAZ, fallback=True)
        assert tags == label_tokens(doc, tokens, GAZ)

    def test_wrong_length_raises_without_fallback(self, stub_server):
        _StubHandler.behavior = "wrong_length"
        doc = _doc("Acme Corp hired Jane Doe")
        tokens = tokenize(doc.body)
        with pytest.raises(ExtractorError, match="length mismatch"):
            external_extract(doc, tokens, HttpExtractor(stub_server), fallback=False)

    def test_unreachable_endpoint_falls_back(self):
        doc = _doc("Acme Corp hired Jane Doe in London")
        tokens = tokenize(doc.body)
        dead = HttpExtractor("http://127.0.0.1:1", timeout=0.2)
        tags = external_extract(doc, tokens, dead, GAZ, fallback=True)
        assert tags == label_tokens(doc, tokens, GAZ)

    def test_invalid_tags_repaired(self, stub_server):
        _StubHandler.behavior = "b_per"
        doc = _doc("jane spoke quietly")
        tokens = tokenize(doc.body)
        tags = external_extract(doc, tokens, HttpExtractor(stub_server))
        assert is_bio_valid(tags)

    def test_stdio_pipe(self):
        doc = _doc("Acme Corp hired Jane Doe")
        tokens = tokenize(doc.body)
        extractor = StdioExtractor([sys.executable, "-u", "-c", ECHO_O_SCRIPT])
        try:
            assert external_extract(doc, tokens, extractor) == ["O"] * len(tokens)
        finally:
            extractor.close()

    def test_stdio_timeout_falls_back(self):
        doc = _doc("Acme Corp hired Jane Doe in London")
        tokens = tokenize(doc.body)
        silent = StdioExtractor(
            [sys.executable, "-u", "-c", "import time\ntime.sleep(60)"], timeout=0.3
        )
        try:
            with pytest.raises(ExtractorError, match="no response"):
                external_extract(doc, tokens, silent, fallback=False)
            tags = external_extract(doc, tokens, silent, GAZ, fallback=True)
            assert tags == label_tokens(doc, tokens, GAZ)
        finally:
            silent.close()

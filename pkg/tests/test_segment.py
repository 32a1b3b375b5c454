import json

import pytest

from gcsc_eval import (
    Corpus,
    EvalSample,
    Lexicon,
    Segmentation,
    SegmentationError,
    load_lexicon,
    load_segmentations,
    project_to_source,
    segment_reference,
)


class TestSegmentReference:
    def test_forward_maximum_matching(self):
        seg = segment_reference("和友人吃饭", Lexicon(["友人", "吃饭"]))
        assert seg.boundaries == (0, 1, 3, 5)

    def test_empty_lexicon_all_singletons(self):
        assert segment_reference("abc", Lexicon(())).boundaries == (0, 1, 2, 3)

    def test_empty_sentence(self):
        assert segment_reference("", Lexicon(())).boundaries == (0,)

    def test_longest_match_wins(self):
        seg = segment_reference("abcd", Lexicon(["ab", "abc"]))
        assert seg.boundaries == (0, 3, 4)

    def test_deterministic(self):
        lex = Lexicon(["友人", "吃饭", "朋友"])
        assert segment_reference("和友人吃饭", lex).boundaries == segment_reference(
            "和友人吃饭", lex
        ).boundaries

    def test_words_concat_reproduces_sentence(self):
        sentence = "和友人吃饭，很开心"
        seg = segment_reference(sentence, Lexicon(["友人", "吃饭", "开心"]))
        assert "".join(seg.words(sentence)) == sentence


class TestSegmentationInvariants:
    def test_must_start_at_zero(self):
        with pytest.raises(SegmentationError, match="start at 0"):
            Segmentation((1, 2))

    def test_strictly_increasing(self):
        with pytest.raises(SegmentationError, match="strictly increasing"):
            Segmentation((0, 3, 1))

    def test_validate_for_length(self):
        with pytest.raises(SegmentationError, match="length"):
            Segmentation((0, 2)).validate_for("abc")

    def test_spans_and_words(self):
        seg = Segmentation((0, 1, 3, 5))
        assert seg.spans() == [(0, 1), (1, 3), (3, 5)]
        assert seg.words("和友人吃饭") == ["和", "友人", "吃饭"]


def test_project_to_source_is_identity():
    for boundaries in [(0, 1, 3, 5), (0,), (0, 2)]:
        assert project_to_source(Segmentation(boundaries)).boundaries == boundaries


class TestLexicon:
    def test_empty_entry_rejected(self):
        with pytest.raises(SegmentationError, match="empty"):
            Lexicon([""])

    def test_load(self, tmp_path):
        path = tmp_path / "lex.txt"
        path.write_text("友人\n吃饭\n\n", encoding="utf-8")
        lex = load_lexicon(path)
        assert "友人" in lex and len(lex) == 2


class TestLoadSegmentations:
    @pytest.fixture
    def corpus(self):
        return Corpus((EvalSample("1", "和友人吃饭", "和友人吃饭", "和朋友吃饭"),))

    def write(self, tmp_path, records):
        path = tmp_path / "seg.jsonl"
        path.write_text(
            "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n",
            encoding="utf-8",
        )
        return path

    def test_ok(self, tmp_path, corpus):
        path = self.write(tmp_path, [{"id": "1", "boundaries": [0, 1, 3, 5]}])
        segs = load_segmentations(path, corpus)
        assert segs["1"].boundaries == (0, 1, 3, 5)

    def test_unknown_id(self, tmp_path, corpus):
        path = self.write(tmp_path, [{"id": "9", "boundaries": [0, 5]}])
        with pytest.raises(SegmentationError, match="unknown sample id"):
            load_segmentations(path, corpus)

    def test_not_strictly_increasing(self, tmp_path, corpus):
        path = self.write(tmp_path, [{"id": "1", "boundaries": [0, 3, 1]}])
        with pytest.raises(SegmentationError, match="strictly increasing"):
            load_segmentations(path, corpus)

    def test_last_boundary_mismatch(self, tmp_path, corpus):
        path = self.write(tmp_path, [{"id": "1", "boundaries": [0, 1, 3]}])
        with pytest.raises(SegmentationError, match="length"):
            load_segmentations(path, corpus)

    def test_duplicate_id(self, tmp_path, corpus):
        records = [{"id": "1", "boundaries": [0, 5]}, {"id": "1", "boundaries": [0, 5]}]
        path = self.write(tmp_path, records)
        with pytest.raises(SegmentationError, match="duplicate"):
            load_segmentations(path, corpus)

    def test_bad_json(self, tmp_path, corpus):
        path = tmp_path / "seg.jsonl"
        path.write_text("{bad\n", encoding="utf-8")
        with pytest.raises(SegmentationError, match="invalid JSON"):
            load_segmentations(path, corpus)

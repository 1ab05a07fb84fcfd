import json

import pytest

from vidaas.errors import DuplicateName, EmptyRubric, InvalidPair, MalformedSheet
from vidaas.rubric import (Modality, MultimodalMode, TEMPLATE_NAMES, dump_pair_sheet,
                           load_pair_sheet, load_template, parse_rubric,
                           render_rubric_prompt, template_text)

TEMPLATE_CRITERIA_COUNTS = {
    "forward_roll": 6,
    "class_demonstration": 10,
    "fire_extinguisher": 6,
    "forklift": 4,
}


class TestParseRubric:
    @pytest.mark.parametrize("name,count", TEMPLATE_CRITERIA_COUNTS.items())
    def test_template_criterion_counts(self, name, count):
        rubric = load_template(name)
        assert len(rubric) == count
        assert [c.ordinal for c in rubric.criteria] == list(range(1, count + 1))

    def test_forward_roll_first_criterion(self):
        rubric = load_template("forward_roll")
        assert rubric.criteria[0].text.startswith("Place both hands on the ground")

    def test_class_demonstration_first_criterion(self):
        rubric = load_template("class_demonstration")
        assert rubric.criteria[0].text.startswith("Are the learning objectives set reasonably")

    def test_forklift_first_criterion(self):
        rubric = load_template("forklift")
        assert "lift the fork and cross the starting line" in rubric.criteria[0].text

    def test_blank_text_raises(self):
        with pytest.raises(EmptyRubric):
            parse_rubric("", Modality.VIDEO)
        with pytest.raises(EmptyRubric):
            parse_rubric("   \n\n  ", Modality.VIDEO)

    def test_prose_without_markers_raises(self):
        with pytest.raises(EmptyRubric):
            parse_rubric("just some sentences\nwith no item markers", Modality.VIDEO)

    def test_mixed_markers_accepted(self):
        raw = "1. first\n- second\n• third\n2) fourth"
        rubric = parse_rubric(raw, Modality.VIDEO)
        assert [c.text for c in rubric.criteria] == ["first", "second", "third", "fourth"]

    def test_ordinals_ignore_source_numbering(self):
        rubric = parse_rubric("7. seven\n3. three\n9. nine", Modality.VIDEO)
        assert [(c.ordinal, c.text) for c in rubric.criteria] == \
            [(1, "seven"), (2, "three"), (3, "nine")]

    def test_wrapped_continuation_joins_previous(self):
        raw = "1. Keep both hands\non the ground throughout.\n2. Stand up."
        rubric = parse_rubric(raw, Modality.VIDEO)
        assert rubric.criteria[0].text == "Keep both hands on the ground throughout."
        assert len(rubric) == 2

    def test_preamble_before_first_marker_dropped(self):
        rubric = parse_rubric("Grading notes for teachers\n1. only item", Modality.VIDEO)
        assert len(rubric) == 1
        assert rubric.criteria[0].text == "only item"

    def test_parse_is_pure(self):
        raw = template_text("fire_extinguisher")
        a = parse_rubric(raw, Modality.VIDEO)
        b = parse_rubric(raw, Modality.VIDEO)
        assert a == b


class TestRenderRubricPrompt:
    def test_canonical_two_liner(self):
        rubric = parse_rubric("1. A\n2. B", Modality.VIDEO)
        assert render_rubric_prompt(rubric) == "VIDEO RUBRIC:\n1. A\n2. B"

    def test_audio_header_token(self):
        rubric = parse_rubric("- speak clearly", Modality.AUDIO)
        assert render_rubric_prompt(rubric).startswith("AUDIO RUBRIC:\n")

    def test_render_parse_stable(self):
        for name in TEMPLATE_NAMES:
            rubric = load_template(name)
            rendered = render_rubric_prompt(rubric)
            reparsed = parse_rubric(rendered, rubric.modality)
            assert [c.text for c in reparsed.criteria] == [c.text for c in rubric.criteria]
            assert render_rubric_prompt(reparsed) == rendered

    def test_render_deterministic(self):
        rubric = load_template("forklift")
        assert render_rubric_prompt(rubric) == render_rubric_prompt(rubric)

    def test_forklift_renders_four_numbered_lines(self):
        lines = render_rubric_prompt(load_template("forklift")).splitlines()
        assert len(lines) == 5  # header + 4 criteria
        assert lines[1].startswith("1. ")
        assert "lift the fork and cross the starting line" in lines[1]


def _sheet_doc(tmp_name="clip.avi"):
    return {
        "version": "1",
        "pairs": [
            {"name": "forward_roll", "video": f"videos/{tmp_name}", "mode": "video_only",
             "video_rubric": template_text("forward_roll"), "audio_rubric": None},
            {"name": "class_demonstration", "video": "videos/b.avi", "mode": "video_audio",
             "video_rubric": template_text("class_demonstration"),
             "audio_rubric": "1. States the objective.\n2. Uses clear language."},
            {"name": "fire_extinguisher", "video": "videos/c.avi", "mode": "video_only",
             "video_rubric": template_text("fire_extinguisher"), "audio_rubric": None},
            {"name": "forklift", "video": "videos/d.avi", "mode": "video_only",
             "video_rubric": template_text("forklift"), "audio_rubric": None},
        ],
    }


class TestPairSheet:
    def test_four_template_pairs_load(self):
        sheet = load_pair_sheet(json.dumps(_sheet_doc()).encode())
        assert len(sheet.pairs) == 4
        assert [len(p.video_rubric) for p in sheet.pairs] == [6, 10, 6, 4]
        assert sheet.pairs[1].mode is MultimodalMode.VIDEO_AUDIO
        assert sheet.pairs[1].audio_rubric is not None

    def test_video_audio_without_audio_rubric_rejected(self):
        doc = _sheet_doc()
        doc["pairs"][1]["audio_rubric"] = None
        with pytest.raises(InvalidPair):
            load_pair_sheet(json.dumps(doc).encode())

    def test_empty_pairs_is_valid(self):
        sheet = load_pair_sheet(b'{"version": "1", "pairs": []}')
        assert sheet.pairs == ()

    def test_duplicate_names_rejected(self):
        doc = _sheet_doc()
        doc["pairs"][2]["name"] = doc["pairs"][0]["name"]
        with pytest.raises(DuplicateName):
            load_pair_sheet(json.dumps(doc).encode())

    def test_malformed_json_rejected(self):
        with pytest.raises(MalformedSheet):
            load_pair_sheet(b"{not json")

    def test_missing_field_rejected(self):
        doc = _sheet_doc()
        del doc["pairs"][0]["video"]
        with pytest.raises(MalformedSheet):
            load_pair_sheet(json.dumps(doc).encode())

    def test_bad_mode_rejected(self):
        doc = _sheet_doc()
        doc["pairs"][0]["mode"] = "audio_only"
        with pytest.raises(MalformedSheet):
            load_pair_sheet(json.dumps(doc).encode())

    def test_dump_load_round_trip(self):
        sheet = load_pair_sheet(json.dumps(_sheet_doc()).encode())
        again = load_pair_sheet(dump_pair_sheet(sheet).encode())
        assert [p.name for p in again.pairs] == [p.name for p in sheet.pairs]
        assert [len(p.video_rubric) for p in again.pairs] == [6, 10, 6, 4]

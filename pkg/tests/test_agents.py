from __future__ import annotations

import pytest

from conftest import design_character

from showrunner.agents import (
    AnimateExecutor,
    AudioExecutor,
    DependencyError,
    EditExecutor,
    SceneDesignExecutor,
    StoryboardExecutor,
    evaluate,
    identity_token,
    make_asset,
)
from showrunner.memory import TableName, tokenize
from showrunner.model import Verdict
from showrunner.protocol import request_envelope


def storyboard_request(payload):
    defaults = {
        "shot_id": "scene_01_shot_01",
        "prompt": "",
        "characters": [],
        "speaker": None,
        "is_establishing": False,
        "needs_layout": False,
        "scene_id": "scene_01",
        "scene_start": True,
        "visual_style": ["anime"],
    }
    defaults.update(payload)
    return request_envelope(
        f"{defaults['shot_id']}_v1",
        "storyboard",
        defaults["prompt"],
        "style: test",
        "StoryboardAgent",
        payload=defaults,
    )


def run_storyboard(ctx, payload):
    return StoryboardExecutor().execute(storyboard_request(payload), ctx).outputs


class TestStoryboard:
    def test_yx01_three_panels_with_expected_tools(
        self, agent_ctx, seeded_characters, yx01_description
    ):
        outputs = run_storyboard(
            agent_ctx,
            {
                "shot_id": "scene_YX01",
                "prompt": yx01_description,
                "characters": ["Ye", "System AI"],
                "scene_id": "scene_YX01",
            },
        )
        shots = outputs["storyboard_shots"]
        assert [s["tool"] for s in shots] == [
            "reference_image_generation",
            "layout_guided_generation",
            "layout_guided_generation",
        ]
        assert [s["shot_id"] for s in shots] == [
            "scene_YX01_shot_01",
            "scene_YX01_shot_02",
            "scene_YX01_shot_03",
        ]
        second = shots[1]
        assert second["layout_bboxes"]
        for box in second["layout_bboxes"]:
            x1, y1, x2, y2 = box["bbox"]
            assert x1 < x2 and y1 < y2
        assert len(outputs["keyframes"]) == 3

    def test_missing_character_asset_is_a_dependency_error(self, agent_ctx, yx01_description):
        with pytest.raises(DependencyError, match="Ye"):
            run_storyboard(
                agent_ctx,
                {"prompt": yx01_description, "characters": ["Ye", "System AI"]},
            )

    def test_establishing_single_clause_uses_text_to_image(self, agent_ctx):
        outputs = run_storyboard(
            agent_ctx,
            {"prompt": "A misty forest at dawn.", "is_establishing": True},
        )
        shots = outputs["storyboard_shots"]
        assert len(shots) == 1
        assert shots[0]["tool"] == "text_to_image"
        assert "layout_bboxes" not in shots[0]

    def test_two_panel_scene_start_camera_plan(self, agent_ctx, seeded_characters):
        # Two beats, scene start, no dialogue: matches the protocol golden
        # response exactly — angles [30, 45], transitions [fade, cut].
        outputs = run_storyboard(
            agent_ctx,
            {
                "prompt": "Ye stands at the window, while rain falls outside.",
                "characters": ["Ye"],
            },
        )
        assert outputs["camera_plan"] == {"angles": [30, 45], "transitions": ["fade", "cut"]}

    def test_dialogue_panels_get_cut_transitions(self, agent_ctx, seeded_characters):
        outputs = run_storyboard(
            agent_ctx,
            {
                "prompt": "Ye: Put the cup down!",
                "characters": ["Ye"],
                "speaker": "Ye",
            },
        )
        assert outputs["camera_plan"]["transitions"] == ["cut"]

    def test_storyboard_rows_written_per_panel(self, agent_ctx, seeded_characters, yx01_description):
        outputs = run_storyboard(
            agent_ctx,
            {
                "shot_id": "scene_YX01",
                "prompt": yx01_description,
                "characters": ["Ye", "System AI"],
            },
        )
        for panel in outputs["storyboard_shots"]:
            row = agent_ctx.store.get(TableName.STORYBOARD, panel["shot_id"])
            assert row.producer == "StoryboardAgent"
            assert row.key_fields["prompt"] == panel["prompt"]

    def test_tool_override_applies_to_every_panel(self, agent_ctx, seeded_characters):
        outputs = run_storyboard(
            agent_ctx,
            {
                "prompt": "Ye lifts the cup.",
                "characters": ["Ye"],
                "tool_override": "layout_guided_generation",
            },
        )
        assert [s["tool"] for s in outputs["storyboard_shots"]] == ["layout_guided_generation"]
        assert outputs["storyboard_shots"][0]["layout_bboxes"]


class TestCharacterDesign:
    def test_three_views_share_one_identity_token(self, agent_ctx, lexicon):
        outputs = design_character(agent_ctx, "Ye", lexicon["Ye"])
        assert set(outputs["views"]) == {"front", "side", "back"}
        # Oracle: recompute the digest-based token from the inputs.
        assert outputs["identity_token"] == identity_token(lexicon["Ye"], ["anime"])
        for view in ("front", "side", "back"):
            asset = agent_ctx.vault.get(f"char_ye_{view}")
            assert asset.descriptor["identity_token"] == outputs["identity_token"]

    def test_same_request_is_idempotent(self, agent_ctx, lexicon):
        first = design_character(agent_ctx, "Ye", lexicon["Ye"])
        second = design_character(agent_ctx, "Ye", lexicon["Ye"])
        assert first == second

    def test_different_style_changes_identity_token(self, agent_ctx, lexicon):
        anime = design_character(agent_ctx, "Ye", lexicon["Ye"], style=("anime",))
        noir = design_character(agent_ctx, "Ye", lexicon["Ye"], style=("noir",))
        assert anime["identity_token"] != noir["identity_token"]

    def test_character_row_written_with_views(self, agent_ctx, lexicon):
        design_character(agent_ctx, "Ye", lexicon["Ye"])
        row = agent_ctx.store.get(TableName.CHARACTER, "char_ye")
        assert row.key_fields["3d_view"].startswith("assets/char_ye_front")
        assert row.key_fields["voice_prompt"] is None


def scene_request(prompt, **extra):
    payload = {"scene_id": "scene_01", "prompt": prompt, "visual_style": ["anime"], **extra}
    return request_envelope(
        "scene_01_v1", "scene_design", prompt, "style: test", "SceneDesigner", payload=payload
    )


class TestSceneDesign:
    def test_spatial_prompt_selects_layout_tool(self, agent_ctx):
        response = SceneDesignExecutor().execute(
            scene_request("A desk on the left, a window behind it."), agent_ctx
        )
        assert response.outputs["tool"] == "layout_guided_generation"

    def test_plain_prompt_selects_depth_tool(self, agent_ctx):
        response = SceneDesignExecutor().execute(
            scene_request("A quiet mountain lake at dusk."), agent_ctx
        )
        assert response.outputs["tool"] == "depth_guided_generation"

    def test_identical_prompt_identical_digest(self, agent_ctx):
        SceneDesignExecutor().execute(scene_request("A quiet lake."), agent_ctx)
        first = agent_ctx.vault.get("bg_scene_01").content_digest
        SceneDesignExecutor().execute(scene_request("A quiet lake."), agent_ctx)
        assert agent_ctx.vault.get("bg_scene_01").content_digest == first

    def test_layered_output(self, agent_ctx):
        response = SceneDesignExecutor().execute(scene_request("A lake."), agent_ctx)
        assert response.outputs["layers"] == ["background", "midground", "foreground"]


def animate_request(payload):
    defaults = {
        "shot_id": "scene_01_shot_01",
        "prompt": "Ye lifts the cup.",
        "scene_id": "scene_01",
        "lip_sync": False,
        "audio_mix_id": None,
        "visual_style": ["anime"],
    }
    defaults.update(payload)
    return request_envelope(
        f"animation_{defaults['shot_id']}_v1",
        "animation",
        defaults["prompt"],
        "style: test",
        "Animator",
        payload=defaults,
    )


class TestAnimate:
    def seed_storyboard(self, agent_ctx, seeded_characters):
        return run_storyboard(
            agent_ctx,
            {
                "prompt": "Ye stands at the window, while rain falls outside.",
                "characters": ["Ye"],
            },
        )

    def test_video_descriptor_lists_keyframes_in_order(self, agent_ctx, seeded_characters):
        storyboard = self.seed_storyboard(agent_ctx, seeded_characters)
        response = AnimateExecutor().execute(animate_request({}), agent_ctx)
        video = agent_ctx.vault.get("video_scene_01_shot_01")
        # Oracle: descriptor field equality against the storyboard output.
        expected_panels = [s["shot_id"] for s in storyboard["storyboard_shots"]]
        assert video.descriptor["keyframes"] == expected_panels
        assert response.outputs["keyframes"] == expected_panels
        assert video.descriptor["camera_plan"] == storyboard["camera_plan"]

    def test_lip_sync_without_mix_is_dependency_error(self, agent_ctx, seeded_characters):
        self.seed_storyboard(agent_ctx, seeded_characters)
        with pytest.raises(DependencyError, match="mix"):
            AnimateExecutor().execute(
                animate_request({"lip_sync": True, "audio_mix_id": "mix_scene_01_shot_01"}),
                agent_ctx,
            )

    def test_missing_storyboard_is_dependency_error(self, agent_ctx):
        with pytest.raises(DependencyError, match="storyboard"):
            AnimateExecutor().execute(animate_request({}), agent_ctx)

    def test_same_inputs_same_digest(self, agent_ctx, seeded_characters):
        self.seed_storyboard(agent_ctx, seeded_characters)
        AnimateExecutor().execute(animate_request({}), agent_ctx)
        first = agent_ctx.vault.get("video_scene_01_shot_01").content_digest
        AnimateExecutor().execute(animate_request({}), agent_ctx)
        assert agent_ctx.vault.get("video_scene_01_shot_01").content_digest == first

    def test_duration_scales_with_panel_count(self, agent_ctx, seeded_characters):
        self.seed_storyboard(agent_ctx, seeded_characters)  # two panels
        response = AnimateExecutor().execute(animate_request({}), agent_ctx)
        assert response.outputs["duration_seconds"] == 2 * agent_ctx.config.seconds_per_shot


def audio_request(payload):
    defaults = {
        "shot_id": "scene_01_shot_01",
        "scene_id": "scene_01",
        "prompt": "Hold the gate! Fall back now.",
        "lines": [],
        "make_music": True,
        "scene_prompt": "A stone gate in the rain.",
        "acoustic_style": ["orchestral"],
    }
    defaults.update(payload)
    return request_envelope(
        f"audio_{defaults['shot_id']}_v1",
        "audio",
        defaults["prompt"],
        "style: test",
        "AudioProduction",
        payload=defaults,
    )


TWO_LINES = [
    {"character": "Ye", "character_id": "char_ye", "text": "Hold the gate!", "emotion": "agitated"},
    {"character": "Ye", "character_id": "char_ye", "text": "Fall back now.", "emotion": "neutral"},
]


class TestAudio:
    def test_two_lines_one_scene_yields_three_assets_and_a_mix(
        self, agent_ctx, seeded_characters
    ):
        response = AudioExecutor().execute(audio_request({"lines": TWO_LINES}), agent_ctx)
        outputs = response.outputs
        # Oracle: one asset per line plus one music asset per scene.
        assert len(outputs["dialogue"]) == len(TWO_LINES)
        assert outputs["music"] == "music_scene_01"
        assert outputs["stems"] == [*outputs["dialogue"], "music_scene_01"]
        assert outputs["mix"] == "mix_scene_01_shot_01"
        mix = agent_ctx.vault.get("mix_scene_01_shot_01")
        assert mix.descriptor["stems"] == outputs["stems"]

    def test_zero_lines_music_only(self, agent_ctx):
        outputs = AudioExecutor().execute(audio_request({}), agent_ctx).outputs
        assert outputs["dialogue"] == []
        assert outputs["stems"] == ["music_scene_01"]

    def test_same_line_different_emotion_changes_digest(self, agent_ctx, seeded_characters):
        neutral = [dict(TWO_LINES[0], emotion="neutral")]
        agitated = [dict(TWO_LINES[0], emotion="agitated")]
        AudioExecutor().execute(audio_request({"lines": neutral}), agent_ctx)
        first = agent_ctx.vault.get("dialogue_scene_01_shot_01_01").content_digest
        AudioExecutor().execute(audio_request({"lines": agitated}), agent_ctx)
        second = agent_ctx.vault.get("dialogue_scene_01_shot_01_01").content_digest
        assert first != second

    def test_unknown_character_is_dependency_error(self, agent_ctx):
        lines = [{"character": "Ghost", "character_id": "char_ghost", "text": "boo", "emotion": "neutral"}]
        with pytest.raises(DependencyError, match="voice_prompt"):
            AudioExecutor().execute(audio_request({"lines": lines}), agent_ctx)

    def test_first_use_bootstraps_voice_prompt(self, agent_ctx, seeded_characters):
        before = agent_ctx.store.get(TableName.CHARACTER, "char_ye")
        assert before.key_fields["voice_prompt"] is None
        AudioExecutor().execute(audio_request({"lines": TWO_LINES[:1]}), agent_ctx)
        after = agent_ctx.store.get(TableName.CHARACTER, "char_ye")
        assert after.key_fields["voice_prompt"]
        assert after.producer == "AudioProduction"


def edit_request(shot_ids, **extra):
    payload = {
        "shot_ids": shot_ids,
        "prompt": "the whole story",
        "run_id": "run_test",
        "styles": {"visual_style": ["anime"], "acoustic_style": ["orchestral"]},
        **extra,
    }
    return request_envelope(
        "edit_v1", "edit", payload["prompt"], "style: test", "VideoEditor", payload=payload
    )


class TestEdit:
    def seed_shot(self, agent_ctx, shot_id, scene_id="scene_01", scene_start=False):
        run_storyboard(
            agent_ctx,
            {
                "shot_id": shot_id,
                "prompt": "Ye walks on.",
                "characters": ["Ye"],
                "scene_id": scene_id,
                "scene_start": scene_start,
            },
        )
        AudioExecutor().execute(
            audio_request({"shot_id": shot_id, "scene_id": scene_id, "make_music": scene_start}),
            agent_ctx,
        )
        AnimateExecutor().execute(
            animate_request({"shot_id": shot_id, "scene_id": scene_id}), agent_ctx
        )

    def test_entries_in_story_order_with_transitions(self, agent_ctx, seeded_characters):
        shot_ids = ["scene_01_shot_01", "scene_01_shot_02", "scene_01_shot_03"]
        for index, shot_id in enumerate(shot_ids):
            self.seed_shot(agent_ctx, shot_id, scene_start=index == 0)
        outputs = EditExecutor().execute(edit_request(shot_ids), agent_ctx).outputs
        manifest = outputs["manifest"]
        assert [e["shot_id"] for e in manifest["entries"]] == shot_ids
        # Transition tags propagate from each shot's storyboard camera plan.
        assert [e["transition"] for e in manifest["entries"]] == ["fade", "cut", "cut"]
        assert all(e["audio"] for e in manifest["entries"])

    def test_missing_video_names_shot(self, agent_ctx, seeded_characters):
        with pytest.raises(DependencyError, match="scene_01_shot_09"):
            EditExecutor().execute(edit_request(["scene_01_shot_09"]), agent_ctx)

    def test_missing_mix_is_dependency_error(self, agent_ctx, seeded_characters):
        run_storyboard(
            agent_ctx,
            {"shot_id": "scene_01_shot_01", "prompt": "Ye waits.", "characters": ["Ye"]},
        )
        AnimateExecutor().execute(animate_request({}), agent_ctx)
        with pytest.raises(DependencyError, match="mix"):
            EditExecutor().execute(edit_request(["scene_01_shot_01"]), agent_ctx)


class TestEvaluate:
    def test_identical_prompts_score_one(self):
        asset = make_asset("a1", "image", {"prompt": "blue porcelain cup", "shot_id": "s1"})
        report = evaluate(asset, {"prompt": "blue porcelain cup", "shot_id": "s1"}, {})
        assert report.text_similarity == 1.0
        assert report.verdict == Verdict.ACCEPT

    def test_partial_overlap_counts_tokens(self):
        # Oracle: |{porcelain, cup}| / |{blue, porcelain, cup}| = 2/3.
        spec_tokens = set(tokenize("blue porcelain cup"))
        desc_tokens = set(tokenize("porcelain cup"))
        expected = len(spec_tokens & desc_tokens) / len(spec_tokens)
        asset = make_asset("a1", "image", {"prompt": "porcelain cup", "shot_id": "s1"})
        report = evaluate(asset, {"prompt": "blue porcelain cup", "shot_id": "s1"}, {})
        assert report.text_similarity == pytest.approx(expected) == pytest.approx(2 / 3)

    def test_accept_at_any_threshold_up_to_one(self):
        asset = make_asset("a1", "image", {"prompt": "same words", "shot_id": "s1"})
        for threshold in (0.0, 0.5, 0.85, 1.0):
            report = evaluate(
                asset,
                {"prompt": "same words", "shot_id": "s1"},
                {"similarity_threshold": threshold},
            )
            assert report.verdict == Verdict.ACCEPT

    def test_layout_needed_but_flat_tool_recommends_layout(self):
        asset = make_asset(
            "a1", "image", {"prompt": "two rivals clash", "shot_id": "s1", "tools": ["text_to_image"]}
        )
        payload = {
            "prompt": "two rivals clash",
            "shot_id": "s1",
            "needs_layout": True,
            "characters": ["A", "B"],
        }
        report = evaluate(asset, payload, {})
        assert report.recommended_tool == "layout_guided_generation"
        assert report.verdict == Verdict.REVISE

    def test_low_similarity_yields_revise(self):
        asset = make_asset("a1", "image", {"prompt": "unrelated words", "shot_id": "s1"})
        report = evaluate(asset, {"prompt": "blue porcelain cup", "shot_id": "s1"}, {})
        assert report.verdict == Verdict.REVISE

    def test_narrative_check_requires_shot_id_in_descriptor(self):
        asset = make_asset("a1", "image", {"prompt": "words", "shot_id": "other"})
        report = evaluate(asset, {"prompt": "words", "shot_id": "scene_09_shot_01"}, {})
        assert not report.narrative_ok
        assert report.verdict == Verdict.REVISE

    def test_identity_tokens_checked_against_stored_assets(self):
        stored = make_asset("char_ye_front", "image", {"identity_token": "tok_good"})
        asset = make_asset(
            "a1", "image", {"prompt": "x", "shot_id": "s1", "identity_tokens": {"char_ye": "tok_bad"}}
        )
        report = evaluate(
            asset, {"prompt": "x", "shot_id": "s1"}, {}, lookup_asset={"char_ye_front": stored}.get
        )
        assert not report.identity_ok

    def test_av_sync_checks_mix_id_for_lip_synced_video(self):
        good = make_asset(
            "v1", "video", {"prompt": "x", "shot_id": "s1", "audio": "mix_s1"}
        )
        payload = {"prompt": "x", "shot_id": "s1", "lip_sync": True, "audio_mix_id": "mix_s1"}
        assert evaluate(good, payload, {}).av_sync_ok
        bad = make_asset("v1", "video", {"prompt": "x", "shot_id": "s1", "audio": "mix_other"})
        assert not evaluate(bad, payload, {}).av_sync_ok

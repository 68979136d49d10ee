from __future__ import annotations

import random

import pytest

from generators import random_story_text, story_lexicon

from showrunner.config import RunConfig
from showrunner.director import (
    ContractViolation,
    Director,
    RunFailure,
    StartupError,
    handle_evaluation,
    localized_revision,
    replay_task_statuses,
    run_pipeline,
)
from showrunner.model import (
    EvaluationReport,
    Task,
    TaskKind,
    TaskStatus,
    Verdict,
    WorkflowGraph,
)
from showrunner.planning import PlanningError
from showrunner.segmentation import segment_story

MINIMAL_TEXT = "Ye lifts the porcelain cup."


def make_report(task_id, verdict):
    return EvaluationReport(
        task_id=task_id,
        text_similarity=1.0 if verdict == Verdict.ACCEPT else 0.2,
        identity_ok=True,
        av_sync_ok=True,
        narrative_ok=True,
        verdict=verdict,
    )


def make_task(task_id="storyboard_x", revision_count=0):
    return Task(
        id=task_id,
        kind=TaskKind.STORYBOARD,
        agent="StoryboardAgent",
        revision_count=revision_count,
    )


class TestHandleEvaluation:
    def test_truth_table(self):
        # Oracle: enumerate (verdict, revision_count, continue_on_degraded).
        cases = []
        for verdict in (Verdict.ACCEPT, Verdict.REVISE, Verdict.ESCALATE):
            for count in (0, 3):
                for degraded_ok in (True, False):
                    if verdict == Verdict.ACCEPT:
                        expected = "accept"
                    elif verdict == Verdict.REVISE and count < 3:
                        expected = "revise"
                    elif verdict == Verdict.REVISE and degraded_ok:
                        expected = "degrade_and_continue"
                    else:
                        expected = "fail"
                    cases.append((verdict, count, degraded_ok, expected))

        for verdict, count, degraded_ok, expected in cases:
            config = RunConfig(max_revisions=3, continue_on_degraded=degraded_ok)
            task = make_task(revision_count=count)
            got = handle_evaluation(task, make_report(task.id, verdict), config)
            assert got == expected, (verdict, count, degraded_ok)

    def test_spec_examples(self):
        config = RunConfig(max_revisions=3, continue_on_degraded=True)
        assert handle_evaluation(make_task(), make_report("storyboard_x", Verdict.ACCEPT), config) == "accept"
        assert handle_evaluation(make_task(revision_count=0), make_report("storyboard_x", Verdict.REVISE), config) == "revise"
        assert (
            handle_evaluation(make_task(revision_count=3), make_report("storyboard_x", Verdict.REVISE), config)
            == "degrade_and_continue"
        )

    def test_mismatched_ids_is_contract_violation(self):
        config = RunConfig()
        with pytest.raises(ContractViolation):
            handle_evaluation(make_task("a"), make_report("b", Verdict.ACCEPT), config)


class TestLocalizedRevision:
    def test_failed_leaf_alone(self):
        graph = WorkflowGraph(nodes=frozenset("ab"), edges=frozenset({("a", "b")}))
        assert localized_revision(graph, "b", {}, {}) == {"b"}

    def test_chain_with_consumption(self):
        graph = WorkflowGraph(
            nodes=frozenset("abc"), edges=frozenset({("a", "b"), ("b", "c")})
        )
        consumed = {"c": {"asset:b_out"}}
        produced = {"b": {"asset:b_out"}}
        # Oracle: BFS reachability intersected with the consumption map.
        assert localized_revision(graph, "b", consumed, produced) == {"b", "c"}

    def test_diamond_excludes_non_consumer(self):
        graph = WorkflowGraph(
            nodes=frozenset("abcd"),
            edges=frozenset({("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")}),
        )
        consumed = {"d": {"asset:c_out"}}
        produced = {"b": {"asset:b_out"}, "c": {"asset:c_out"}}
        assert localized_revision(graph, "b", consumed, produced) == {"b"}

    def test_cascades_through_intermediate_consumers(self):
        graph = WorkflowGraph(
            nodes=frozenset("abcd"),
            edges=frozenset({("a", "b"), ("b", "c"), ("c", "d")}),
        )
        consumed = {"c": {"asset:b_out"}, "d": {"asset:c_out"}}
        produced = {"b": {"asset:b_out"}, "c": {"asset:c_out"}}
        assert localized_revision(graph, "b", consumed, produced) == {"b", "c", "d"}

    def test_never_returns_ancestors(self):
        graph = WorkflowGraph(
            nodes=frozenset("abc"), edges=frozenset({("a", "b"), ("b", "c")})
        )
        consumed = {"a": {"asset:b_out"}, "c": {"asset:b_out"}}
        produced = {"b": {"asset:b_out"}}
        assert "a" not in localized_revision(graph, "b", consumed, produced)

    def test_unknown_task_raises_lookup_error(self):
        graph = WorkflowGraph(nodes=frozenset("a"), edges=frozenset())
        with pytest.raises(LookupError):
            localized_revision(graph, "ghost", {}, {})


def run_text(text, config):
    director = Director(config)
    director.prepare(story_text=text)
    manifest = director.execute()
    return manifest, director


class TestRunPipeline:
    def test_minimal_fixture_manifest(self, base_config):
        manifest, director = run_text(MINIMAL_TEXT, base_config)
        # Oracle: the planning rules traced by hand on a 1-scene/1-shot story.
        story = segment_story(MINIMAL_TEXT, base_config.character_lexicon)
        expected_shot = story.scenes[0].shots[0].id
        assert [e.shot_id for e in manifest.entries] == [expected_shot]
        assert manifest.run_id == director.run_id
        assert director.run_status == "completed"

    def test_empty_story_planning_error(self, base_config):
        director = Director(base_config)
        with pytest.raises(PlanningError, match="empty story"):
            director.prepare(story_text="")
        assert director.manifest is None

    def test_run_pipeline_entry_point(self, base_config):
        story = segment_story(MINIMAL_TEXT, base_config.character_lexicon)
        manifest = run_pipeline(story, base_config)
        assert len(manifest.entries) == 1

    def test_dependencies_succeed_before_dependents_start(self, base_config):
        text = "Ye enters the hall. System AI: Scanning now.\n\nYe bows. The hall empties."
        _, director = run_text(text, base_config)
        success_seq: dict[str, int] = {}
        start_seq: dict[str, list[int]] = {}
        for event in director.events:
            if event.kind != "task_status_changed":
                continue
            task_id = event.payload["task_id"]
            if event.payload["to"] == "succeeded":
                success_seq[task_id] = event.seq
            if event.payload["to"] == "running":
                start_seq.setdefault(task_id, []).append(event.seq)
        for a, b in director.graph.edges:
            for b_start in start_seq[b]:
                preceding = [s for s in start_seq[a] if s < b_start]
                assert preceding, (a, b)
            assert min(start_seq[b]) > min(
                s for t, s in success_seq.items() if t == a
            )

    def test_replay_reconstructs_final_statuses(self, base_config):
        _, director = run_text(MINIMAL_TEXT, base_config)
        replayed = replay_task_statuses(director.events)
        actual = {
            t.id: (t.status.value, t.revision_count) for t in director.tasks.values()
        }
        assert replayed == actual

    def test_byte_identical_transcripts_for_same_inputs(self, base_config):
        first_manifest, first = run_text(MINIMAL_TEXT, base_config)
        second_manifest, second = run_text(MINIMAL_TEXT, base_config)
        assert first.transcript_text() == second.transcript_text()
        assert first_manifest == second_manifest

    def test_different_seed_changes_digests(self, base_config):
        _, first = run_text(MINIMAL_TEXT, base_config)
        _, second = run_text(MINIMAL_TEXT, base_config.with_overrides(seed=1))
        a = first.vault.get("final_cut").content_digest
        b = second.vault.get("final_cut").content_digest
        assert a != b

    def test_unregistered_agent_is_startup_error(self, base_config):
        director = Director(base_config)
        del director.agents["VideoEditor"]
        with pytest.raises(StartupError, match="VideoEditor"):
            director.prepare(story_text=MINIMAL_TEXT)

    def test_registry_loaded_from_configured_path(self, base_config, tmp_path):
        import json
        from importlib import resources

        entries = json.loads(
            resources.files("showrunner.data")
            .joinpath("default_registry.json")
            .read_text("utf-8")
        )
        entries.append(
            {
                "agent": "StoryboardAgent",
                "name": "sketch_pass",
                "functionality": "rough sketch pass",
                "capabilities": [],
                "pros": [],
                "cons": [],
                "cost_rank": 9,
            }
        )
        path = tmp_path / "registry.json"
        path.write_text(json.dumps(entries), encoding="utf-8")
        director = Director(base_config.with_overrides(tool_registry_path=str(path)))
        assert director.registry.has_tool("StoryboardAgent", "sketch_pass")
        director.prepare(story_text=MINIMAL_TEXT)
        director.execute()
        assert director.run_status == "completed"

    def test_outputs_include_verbatim_message_log(self, base_config, tmp_path):
        from showrunner.protocol import decode

        _, director = run_text(MINIMAL_TEXT, base_config)
        paths = director.write_outputs(tmp_path / "out")
        lines = (
            (tmp_path / "out" / "messages.jsonl").read_text(encoding="utf-8").splitlines()
        )
        assert lines
        for line in lines:
            envelope = decode(line)  # every line is a valid canonical message
            assert envelope.id
        assert paths["messages"].endswith("messages.jsonl")


class TestLocalizedRevisionInRuns:
    def test_single_storyboard_failure_reruns_only_consumers(self, base_config):
        story = segment_story(MINIMAL_TEXT, base_config.character_lexicon)
        shot_id = story.scenes[0].shots[0].id
        storyboard_id = f"storyboard_{shot_id}"
        config = base_config.with_overrides(rig_evaluator={storyboard_id: 1})
        _, director = run_text(MINIMAL_TEXT, config)

        revision_events = [
            e
            for e in director.events
            if e.kind == "task_status_changed"
            and e.payload["from"] == "needs_revision"
            and e.payload["to"] == "pending"
        ]
        by_task: dict[str, int] = {}
        for event in revision_events:
            by_task[event.payload["task_id"]] = by_task.get(event.payload["task_id"], 0) + 1
        assert by_task.get(storyboard_id) == 1
        assert "character_design_ye" not in by_task
        assert director.executions["character_design_ye"] == 1
        assert director.executions[storyboard_id] == 2

        # Oracle: reachability intersected with the consumption map bounds
        # what may have re-run.
        allowed = localized_revision(
            director.graph, storyboard_id, director.consumed, director.produced
        )
        for task_id, count in director.executions.items():
            if count > 1:
                assert task_id in allowed

    def test_recommended_tool_is_pinned_for_next_attempt(self, base_config):
        # Force a layout-needing shot through a flat tool via an always-rig
        # on nothing; instead directly exercise _request_revision pinning.
        story = segment_story(MINIMAL_TEXT, base_config.character_lexicon)
        shot_id = story.scenes[0].shots[0].id
        storyboard_id = f"storyboard_{shot_id}"
        config = base_config.with_overrides(rig_evaluator={storyboard_id: 1})
        director = Director(config)
        director.prepare(story_text=MINIMAL_TEXT)
        director.execute()
        # The rigged revise verdict carried no recommendation, so the second
        # attempt used the policy tool again.
        asset = director.vault.get(f"storyboard_{shot_id}")
        assert asset.descriptor["tools"] == ["reference_image_generation"]


class TestRevisionBound:
    def test_always_revise_degrades_at_exact_budget(self, base_config):
        config = base_config.with_overrides(rig_evaluator={"*": "always"}, max_revisions=2)
        manifest, director = run_text(MINIMAL_TEXT, config)
        assert manifest is not None
        producing = [
            t for t in director.tasks.values() if t.kind != TaskKind.EVALUATE
        ]
        for task in producing:
            assert task.revision_count == config.max_revisions, task.id
            assert task.id in director.degraded
        assert director.run_status == "completed"

    def test_always_revise_fails_without_degradation(self, base_config):
        config = base_config.with_overrides(
            rig_evaluator={"*": "always"}, max_revisions=1, continue_on_degraded=False
        )
        director = Director(config)
        director.prepare(story_text=MINIMAL_TEXT)
        with pytest.raises(RunFailure) as exc:
            director.execute()
        assert "task_id" in exc.value.report
        assert director.run_status == "failed"
        assert director.events[-1].kind == "run_failed"

    def test_revision_count_never_exceeds_budget(self, base_config):
        config = base_config.with_overrides(rig_evaluator={"*": "always"}, max_revisions=3)
        _, director = run_text(MINIMAL_TEXT, config)
        for event in director.events:
            if event.kind == "task_status_changed":
                assert event.payload["revision_count"] <= config.max_revisions


class TestSingleWriterAudit:
    def test_all_versions_written_by_field_owners(self, base_config):
        text = "Ye enters the hall. System AI: Scanning now.\n\nYe bows. The hall empties."
        _, director = run_text(text, base_config)
        store = director.store
        # Full scan: recompute changed fields version by version and check
        # the recorded producer owns each changed canonical field.
        histories: dict[tuple, list] = {}
        for record in store.all_records():
            histories.setdefault((record.table, record.record_id, record.branch), []).append(record)
        checked = 0
        for (table, _, _), versions in histories.items():
            versions.sort(key=lambda r: r.version)
            previous: dict = {field: None for field in versions[0].key_fields}
            for record in versions:
                for field, value in record.key_fields.items():
                    if value != previous.get(field):
                        owner = store.owner_of(table, field)
                        if owner is not None:
                            assert record.producer == owner, (table, field, record.producer)
                            checked += 1
                previous = dict(record.key_fields)
        assert checked > 0


class TestRandomizedRuns:
    def test_random_stories_complete_or_fail_cleanly(self):
        rng = random.Random(31)
        lexicon = story_lexicon()
        for _ in range(25):
            config = RunConfig(character_lexicon=lexicon, seed=rng.randrange(1000))
            text = random_story_text(rng)
            manifest, director = run_text(text, config)
            assert director.run_status == "completed"
            story_shots = [s.id for s in segment_story(text, lexicon).all_shots()]
            assert [e.shot_id for e in manifest.entries] == story_shots

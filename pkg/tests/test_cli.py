"""CLI surface: plan, sim, eval, profile, repl."""

from __future__ import annotations

import json
from datetime import datetime, timezone

import pytest
from click.testing import CliRunner

from airsteward.cli import main
from airsteward.profiles import apply, empty_household, persist
from airsteward.rubric import planner_source
from airsteward.scenarios import CorpusCase, builtin_scenario, dump_corpus
from airsteward.schema import HealthCondition, MemoryTagRecord, PopulationGroup, TagAction


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def corpus_file(tmp_path, kb):
    source = planner_source(kb)
    cases = []
    for i, name in enumerate(("nominal", "demo", "high_formaldehyde")):
        scenario = builtin_scenario(name)
        candidate = source(CorpusCase(case_id="", scenario=scenario,
                                      truth_plan=None, truth_chain=None))
        cases.append(CorpusCase(case_id=f"case-{i}", scenario=scenario,
                                truth_plan=candidate.plan, truth_chain=candidate.chain))
    path = tmp_path / "corpus.jsonl"
    dump_corpus(cases, path)
    return path


class TestPlanCommand:
    def test_prints_chain_then_plan(self, runner):
        result = runner.invoke(main, ["plan", "--scenario", "nominal"])
        assert result.exit_code == 0, result.output
        assert result.output.index("[1/5 PERCEPTION]") < result.output.index('"cmd"')

    def test_scenario_file_path(self, runner, tmp_path):
        payload = builtin_scenario("demo").to_payload()
        path = tmp_path / "s.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        result = runner.invoke(main, ["plan", "--scenario", str(path)])
        assert result.exit_code == 0, result.output

    def test_unknown_scenario_fails(self, runner):
        result = runner.invoke(main, ["plan", "--scenario", "missing"])
        assert result.exit_code != 0


class TestSimCommand:
    def test_writes_trajectory_and_figure(self, runner, tmp_path):
        out = tmp_path / "traj"
        result = runner.invoke(main, [
            "sim", "--scenario", "high_formaldehyde", "--horizon", "60",
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "traj.jsonl").exists()
        assert (tmp_path / "traj.png").exists()
        assert "formaldehyde fell below threshold" in result.output
        lines = (tmp_path / "traj.jsonl").read_text().splitlines()
        assert len(lines) == 60
        first = json.loads(lines[0])
        assert {"clock_minutes", "indoor", "device", "plan", "chain", "active"} <= set(first)

    def test_no_figures_flag(self, runner, tmp_path):
        out = tmp_path / "traj"
        result = runner.invoke(main, [
            "sim", "--scenario", "nominal", "--horizon", "5",
            "--out", str(out), "--no-figures"])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "traj.jsonl").exists()
        assert not (tmp_path / "traj.png").exists()


class TestEvalCommand:
    def test_planner_candidate_full_report_bundle(self, runner, corpus_file, tmp_path):
        report = tmp_path / "report"
        result = runner.invoke(main, [
            "eval", "--corpus", str(corpus_file), "--candidate", "planner",
            "--report", str(report)])
        assert result.exit_code == 0, result.output
        assert "pass rate: 100.0%" in result.output
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "report.txt").exists()
        assert (tmp_path / "report.cases.csv").exists()
        assert (tmp_path / "report.deductions.png").exists()
        payload = json.loads((tmp_path / "report.json").read_text())
        assert payload["pass_rate"] == 1.0

    def test_file_candidate(self, runner, corpus_file, tmp_path, kb):
        source = planner_source(kb)
        lines = []
        for line in corpus_file.read_text().splitlines():
            case_payload = json.loads(line)
            lines.append(json.dumps({
                "id": case_payload["id"],
                "plan": case_payload["truth"]["plan"],
                "chain": case_payload["truth"]["chain"],
            }))
        candidate_path = tmp_path / "candidates.jsonl"
        candidate_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        result = runner.invoke(main, [
            "eval", "--corpus", str(corpus_file), "--candidate", str(candidate_path)])
        assert result.exit_code == 0, result.output
        assert "pass rate: 100.0%" in result.output

    def test_corrupt_corpus_reports_line(self, runner, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"scenario": }\n', encoding="utf-8")
        result = runner.invoke(main, ["eval", "--corpus", str(bad)])
        assert result.exit_code != 0
        assert "line 1" in result.output


class TestProfileCommands:
    def test_show_and_reset(self, runner, tmp_path):
        store = tmp_path / "profile.jsonl"
        household = apply([MemoryTagRecord(
            group=PopulationGroup.ELDERLY, action=TagAction.ADD_CONDITION,
            condition=HealthCondition.ASTHMA)], empty_household(),
            datetime(2025, 7, 1, tzinfo=timezone.utc))
        persist(household, store)

        shown = runner.invoke(main, ["profile", "show", "--store", str(store)])
        assert shown.exit_code == 0, shown.output
        assert "asthma" in shown.output

        member = runner.invoke(main, ["profile", "show", "--store", str(store),
                                      "--group", "elderly"])
        assert json.loads(member.output)["conditions"][0]["condition"] == "asthma"

        reset = runner.invoke(main, ["profile", "reset", "--store", str(store)])
        assert reset.exit_code == 0
        shown = runner.invoke(main, ["profile", "show", "--store", str(store)])
        assert json.loads(shown.output) == {"members": []}


class TestRepl:
    def test_utterance_then_profile_then_quit(self, runner):
        result = runner.invoke(main, ["--no-backend", "repl", "--scenario", "demo"],
                               input="Grandma's asthma has cleared up\n/profile\n/quit\n")
        assert result.exit_code == 0, result.output
        assert "[lexicon] 1 record(s)" in result.output
        profile_start = result.output.index("/profile") if "/profile" in result.output \
            else result.output.index("[lexicon]")
        assert '"conditions": []' in result.output[profile_start:]

    def test_plan_and_advance(self, runner):
        result = runner.invoke(main, ["repl", "--scenario", "nominal"],
                               input="/plan\n/advance 5\n/quit\n")
        assert result.exit_code == 0, result.output
        assert "[1/5 PERCEPTION]" in result.output
        assert "clock 5" in result.output

    def test_inject_validates_quantity(self, runner):
        result = runner.invoke(main, ["repl", "--scenario", "nominal"],
                               input="/inject radon 5\n/quit\n")
        assert result.exit_code == 0
        assert "error" in result.output.lower()

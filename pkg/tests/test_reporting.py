"""Report writers: text table, CSV, JSON, and figures next to the output."""

from __future__ import annotations

import json

import pytest

from airsteward.reporting import (
    corpus_report_text,
    write_eval_outputs,
    write_sim_outputs,
)
from airsteward.rubric import CandidateOutput, planner_source, run_corpus
from airsteward.scenarios import CorpusCase, builtin_scenario
from airsteward.sim import default_sim_params, run_episode


@pytest.fixture(scope="module")
def mixed_report(kb):
    from dataclasses import replace

    from airsteward.schema import AuxLevel

    source = planner_source(kb)
    cases = []
    candidates = {}
    for i, name in enumerate(("demo", "nominal", "high_formaldehyde")):
        scenario = builtin_scenario(name)
        truth = source(CorpusCase(case_id="", scenario=scenario,
                                  truth_plan=None, truth_chain=None))
        case_id = f"case-{i}"
        cases.append(CorpusCase(case_id=case_id, scenario=scenario,
                                truth_plan=truth.plan, truth_chain=truth.chain))
        if name == "demo":  # corrupt one candidate so deductions exist
            broken = replace(truth.plan, cmd=replace(truth.plan.cmd,
                                                     air_fresh=AuxLevel.OFF))
            candidates[case_id] = CandidateOutput(plan=broken, chain=truth.chain)
        else:
            candidates[case_id] = truth
    return run_corpus(cases, lambda c: candidates[c.case_id], kb=kb)


class TestTextTable:
    def test_mirrors_error_prone_rule_columns(self, mixed_report):
        text = corpus_report_text(mixed_report)
        assert "Rule" in text and "Weight (%)" in text
        assert "Deduction share" in text and "Common deduction reason" in text
        assert "Rule 11: cmd.air_fresh" in text
        assert "100.0%" in text  # rule 11 carries all lost points

    def test_no_deductions_case(self, kb):
        source = planner_source(kb)
        scenario = builtin_scenario("nominal")
        truth = source(CorpusCase(case_id="", scenario=scenario,
                                  truth_plan=None, truth_chain=None))
        report = run_corpus(
            [CorpusCase(case_id="c0", scenario=scenario,
                        truth_plan=truth.plan, truth_chain=truth.chain)],
            source, kb=kb)
        assert "(no points were lost)" in corpus_report_text(report)


class TestEvalOutputs:
    def test_bundle_written_alongside(self, mixed_report, tmp_path):
        outputs = write_eval_outputs(mixed_report, tmp_path / "report")
        assert outputs["json"].exists()
        assert outputs["text"].exists()
        assert outputs["cases_csv"].exists()
        assert outputs["figure"].exists()
        payload = json.loads(outputs["json"].read_text())
        assert payload["n_cases"] == 3
        assert payload["deduction_share"]["11"] == 1.0
        csv_text = outputs["cases_csv"].read_text()
        assert "case-0,90,False" in csv_text

    def test_figures_can_be_disabled(self, mixed_report, tmp_path):
        outputs = write_eval_outputs(mixed_report, tmp_path / "r", figures=False)
        assert "figure" not in outputs


class TestSimOutputs:
    def test_jsonl_and_figure(self, kb, tmp_path):
        trajectory = run_episode(builtin_scenario("high_formaldehyde"), kb,
                                 default_sim_params(), horizon_minutes=30.0)
        outputs = write_sim_outputs(trajectory, tmp_path / "traj")
        lines = outputs["jsonl"].read_text().splitlines()
        assert len(lines) == 30
        assert outputs["figure"].exists()
        assert outputs["figure"].stat().st_size > 0

"""Report rendering: aligned text tables, per-case CSV, and matplotlib figures.

Every writer takes an output path and drops its figures next to the
delimited output, so one --report/--out flag yields the whole bundle.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .rubric import CorpusReport, RULE_NAMES, RULE_WEIGHTS
from .schema import canonical_json
from .sim import TrajectoryStep, trajectory_to_jsonl


def corpus_report_text(report: CorpusReport) -> str:
    """Aligned table of deduction shares, worst rules first."""
    lines = [
        f"cases: {report.n_cases}",
        f"pass rate: {report.pass_rate:.1%}",
        f"mean total: {report.mean_total:.2f}",
        f"pass policy: total >= {report.policy.min_total:g}"
        + (", no weight-10 rule at zero" if report.policy.forbid_zero_on_weight10 else ""),
        "",
    ]
    header = f"{'Rule':<42} {'Weight (%)':>10} {'Deduction share':>16}  Common deduction reason"
    lines.append(header)
    lines.append("-" * len(header))
    ranked = sorted(report.deduction_share.items(), key=lambda kv: -kv[1])
    if not ranked:
        lines.append("(no points were lost)")
    for rule_id, share in ranked:
        weight = RULE_WEIGHTS[rule_id]
        weight_text = f"{weight:g}" if weight else "-"
        reason = report.common_reasons.get(rule_id, "")
        lines.append(
            f"{f'Rule {rule_id}: {RULE_NAMES[rule_id]}':<42} {weight_text:>10} "
            f"{share:>15.1%}  {reason}")
    return "\n".join(lines) + "\n"


def render_deduction_figure(report: CorpusReport, path: Path) -> None:
    ranked = sorted(report.deduction_share.items(), key=lambda kv: kv[1])
    fig, (ax_share, ax_hist) = plt.subplots(
        1, 2, figsize=(12, max(4, 0.5 * len(ranked) + 2)), width_ratios=[3, 2])
    if ranked:
        labels = [f"R{rid} {RULE_NAMES[rid]}" for rid, _ in ranked]
        ax_share.barh(labels, [share for _, share in ranked], color="#b3533a")
        ax_share.set_xlabel("share of all lost points")
    else:
        ax_share.text(0.5, 0.5, "no deductions", ha="center", va="center")
        ax_share.set_axis_off()
    ax_share.set_title("Deduction distribution by rule")
    totals = [case.total for case in report.cases]
    ax_hist.hist(totals, bins=20, range=(0, 100), color="#3a6eb3")
    ax_hist.axvline(report.policy.min_total, color="#b3533a", linestyle="--",
                    label=f"pass threshold {report.policy.min_total:g}")
    ax_hist.set_xlabel("case total")
    ax_hist.set_ylabel("cases")
    ax_hist.set_title("Score distribution")
    ax_hist.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_eval_outputs(report: CorpusReport, report_path: str | Path,
                       figures: bool = True) -> dict[str, Path]:
    """Write JSON + text table + per-case CSV, figures alongside."""
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    base = report_path.with_suffix("") if report_path.suffix else report_path
    outputs = {}

    json_path = base.with_suffix(".json")
    json_path.write_bytes(canonical_json(report.to_payload()) + b"\n")
    outputs["json"] = json_path

    text_path = base.with_suffix(".txt")
    text_path.write_text(corpus_report_text(report), encoding="utf-8")
    outputs["text"] = text_path

    csv_path = base.with_suffix(".cases.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case_id", "total", "passed", "lost_rules"])
        for case in report.cases:
            lost = ";".join(f"{rid}:{case.lost_by_rule[rid]:g}"
                            for rid in sorted(case.lost_by_rule))
            writer.writerow([case.case_id, f"{case.total:g}", case.passed, lost])
    outputs["cases_csv"] = csv_path

    if figures:
        fig_path = base.with_suffix(".deductions.png")
        render_deduction_figure(report, fig_path)
        outputs["figure"] = fig_path
    return outputs


def render_trajectory_figure(trajectory: list[TrajectoryStep], path: Path) -> None:
    clocks = [rec.clock_minutes for rec in trajectory]
    th = trajectory[0].sim_plan.threshold if trajectory else None
    fig, axes = plt.subplots(3, 1, figsize=(10, 9), sharex=True)

    ax = axes[0]
    ax.plot(clocks, [r.state.indoor.temperature_c for r in trajectory],
            label="indoor temp (C)", color="#b3533a")
    setpoints = [r.sim_plan.cmd.setpoint_c for r in trajectory]
    if any(sp is not None for sp in setpoints):
        ax.plot(clocks, setpoints, label="setpoint", color="#b3533a", linestyle="--")
    ax2 = ax.twinx()
    ax2.plot(clocks, [r.state.indoor.humidity_pct for r in trajectory],
             label="humidity (%)", color="#3a6eb3")
    ax.set_ylabel("temperature (C)")
    ax2.set_ylabel("humidity (%)")
    ax.legend(loc="upper left")
    ax2.legend(loc="upper right")
    ax.set_title("Thermal state")

    ax = axes[1]
    ax.plot(clocks, [r.state.indoor.co2_ppm for r in trajectory],
            label="co2 (ppm)", color="#3a6eb3")
    if th:
        ax.axhline(th.co2_ppm, color="#3a6eb3", linestyle=":", label="co2 threshold")
    ax.set_ylabel("co2 (ppm)")
    ax.legend(loc="upper right")
    ax.set_title("Ventilation")

    ax = axes[2]
    ax.plot(clocks, [r.state.indoor.pm25_ug_m3 for r in trajectory], label="pm2.5")
    ax.plot(clocks, [r.state.indoor.tvoc_mg_m3 for r in trajectory], label="tvoc")
    ax.plot(clocks, [r.state.indoor.hcho_mg_m3 for r in trajectory], label="formaldehyde")
    if th:
        ax.axhline(th.formaldehyde_mg_m3, linestyle=":", color="gray",
                   label="formaldehyde threshold")
    ax.set_yscale("log")
    ax.set_ylabel("pollutants")
    ax.set_xlabel("minutes")
    ax.legend(loc="upper right")
    ax.set_title("Air quality")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_sim_outputs(trajectory: list[TrajectoryStep], out_path: str | Path,
                      figures: bool = True) -> dict[str, Path]:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    base = out_path.with_suffix("") if out_path.suffix else out_path
    jsonl_path = base.with_suffix(".jsonl")
    jsonl_path.write_bytes(trajectory_to_jsonl(trajectory))
    outputs = {"jsonl": jsonl_path}
    if figures and trajectory:
        fig_path = base.with_suffix(".png")
        render_trajectory_figure(trajectory, fig_path)
        outputs["figure"] = fig_path
    return outputs

"""Command-line interface: plan, sim, eval, profile, serve, repl."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import click

from .backend import HttpBackendAdapter, extract_via_backend
from .config import AppConfig, load_config
from .extraction import SessionContext
from .planner import EnvInput, plan as run_planner
from .profiles import empty_household, load as load_household, persist, snapshot
from .rubric import backend_source, file_source, planner_source, run_corpus
from .scenarios import builtin_scenario, builtin_scenario_names, load_corpus, load_scenario
from .schema import PopulationGroup, canonical_json
from .sim import run_episode
from .streamparse import chain_to_text


def _resolve_scenario(path_or_name: str, config: AppConfig):
    path = Path(path_or_name)
    if path.exists():
        return load_scenario(path, config.kb.hemisphere)
    if path_or_name in builtin_scenario_names():
        return builtin_scenario(path_or_name)
    raise click.ClickException(
        f"scenario {path_or_name!r} is neither a file nor one of {builtin_scenario_names()}")


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="TOML or JSON config file (default: $AIRSTEWARD_CONFIG).")
@click.option("--no-backend", is_flag=True,
              help="Force lexicon-only extraction, ignoring AIRSTEWARD_BACKEND_URL.")
@click.pass_context
def main(ctx, config_path, no_backend):
    """Deterministic household air steward."""
    ctx.obj = load_config(config_path, no_backend=no_backend)


@main.command("plan")
@click.option("--scenario", "scenario_ref", required=True,
              help="Scenario file or builtin name.")
@click.pass_obj
def plan_cmd(config: AppConfig, scenario_ref: str):
    """Run the planner on a scenario; print the reasoning chain, then the plan."""
    scenario = _resolve_scenario(scenario_ref, config)
    scenario_kb = scenario.knowledge_base(config.kb)
    control_plan, chain = run_planner(scenario.env, scenario.household,
                                      scenario.device, scenario_kb)
    click.echo(chain_to_text(chain))
    click.echo()
    click.echo(json.dumps(control_plan.to_payload(), indent=2, sort_keys=True))


@main.command("sim")
@click.option("--scenario", "scenario_ref", required=True)
@click.option("--horizon", type=float, required=True, help="Episode length in minutes.")
@click.option("--replan-every", type=float, default=None, help="Replanning period (minutes).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Trajectory output base path; writes .jsonl and a .png figure.")
@click.option("--figures/--no-figures", default=True)
@click.pass_obj
def sim_cmd(config: AppConfig, scenario_ref, horizon, replan_every, out_path, figures):
    """Run a closed-loop episode; optionally export the trajectory and figure."""
    scenario = _resolve_scenario(scenario_ref, config)
    trajectory = run_episode(
        scenario, config.kb, config.sim_params, horizon_minutes=horizon,
        replan_every=replan_every or config.replan_every_minutes,
        dt=config.sim_dt_minutes)
    last = trajectory[-1]
    click.echo(f"steps: {len(trajectory)}  final clock: {last.clock_minutes:g} min")
    indoor = last.state.indoor
    click.echo(
        f"final indoor: {indoor.temperature_c:.2f}C, {indoor.humidity_pct:.1f}% RH, "
        f"co2 {indoor.co2_ppm:.0f} ppm, pm2.5 {indoor.pm25_ug_m3:.1f}, "
        f"tvoc {indoor.tvoc_mg_m3:.3f}, formaldehyde {indoor.hcho_mg_m3:.4f}")
    threshold = last.sim_plan.threshold.formaldehyde_mg_m3
    crossing = next((i for i, rec in enumerate(trajectory, start=1)
                     if rec.state.indoor.hcho_mg_m3 < threshold), None)
    if trajectory[0].state.indoor.hcho_mg_m3 >= threshold and crossing:
        click.echo(f"formaldehyde fell below threshold at step {crossing}")
    if out_path:
        from .reporting import write_sim_outputs

        outputs = write_sim_outputs(trajectory, out_path, figures=figures)
        for kind, written in sorted(outputs.items()):
            click.echo(f"wrote {kind}: {written}")


@main.command("eval")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--candidate", default="planner",
              help="planner | backend | path to a candidate JSONL file.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Report base path; writes .json/.txt/.cases.csv and a .png figure.")
@click.option("--figures/--no-figures", default=True)
@click.pass_obj
def eval_cmd(config: AppConfig, corpus_path, candidate, report_path, figures):
    """Score a corpus with the 25-rule weighted rubric."""
    from .reporting import corpus_report_text, write_eval_outputs

    try:
        cases = load_corpus(corpus_path, config.kb.hemisphere)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if candidate == "planner":
        source = planner_source(config.kb)
    elif candidate == "backend":
        if not config.backend_enabled():
            raise click.ClickException("backend candidate requires AIRSTEWARD_BACKEND_URL")
        source = backend_source(HttpBackendAdapter(config.backend_url), config.sentinels)
    elif Path(candidate).exists():
        source = file_source(candidate)
    else:
        raise click.ClickException(
            f"candidate must be planner, backend, or a file path: {candidate}")
    report = run_corpus(cases, source, kb=config.kb, policy=config.pass_policy)
    click.echo(corpus_report_text(report), nl=False)
    if report_path:
        outputs = write_eval_outputs(report, report_path, figures=figures)
        for kind, written in sorted(outputs.items()):
            click.echo(f"wrote {kind}: {written}")


@main.group("profile")
def profile_group():
    """Inspect or reset a persisted household profile store."""


@profile_group.command("show")
@click.option("--store", "store_path", type=click.Path(exists=True), required=True)
@click.option("--group", "group_name", default=None,
              type=click.Choice([g.value for g in PopulationGroup]))
def profile_show(store_path, group_name):
    household = load_household(store_path)
    group = PopulationGroup(group_name) if group_name else None
    click.echo(json.dumps(snapshot(household, group), indent=2, sort_keys=True))


@profile_group.command("reset")
@click.option("--store", "store_path", type=click.Path(), required=True)
def profile_reset(store_path):
    persist(empty_household(), store_path)
    click.echo(f"reset profile store at {store_path}")


@main.command("serve")
@click.option("--port", type=int, default=8787)
@click.option("--host", default="127.0.0.1")
@click.option("--ui", "serve_ui", is_flag=True, help="Also serve the dashboard at /ui.")
@click.option("--profile-dir", type=click.Path(), default=None,
              help="Directory for persisted household stores (one per scenario).")
@click.pass_obj
def serve_cmd(config: AppConfig, port, host, serve_ui, profile_dir):
    """Run the HTTP service (sessions, SSE plan streams, eval)."""
    import uvicorn

    from .service import create_app

    if profile_dir:
        config.profile_dir = Path(profile_dir)
    if serve_ui and config.ui_dist is None:
        repo_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        for candidate_dir in (Path.cwd() / "frontend" / "dist", repo_dist):
            if candidate_dir.is_dir():
                config.ui_dist = candidate_dir
                break
        else:
            raise click.ClickException(
                "--ui requires a built dashboard (frontend/dist); run `npm run build` there")
    if not serve_ui:
        config.ui_dist = None
    app = create_app(config)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("repl")
@click.option("--scenario", "scenario_ref", default="demo")
@click.pass_obj
def repl_cmd(config: AppConfig, scenario_ref):
    """Interactive loop: type utterances; /plan, /advance N, /inject Q D, /profile, /quit."""
    from dataclasses import replace as dc_replace

    from .profiles import apply as apply_records
    from .sim import SimState, apply_plan_to_device, perturb, step

    scenario = _resolve_scenario(scenario_ref, config)
    household = scenario.household
    ctx = SessionContext()
    sim_state = SimState(indoor=scenario.env.indoor, device=scenario.device)
    current_plan = None
    adapter = HttpBackendAdapter(config.backend_url) if config.backend_enabled() else None

    click.echo(f"airsteward repl on scenario {scenario.scenario_id or scenario_ref!r}; "
               "/quit to exit")
    while True:
        try:
            line = input("you> ").strip()
        except (EOFError, KeyboardInterrupt):
            click.echo()
            return
        if not line:
            continue
        if line in ("/quit", "/exit"):
            return
        if line == "/profile":
            click.echo(json.dumps(snapshot(household), indent=2, sort_keys=True))
            continue
        if line == "/state":
            click.echo(json.dumps(sim_state.to_payload(), indent=2, sort_keys=True))
            continue
        if line == "/plan":
            env = EnvInput(outdoor=scenario.env.outdoor, indoor=sim_state.indoor,
                           season=scenario.env.season)
            current_plan, chain = run_planner(env, household, sim_state.device,
                                              scenario.knowledge_base(config.kb))
            sim_state = dc_replace(
                sim_state, device=apply_plan_to_device(sim_state.device, current_plan))
            click.echo(chain_to_text(chain))
            click.echo(json.dumps(current_plan.to_payload(), indent=2, sort_keys=True))
            continue
        if line.startswith("/advance"):
            parts = line.split()
            minutes = float(parts[1]) if len(parts) > 1 else config.sim_dt_minutes
            if current_plan is None:
                click.echo("no plan yet; run /plan first")
                continue
            steps = max(1, int(round(minutes / config.sim_dt_minutes)))
            for _ in range(steps):
                sim_state = step(sim_state, current_plan, scenario.env.outdoor,
                                 config.sim_params, config.sim_dt_minutes)
            click.echo(f"clock {sim_state.clock_minutes:g} min; "
                       f"co2 {sim_state.indoor.co2_ppm:.0f} ppm, "
                       f"hcho {sim_state.indoor.hcho_mg_m3:.4f}")
            continue
        if line.startswith("/inject"):
            parts = line.split()
            if len(parts) != 3:
                click.echo("usage: /inject <quantity> <delta>  e.g. /inject co2_ppm 600")
                continue
            try:
                sim_state = perturb(sim_state, {parts[1]: float(parts[2])})
            except (KeyError, ValueError) as exc:
                click.echo(f"error: {exc}")
                continue
            click.echo(json.dumps(sim_state.indoor.to_payload(), sort_keys=True))
            continue
        result = extract_via_backend(line, ctx, adapter, config.lexicon)
        household = apply_records(result.records, household, datetime.now(timezone.utc))
        click.echo(f"[{result.provenance}] {len(result.records)} record(s)")
        for record in result.records:
            click.echo("  " + canonical_json(record.to_payload()).decode("utf-8"))


if __name__ == "__main__":
    main()

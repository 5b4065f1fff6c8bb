"""Application configuration: TOML or JSON file, environment overrides, defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .backend import BACKEND_URL_ENV
from .extraction import Lexicon, default_lexicon
from .planner import KnowledgeBase, default_knowledge_base
from .rubric import PassPolicy
from .sim import SimParams, default_sim_params
from .streamparse import SegmentationConfig

CONFIG_ENV = "AIRSTEWARD_CONFIG"


@dataclass
class AppConfig:
    sentinels: SegmentationConfig = field(default_factory=SegmentationConfig)
    kb: KnowledgeBase = field(default_factory=default_knowledge_base)
    lexicon: Lexicon = field(default_factory=default_lexicon)
    sim_params: SimParams = field(default_factory=default_sim_params)
    pass_policy: PassPolicy = field(default_factory=PassPolicy)
    backend_url: str = ""
    replan_every_minutes: float = 30.0
    sim_dt_minutes: float = 1.0
    ui_dist: Optional[Path] = None
    profile_dir: Optional[Path] = None  # household stores survive restarts when set

    def backend_enabled(self) -> bool:
        return bool(self.backend_url)


def _read_config_payload(path: Path) -> dict:
    data = path.read_bytes()
    if path.suffix.lower() == ".toml":
        return tomllib.loads(data.decode("utf-8"))
    try:
        return json.loads(data)
    except json.JSONDecodeError:
        # Extension-less files may still be TOML.
        return tomllib.loads(data.decode("utf-8"))


def load_config(path: Optional[str | Path] = None, no_backend: bool = False) -> AppConfig:
    """Resolve the config file (arg > $AIRSTEWARD_CONFIG > defaults) and build AppConfig."""
    cfg = AppConfig()
    resolved = Path(path) if path else (
        Path(os.environ[CONFIG_ENV]) if os.environ.get(CONFIG_ENV) else None)
    if resolved is not None:
        payload = _read_config_payload(resolved)
        base_dir = resolved.parent

        sentinels = payload.get("sentinels", {})
        if sentinels:
            cfg.sentinels = SegmentationConfig(
                reasoning_open=sentinels.get("reasoning_open", cfg.sentinels.reasoning_open),
                reasoning_close=sentinels.get("reasoning_close", cfg.sentinels.reasoning_close),
                command_open=sentinels.get("command_open", cfg.sentinels.command_open),
                command_close=sentinels.get("command_close", cfg.sentinels.command_close),
            )
        paths = payload.get("paths", {})
        if paths.get("knowledge_base"):
            cfg.kb = KnowledgeBase.from_file(base_dir / paths["knowledge_base"])
        if paths.get("lexicon"):
            cfg.lexicon = Lexicon.from_file(base_dir / paths["lexicon"])
        if paths.get("ui_dist"):
            cfg.ui_dist = base_dir / paths["ui_dist"]
        if paths.get("profile_dir"):
            cfg.profile_dir = base_dir / paths["profile_dir"]
        sim = payload.get("sim", {})
        if sim:
            cfg.replan_every_minutes = float(sim.pop("replan_every_minutes", cfg.replan_every_minutes))
            cfg.sim_dt_minutes = float(sim.pop("dt_minutes", cfg.sim_dt_minutes))
            if sim:
                cfg.sim_params = SimParams.from_payload(sim)
        policy = payload.get("eval", {})
        if policy:
            cfg.pass_policy = PassPolicy(
                min_total=float(policy.get("min_total", 80.0)),
                forbid_zero_on_weight10=bool(policy.get("forbid_zero_on_weight10", True)),
            )
        if payload.get("backend_url"):
            cfg.backend_url = str(payload["backend_url"])
    env_url = os.environ.get(BACKEND_URL_ENV, "").strip()
    if env_url:
        cfg.backend_url = env_url
    if no_backend:
        cfg.backend_url = ""
    return cfg

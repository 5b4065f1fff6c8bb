"""Config loading: TOML and JSON files, env var resolution, backend gating."""

from __future__ import annotations

from airsteward.backend import BACKEND_URL_ENV
from airsteward.config import CONFIG_ENV, load_config


TOML_DOC = """
backend_url = "http://example.invalid/llm"

[sentinels]
reasoning_open = "<think>"
reasoning_close = "</think>"
command_open = "<act>"
command_close = "</act>"

[sim]
leakage_rate = 0.05
replan_every_minutes = 15
dt_minutes = 0.5

[eval]
min_total = 85
forbid_zero_on_weight10 = false
"""

JSON_DOC = """
{
  "sentinels": {"reasoning_open": "[R]", "reasoning_close": "[/R]",
                "command_open": "[C]", "command_close": "[/C]"},
  "sim": {"leakage_rate": 0.03},
  "eval": {"min_total": 75}
}
"""


class TestDefaults:
    def test_defaults_without_file(self):
        cfg = load_config(None)
        assert cfg.sentinels.reasoning_open == "<REASONING>"
        assert cfg.kb.thresholds.co2_ppm == 800
        assert cfg.pass_policy.min_total == 80.0
        assert not cfg.backend_enabled()


class TestFiles:
    def test_toml_file(self, tmp_path):
        path = tmp_path / "steward.toml"
        path.write_text(TOML_DOC, encoding="utf-8")
        cfg = load_config(path)
        assert cfg.sentinels.reasoning_open == "<think>"
        assert cfg.sim_params.leakage_rate == 0.05
        assert cfg.replan_every_minutes == 15
        assert cfg.sim_dt_minutes == 0.5
        assert cfg.pass_policy.min_total == 85
        assert cfg.pass_policy.forbid_zero_on_weight10 is False
        assert cfg.backend_url == "http://example.invalid/llm"

    def test_json_file(self, tmp_path):
        path = tmp_path / "steward.json"
        path.write_text(JSON_DOC, encoding="utf-8")
        cfg = load_config(path)
        assert cfg.sentinels.command_open == "[C]"
        assert cfg.sim_params.leakage_rate == 0.03
        assert cfg.pass_policy.min_total == 75

    def test_env_var_resolution(self, tmp_path, monkeypatch):
        path = tmp_path / "cfg.json"
        path.write_text('{"eval": {"min_total": 70}}', encoding="utf-8")
        monkeypatch.setenv(CONFIG_ENV, str(path))
        assert load_config(None).pass_policy.min_total == 70

    def test_kb_and_lexicon_paths_relative_to_config(self, tmp_path):
        import json
        from importlib import resources

        kb_raw = resources.files("airsteward.data").joinpath("knowledge_base.json") \
            .read_text(encoding="utf-8")
        kb_payload = json.loads(kb_raw)
        kb_payload["thresholds"]["co2_ppm"] = 900
        (tmp_path / "kb.json").write_text(json.dumps(kb_payload), encoding="utf-8")
        (tmp_path / "cfg.json").write_text(
            '{"paths": {"knowledge_base": "kb.json"}}', encoding="utf-8")
        cfg = load_config(tmp_path / "cfg.json")
        assert cfg.kb.thresholds.co2_ppm == 900


class TestBackendGating:
    def test_env_url_enables_backend(self, monkeypatch):
        monkeypatch.setenv(BACKEND_URL_ENV, "http://example.invalid/llm")
        assert load_config(None).backend_enabled()

    def test_no_backend_flag_wins(self, monkeypatch):
        monkeypatch.setenv(BACKEND_URL_ENV, "http://example.invalid/llm")
        assert not load_config(None, no_backend=True).backend_enabled()

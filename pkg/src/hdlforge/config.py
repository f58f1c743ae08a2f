"""Run configuration: JSON file + flag overrides, strict key checking.

Every run logs its fully resolved configuration next to its output so a
(config, seed) pair reproduces the run exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .forge import ForgeConfig
from .simrun import SimulatorConfig


class ConfigError(ValueError):
    pass


_SIMULATOR_KEYS = {"backend", "timeout_s", "jobs", "compile_cmd", "run_cmd"}
_PROVIDER_KEYS = {"mode", "script", "base_url", "model", "api_key_env"}
_REWRITE_KEYS = {"fraction", "seed", "provider"}
_REPAIR_KEYS = {"pairs", "seeds", "seeds_per_report", "out", "rng_seed"}
_EVAL_KEYS = {"tasks", "completions", "ks", "failure_regex", "success_regex", "out"}
_TOP_KEYS = {
    "seed", "out", "counts", "dc_probability", "n_weights",
    "fsm_state_counts", "fsm_input_widths", "verify", "template_db",
    "simulator", "rewrite", "provider", "repair", "eval",
}
_COUNT_KEYS = {"kmap", "fsm", "wave"}

DEFAULT_COUNTS = {"kmap": 12500, "fsm": 8000, "wave": 8000}


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


@dataclass
class RunConfig:
    seed: int = 0
    out: str | None = None
    counts: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    verify: str = "sample:0.05"
    template_db: str | None = None
    forge: ForgeConfig = field(default_factory=ForgeConfig)
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    rewrite_fraction: float = 0.0
    rewrite_seed: int = 0
    provider: dict = field(default_factory=dict)
    repair: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)

    def resolved_dict(self) -> dict:
        sim = self.simulator.resolved()
        return {
            "seed": self.seed,
            "out": self.out,
            "counts": dict(self.counts),
            "verify": self.verify,
            "template_db": self.template_db,
            "dc_probability": self.forge.dc_probability,
            "n_weights": {str(n): w for n, w in self.forge.n_weights},
            "fsm_state_counts": list(self.forge.fsm_state_counts),
            "fsm_input_widths": list(self.forge.fsm_input_widths),
            "simulator": {
                "backend": sim.backend,
                "timeout_s": sim.timeout_s,
                "jobs": sim.jobs,
                "compile_cmd": list(sim.compile_cmd or ()),
                "run_cmd": list(sim.run_cmd or ()),
            },
            "rewrite": {"fraction": self.rewrite_fraction, "seed": self.rewrite_seed},
            "provider": dict(self.provider),
            "repair": dict(self.repair),
            "eval": dict(self.eval),
        }


def _parse_verify(value: str) -> str:
    if value in ("off", "full"):
        return value
    if value.startswith("sample:"):
        try:
            fraction = float(value.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad verify setting {value!r}") from exc
        if not 0.0 <= fraction <= 1.0:
            raise ConfigError(f"verify sample fraction out of range: {fraction}")
        return value
    raise ConfigError(f"bad verify setting {value!r} (off | full | sample:<frac>)")


def load_config(path: str | None) -> RunConfig:
    data: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data)


def config_from_dict(data: dict) -> RunConfig:
    _check_keys(data, _TOP_KEYS, "config")
    cfg = RunConfig()
    cfg.seed = int(data.get("seed", 0))
    cfg.out = data.get("out")
    counts = data.get("counts", dict(DEFAULT_COUNTS))
    _check_keys(counts, _COUNT_KEYS, "counts")
    cfg.counts = {k: int(v) for k, v in counts.items()}
    cfg.verify = _parse_verify(str(data.get("verify", "sample:0.05")))
    cfg.template_db = data.get("template_db")

    forge_kwargs = {}
    if "dc_probability" in data:
        forge_kwargs["dc_probability"] = float(data["dc_probability"])
    if "n_weights" in data:
        weights = data["n_weights"]
        forge_kwargs["n_weights"] = tuple(
            (int(n), float(w)) for n, w in sorted(weights.items())
        )
    if "fsm_state_counts" in data:
        forge_kwargs["fsm_state_counts"] = tuple(int(v) for v in data["fsm_state_counts"])
    if "fsm_input_widths" in data:
        forge_kwargs["fsm_input_widths"] = tuple(int(v) for v in data["fsm_input_widths"])
    cfg.forge = ForgeConfig(**forge_kwargs)

    sim = data.get("simulator", {})
    _check_keys(sim, _SIMULATOR_KEYS, "simulator")
    cfg.simulator = SimulatorConfig(
        backend=sim.get("backend", "auto"),
        compile_cmd=tuple(sim["compile_cmd"]) if sim.get("compile_cmd") else None,
        run_cmd=tuple(sim["run_cmd"]) if sim.get("run_cmd") else None,
        timeout_s=float(sim.get("timeout_s", 30.0)),
        jobs=int(sim.get("jobs", 8)),
    )

    rewrite = data.get("rewrite", {})
    _check_keys(rewrite, _REWRITE_KEYS, "rewrite")
    cfg.rewrite_fraction = float(rewrite.get("fraction", 0.0))
    cfg.rewrite_seed = int(rewrite.get("seed", 0))
    if "provider" in rewrite:
        _check_keys(rewrite["provider"], _PROVIDER_KEYS, "rewrite.provider")

    provider = data.get("provider", {})
    _check_keys(provider, _PROVIDER_KEYS, "provider")
    cfg.provider = provider

    repair = data.get("repair", {})
    _check_keys(repair, _REPAIR_KEYS, "repair")
    cfg.repair = repair

    eval_section = data.get("eval", {})
    _check_keys(eval_section, _EVAL_KEYS, "eval")
    cfg.eval = eval_section
    return cfg


def build_provider(settings: dict):
    from .providers import HttpChatProvider, ScriptedProvider

    mode = settings.get("mode", "mock")
    if mode == "mock":
        script = settings.get("script")
        if not script:
            raise ConfigError("mock provider needs a 'script' path")
        return ScriptedProvider.from_file(script)
    if mode == "http":
        for key in ("base_url", "model"):
            if key not in settings:
                raise ConfigError(f"http provider needs {key!r}")
        kwargs = {}
        if "api_key_env" in settings:
            kwargs["api_key_env"] = settings["api_key_env"]
        return HttpChatProvider(settings["base_url"], settings["model"], **kwargs)
    raise ConfigError(f"unknown provider mode {mode!r}")

"""Experiment configuration: file grammar, defaults and resolution.

Config files are plain UTF-8, line oriented::

    # comment (also ';')
    [section]
    key = value

Sections: ``model``, ``simulation``, ``analysis``, ``continuation``,
``output``.  Unknown sections or keys, type mismatches and invariant
violations raise :class:`~vegtox.errors.ConfigError` carrying the source
line number.  Unspecified model keys fall back to the baseline parameter
set (g=10, c=0.5, R_hat=6, d=1, k=1, d_R=3.33, d_T=0.05, effects off);
every defaulted key is echoed into the run manifest.
"""

from __future__ import annotations

import dataclasses

from .continuation import ContinuationParameter, StepConfig, SteadyProblem
from .errors import ConfigError, ParameterError
from .model import ModelParams
from .solver import Grid, SimConfig, TimeScheme, stable_dt

__all__ = [
    "ExperimentConfig",
    "MODEL_DEFAULTS",
    "SCENARIOS",
    "parse_config",
    "resolve_config",
]

MODEL_DEFAULTS = {
    "g": 10.0, "gamma": 0.0, "d": 1.0, "s": 0.0, "c": 0.5, "k": 1.0,
    "d_R": 3.33, "sigma": 0.0, "d_T": 0.05, "R_hat": 6.0,
}

# scenario label -> (gamma, s, sigma)
SCENARIOS = {
    "i": (0.1, 0.5, 0.0),
    "ii": (0.1, 0.5, 3.0),
    "iii": (0.0, 0.5, 3.0),
    "iv": (0.1, 0.0, 3.0),
}


def _as_float(text):
    return float(text)


def _as_int(text):
    if "." in text or "e" in text.lower():
        raise ValueError("not an integer")
    return int(text)


def _as_bool(text):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("not a boolean")


def _as_str(text):
    return text.strip()


# (caster, default); _REQUIRED-free: everything has a usable default
_SCHEMA = {
    "model": {
        **{k: (_as_float, v) for k, v in MODEL_DEFAULTS.items()},
        "T_hat": (_as_float, None),
        "epsilon": (_as_float, None),
        "scenario": (_as_str, None),
    },
    "simulation": {
        "dim": (_as_int, 1),
        "n": (_as_int, None),            # 400 in 1D, 80 in 2D
        "L": (_as_float, 8.0),
        "dt": (_as_float, None),         # stability bound with safety 0.4
        "t_fin": (_as_float, 200.0),
        "output_every": (_as_float, 1.0),
        "snapshot_every": (_as_float, 50.0),
        "scheme": (_as_str, "exchange_implicit_euler"),
        "clamp_negative": (_as_bool, False),
        "seed": (_as_int, 1),
        "which": (_as_str, "limit"),
    },
    "analysis": {
        "n_modes": (_as_int, 64),
        "scan_gamma_min": (_as_float, 0.0),
        "scan_gamma_max": (_as_float, 10.0),
        "scan_s_min": (_as_float, 0.0),
        "scan_s_max": (_as_float, 1.0),
        "scan_resolution": (_as_int, 101),
    },
    "continuation": {
        "parameter": (_as_str, "sigma"),
        "p_min": (_as_float, None),      # defaults depend on the parameter
        "p_max": (_as_float, None),
        "n": (_as_int, 100),
        "ds0": (_as_float, 0.01),
        "ds_min": (_as_float, 1e-4),
        "ds_max": (_as_float, 0.1),
        "max_branches": (_as_int, 4),
        "max_points": (_as_int, 400),
    },
    "output": {
        "dir": (_as_str, "out"),
        "figures": (_as_bool, True),
    },
}


def parse_config(text: str) -> dict:
    """Parse the sectioned key/value grammar into ``{(section, key):
    (raw_value, line_number)}``, validating names and syntax only."""
    entries = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError("key/value outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key '{key}' in [{section}]", lineno)
        if (section, key) in entries:
            raise ConfigError(f"duplicate key '{key}' in [{section}]", lineno)
        entries[(section, key)] = (value, lineno)
    return entries


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment settings."""

    params: ModelParams
    scenario: str | None
    sim: dict
    analysis: dict
    continuation: dict
    out_dir: str
    figures: bool
    defaulted: tuple
    values: dict               # flat "section.key" -> resolved value

    def make_grid(self) -> Grid:
        n = self.sim["n"]
        if n is None:
            n = 400 if self.sim["dim"] == 1 else 80
        return Grid(self.sim["dim"], self.sim["L"], n)

    def make_sim_config(self, grid=None) -> SimConfig:
        grid = grid or self.make_grid()
        dt = self.sim["dt"]
        if dt is None:
            dt = stable_dt(grid, self.params)
        return SimConfig(grid, dt, self.sim["t_fin"],
                         output_every=self.sim["output_every"],
                         snapshot_every=self.sim["snapshot_every"],
                         scheme=TimeScheme(self.sim["scheme"]),
                         clamp_negative=self.sim["clamp_negative"])

    def make_problem(self) -> SteadyProblem:
        grid = Grid(1, self.sim["L"], self.continuation["n"])
        return SteadyProblem(grid, self.params,
                             ContinuationParameter(self.continuation["parameter"]))

    def continuation_range(self):
        """Traversal range ``(start, end)`` of the active parameter.

        Sweeps in sigma start low (the homogeneous branch destabilizes
        upward); sweeps in s start at the stable high-s side, so the
        branch that restabilizes the homogeneous state is switched first.
        """
        lo, hi = self.continuation["p_min"], self.continuation["p_max"]
        if self.continuation["parameter"] == "sigma":
            if lo is None:
                lo = 0.5 * self.params.d_R
            if hi is None:
                hi = 0.999 * self.params.d_R
            return float(lo), float(hi)
        cap = self.params.k / self.params.c - self.params.d
        if lo is None:
            lo = 0.0
        if hi is None:
            hi = 0.95 * cap
        return float(hi), float(lo)

    def step_config(self) -> StepConfig:
        c = self.continuation
        return StepConfig(ds0=c["ds0"], ds_min=c["ds_min"], ds_max=c["ds_max"],
                          max_points=c["max_points"])


def resolve_config(entries: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Apply defaults, expand the scenario shorthand, and build validated
    objects.  ``overrides`` maps ``(section, key)`` to raw strings (command
    line, no line numbers) and wins over file entries."""
    merged = dict(entries)
    for sk, raw in (overrides or {}).items():
        section, key = sk
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override {section}.{key}")
        merged[sk] = (raw, None)

    values = {}
    defaulted = []
    lines = {}
    for section, keys in _SCHEMA.items():
        for key, (cast, default) in keys.items():
            if (section, key) in merged:
                raw, lineno = merged[(section, key)]
                try:
                    values[f"{section}.{key}"] = cast(raw)
                except (ValueError, TypeError) as exc:
                    raise ConfigError(
                        f"bad value for {section}.{key}: {raw!r} ({exc})", lineno
                    ) from None
                lines[f"{section}.{key}"] = lineno
            else:
                values[f"{section}.{key}"] = default
                defaulted.append(f"{section}.{key}")

    scenario = values["model.scenario"]
    explicit_effects = [k for k in ("gamma", "s", "sigma")
                        if f"model.{k}" not in defaulted]
    if scenario is not None:
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario '{scenario}' "
                              f"(choose from {sorted(SCENARIOS)})",
                              lines.get("model.scenario"))
        if explicit_effects:
            raise ConfigError(
                "scenario shorthand conflicts with explicit "
                f"{explicit_effects} settings", lines.get("model.scenario"))
        gamma, s, sigma = SCENARIOS[scenario]
        values["model.gamma"], values["model.s"], values["model.sigma"] = gamma, s, sigma

    try:
        params = ModelParams(
            g=values["model.g"], gamma=values["model.gamma"], d=values["model.d"],
            s=values["model.s"], c=values["model.c"], k=values["model.k"],
            d_R=values["model.d_R"], sigma=values["model.sigma"],
            d_T=values["model.d_T"], R_hat=values["model.R_hat"],
            T_hat=values["model.T_hat"], epsilon=values["model.epsilon"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc

    sim = {k: values[f"simulation.{k}"] for k in _SCHEMA["simulation"]}
    if sim["dim"] not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {sim['dim']}",
                          lines.get("simulation.dim"))
    if sim["scheme"] not in [s.value for s in TimeScheme]:
        raise ConfigError(f"unknown scheme '{sim['scheme']}'",
                          lines.get("simulation.scheme"))
    if sim["which"] not in ("limit", "fast"):
        raise ConfigError(f"which must be 'limit' or 'fast', got '{sim['which']}'",
                          lines.get("simulation.which"))
    analysis = {k: values[f"analysis.{k}"] for k in _SCHEMA["analysis"]}
    cont = {k: values[f"continuation.{k}"] for k in _SCHEMA["continuation"]}
    if cont["parameter"] not in ("sigma", "s"):
        raise ConfigError(f"continuation parameter must be 'sigma' or 's', "
                          f"got '{cont['parameter']}'",
                          lines.get("continuation.parameter"))

    return ExperimentConfig(
        params=params, scenario=scenario, sim=sim, analysis=analysis,
        continuation=cont, out_dir=values["output.dir"],
        figures=values["output.figures"], defaulted=tuple(sorted(defaulted)),
        values=values)


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Read and resolve a config file; ``path=None`` means all defaults."""
    entries = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            entries = parse_config(fh.read())
    return resolve_config(entries, overrides)

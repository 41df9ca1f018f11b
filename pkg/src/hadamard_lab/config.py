"""Experiment configuration files.

A config is a YAML mapping (JSON is accepted too, being a YAML subset).
Top-level keys::

    scenario            str, required
    seed                int (default 0)
    space               space descriptor, e.g. {kind: euclidean, dim: 2}
    group               {kind: integers | integer_lattice (d) | cyclic (N) | heisenberg_Z}
    folner              {family: interval | box | custom (sets) | shrinking (length)}
    shulman_bound       float C (default 2.0)
    tempered_horizon    int N for the temperedness check (default 100)
    system              {kind: torus_rotation (rotations) | finite_permutation
                         (states | permutations, weights) | two_component (rotations)
                         | pseudorandom_shift}
    observable          {kind: circle | component_circles | hyperbolic_loop |
                         tripod_path | constant | table | coordinate_bit, ...params}
    omega_samples       int (default 20)
    schedule_exponent   int K, schedule n = 2^0 .. 2^K (default 14)
    tolerance           float (default 0.01)
    reference_precision float (default 1e-5)
    invariance_shift    int g; also compare limits from omega and T^g omega (optional)
    output_dir          str (default "out")
    maximal             {h: {kind: same | approximation, target_d2}, horizon,
                         omega_samples, alphas, audit_omegas} (optional)

Which keys are required depends on the command; a missing one is reported
with its dotted path.
"""
from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .dynamics import folner_from_dict, group_from_dict, system_from_dict
from .errors import DomainError
from .geometry import space_from_dict
from .observables import observable_from_dict

DEFAULTS = {
    "seed": 0,
    "shulman_bound": 2.0,
    "tempered_horizon": 100,
    "omega_samples": 20,
    "schedule_exponent": 14,
    "tolerance": 0.01,
    "reference_precision": 1e-5,
    "output_dir": "out",
}

CONVERGE_KEYS = ("scenario", "space", "group", "folner", "system", "observable")
FOLNER_KEYS = ("group", "folner")
MAXIMAL_KEYS = CONVERGE_KEYS + ("maximal",)


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-05`` as a float (YAML 1.2 / JSON style)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |[0-9][0-9_]*[eE][-+]?[0-9]+
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[-+]?\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


class ConfigError(ValueError):
    """Malformed or incomplete configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=dict)

    def __getitem__(self, key):
        if key in self.data:
            return self.data[key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        raise ConfigError(key, "missing field")

    def get(self, key, default=None):
        try:
            return self[key]
        except ConfigError:
            return default

    def require(self, keys):
        for key in keys:
            if key not in self.data:
                raise ConfigError(key, "missing field")

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dumps(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)

    # builders; KeyErrors inside become ConfigErrors with a dotted path
    def _build(self, key, fn):
        section = self[key]
        if not isinstance(section, dict):
            raise ConfigError(key, "expected a mapping")
        try:
            return fn(section)
        except KeyError as exc:
            raise ConfigError(f"{key}.{exc.args[0]}", "missing field") from None
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from None

    def space(self):
        return self._build("space", space_from_dict)

    def group(self):
        return self._build("group", group_from_dict)

    def folner(self):
        group = self.group()
        return self._build("folner", lambda d: folner_from_dict(group, d))

    def system(self):
        group = self.group()
        return self._build("system", lambda d: system_from_dict(d, group, d.get("allow_pseudorandom", False)))

    def observable(self, system=None):
        system = system or self.system()
        space = self.space() if "space" in self.data else None
        return self._build("observable", lambda d: observable_from_dict(system, d, space))


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"cannot parse config: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a mapping")
    return ExperimentConfig(data)


def shipped_configs() -> list[str]:
    root = resources.files("hadamard_lab") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve(path_or_name: str) -> Path:
    """A filesystem path, or the name of a shipped config (with or without ``.cfg``)."""
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.name if p.name.endswith(".cfg") else p.name + ".cfg"
    shipped = resources.files("hadamard_lab") / "configs" / name
    if shipped.is_file():
        return Path(str(shipped))
    raise ConfigError("", f"no such config: {path_or_name}")


def load(path_or_name: str) -> ExperimentConfig:
    return loads(resolve(path_or_name).read_text(encoding="utf-8"))

"""Loading system definitions and experiment settings from JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from pressurelab.errors import ValidationError
from pressurelab.markovdv import MarkovGenerator
from pressurelab.shiftspace import LocallyConstantPotential, SubshiftSystem

CANNED = ("full_shift", "golden_mean", "two_state", "four_state")


@dataclass
class ExperimentConfig:
    name: str
    system: SubshiftSystem | MarkovGenerator
    potentials: dict[str, LocallyConstantPotential] = field(default_factory=dict)
    V: list[float] | None = None
    settings: dict[str, Any] = field(default_factory=dict)

    @property
    def is_markov(self) -> bool:
        return isinstance(self.system, MarkovGenerator)

    def potential(self, name: str) -> LocallyConstantPotential:
        try:
            return self.potentials[name]
        except KeyError:
            raise ValidationError(
                f"potential {name!r} is not defined; known: {sorted(self.potentials)}"
            ) from None


def canned_path(name: str) -> Path:
    return Path(str(resources.files("pressurelab") / "data" / f"{name}.json"))


def _increasing(values, label):
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ValidationError(f"{label} must be a nonempty increasing list")


def parse_config(doc: dict, default_name: str = "config") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    name = str(doc.get("name", default_name))
    settings = doc.get("experiment", {})
    if "Q" in doc:
        L = MarkovGenerator(doc["Q"])
        V = [float(v) for v in doc.get("V", [0.0] * L.n)]
        if len(V) != L.n:
            raise ValidationError(f"V has {len(V)} entries but Q has {L.n} states")
        if "t_list" in settings:
            _increasing(settings["t_list"], "t_list")
        return ExperimentConfig(name, L, V=V, settings=settings)
    if "A" not in doc:
        raise ValidationError("config needs either a transition table 'A' or a rate matrix 'Q'")
    S = SubshiftSystem(doc["A"])
    if "k" in doc and int(doc["k"]) != S.k:
        raise ValidationError(f"k={doc['k']} does not match the {S.k}x{S.k} table")
    potentials = {
        pname: LocallyConstantPotential.from_json(S, pdoc)
        for pname, pdoc in doc.get("potentials", {}).items()
    }
    cfg = ExperimentConfig(name, S, potentials=potentials, settings=settings)
    if "potential" in settings:
        cfg.potential(settings["potential"])
    if "n_list" in settings:
        _increasing(settings["n_list"], "n_list")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc, default_name=path.stem)


def load_canned(name: str) -> ExperimentConfig:
    return load_config(canned_path(name))

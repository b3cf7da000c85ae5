"""Run configuration: JSON documents layered over built-in presets."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

from .dynamics import CircleMapSpec
from .presets import PRESETS, preset
from .weierstrass import ObservableSpec, TruncationPolicy

DEFAULT_SECTIONS = {
    "truncation": {"tol": 1e-12, "max_terms": 200},
    "ulam": {"m": 2**14, "tol": 1e-12},
    "variance": {"n_max": 64, "term_tol": 1e-10, "mc_n": 1000, "mc_samples": 20_000},
    "classify": {"p_max": None, "orbit_tol": 1e-8, "sigma_tol": 1e-6},
    "clt": {"h_list": [2.0**-8, 2.0**-14, 2.0**-20], "n_samples": 100_000},
    "lil": {"n_points": 10, "k_min": 4, "k_max": 30},
    "zygmund": {"k_min": 4, "k_max": 20, "n_x": 1000},
    "residual": {"k_min": 6, "k_max": 24, "n_x": 1000},
    "eval": {"grid_exp": 10, "points": None},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class RunConfig:
    map: CircleMapSpec
    observable: ObservableSpec
    preset: str | None = None
    sections: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_SECTIONS))
    hoelder_eps: float = 0.5
    seed: int | None = 1
    out_dir: str = "out"

    def __post_init__(self):
        unknown = set(self.sections) - set(DEFAULT_SECTIONS)
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        for name, defaults in DEFAULT_SECTIONS.items():
            sec = self.sections.setdefault(name, {})
            bad = set(sec) - set(defaults)
            if bad:
                raise ValueError(f"unknown keys in section {name!r}: {sorted(bad)}")
            for key, val in defaults.items():
                sec.setdefault(key, copy.deepcopy(val))

    def __getitem__(self, name):
        return self.sections[name]

    @property
    def policy(self) -> TruncationPolicy:
        t = self.sections["truncation"]
        return TruncationPolicy(tol=float(t["tol"]), max_terms=int(t["max_terms"]))

    def to_dict(self) -> dict:
        out = {
            "preset": self.preset,
            "map": self.map.to_dict(),
            "observable": self.observable.to_dict(),
            "hoelder_eps": self.hoelder_eps,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }
        out.update(copy.deepcopy(self.sections))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        name = data.get("preset")
        if name is not None:
            pmap, pobs = preset(name)
            base = {"map": pmap.to_dict(), "observable": pobs.to_dict()}
        else:
            base = {}
        if "map" in data or "observable" in data:
            base = _merge(base, {k: data[k] for k in ("map", "observable") if k in data})
        if "map" not in base or "observable" not in base:
            raise ValueError(f"config needs a preset (one of {sorted(PRESETS)}) or map+observable")
        known = {"preset", "map", "observable", "hoelder_eps", "seed", "out_dir"}
        sections = {k: v for k, v in data.items() if k not in known}
        return cls(
            map=CircleMapSpec.from_dict(base["map"]),
            observable=ObservableSpec.from_dict(base["observable"]),
            preset=name,
            sections=_merge(DEFAULT_SECTIONS, sections),
            hoelder_eps=float(data.get("hoelder_eps", 0.5)),
            seed=data.get("seed", 1),
            out_dir=data.get("out_dir", "out"),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def load_config(path: str | None = None, preset_name: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Layer: preset -> config file -> explicit overrides."""
    data: dict = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    if preset_name is not None:
        data["preset"] = preset_name
    if overrides:
        data = _merge(data, overrides)
    if "preset" not in data and "map" not in data:
        data["preset"] = "classic"
    return RunConfig.from_dict(data)

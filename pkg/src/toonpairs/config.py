"""Dataset build configuration.

The JSON config has one object per section; every field has a default::

    {
      "seed": 0, "jobs": 4, "paper_exact": false,
      "inputs": {"root": "fixture"},
      "backend": {"kind": "cartoonize", "levels": 8},
      "synthesis": {"feather_radius": 3},
      "correction": {"apply_region": "whole_image", "channels": ["L", "a", "b"]},
      "cutface": {"ratio": 0.25, "landscapes": "fixture/landscapes"},
      "analysis": {"enabled": true},
      "output": {"dir": "out"}
    }

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends import BackendSpec
from .correct import CHANNELS, CorrectionParams
from .errors import ConfigError


@dataclass
class InputsConfig:
    root: str = ""
    sources: str = "sources"
    heads: str = "heads"
    masks: str = "masks"
    face_masks: str = "face_masks"
    records: list = field(default_factory=list)


@dataclass
class SynthesisConfig:
    feather_radius: int = 3
    linear_blend: bool = False


@dataclass
class CorrectionConfig:
    enabled: bool = True
    apply_region: str = "whole_image"
    channels: list = field(default_factory=lambda: list(CHANNELS))


@dataclass
class CutFaceConfig:
    ratio: float = 0.25
    k_min: int = 1
    k_max: int = 3
    scale_min: float = 0.25
    scale_max: float = 0.5
    max_attempts: int = 100
    max_restarts: int = 10
    landscapes: str = ""


@dataclass
class AnalysisConfig:
    enabled: bool = False
    bins: int = 64
    plots: bool = True
    mask_corpus: str = ""


@dataclass
class OutputConfig:
    dir: str = "out"


SECTIONS = {
    "inputs": InputsConfig,
    "backend": BackendSpec,
    "synthesis": SynthesisConfig,
    "correction": CorrectionConfig,
    "cutface": CutFaceConfig,
    "analysis": AnalysisConfig,
    "output": OutputConfig,
}
TOP_LEVEL = {"seed": 0, "jobs": None, "paper_exact": False}


@dataclass
class DatasetConfig:
    inputs: InputsConfig = field(default_factory=InputsConfig)
    backend: BackendSpec = field(default_factory=BackendSpec)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    correction: CorrectionConfig = field(default_factory=CorrectionConfig)
    cutface: CutFaceConfig = field(default_factory=CutFaceConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    jobs: int | None = None
    paper_exact: bool = False
    base_dir: str = "."

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "DatasetConfig":
        unknown = set(data) - set(SECTIONS) - set(TOP_LEVEL)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, klass in SECTIONS.items():
            section = data.get(name, {}) or {}
            if not isinstance(section, dict):
                raise ConfigError(f"section {name!r} must be an object")
            known = {f.name for f in dataclasses.fields(klass)}
            bad = set(section) - known
            if bad:
                raise ConfigError(f"unknown keys in {name!r}: {sorted(bad)}")
            try:
                kwargs[name] = klass(**section)
            except TypeError as exc:
                raise ConfigError(f"section {name!r}: {exc}") from exc
        for key, default in TOP_LEVEL.items():
            kwargs[key] = data.get(key, default)
        cfg = cls(**kwargs, base_dir=str(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "DatasetConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data, base_dir=path.parent)

    def replace(self, section: str | None = None, **changes) -> "DatasetConfig":
        """Copy with fields of one section (or top-level keys when ``section`` is None) overridden.

        All changes to a section are applied together, so dependent fields
        such as ``backend.kind`` and ``backend.directory`` validate as a unit.
        """
        if section is None:
            new = dataclasses.replace(self, **changes)
        else:
            try:
                sub = dataclasses.replace(getattr(self, section), **changes)
            except TypeError as exc:
                raise ConfigError(f"section {section!r}: {exc}") from exc
            new = dataclasses.replace(self, **{section: sub})
        new.validate()
        return new

    def validate(self):
        try:
            self.seed = int(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"seed must be an integer, got {self.seed!r}") from exc
        if self.jobs is not None and int(self.jobs) < 1:
            raise ConfigError("jobs must be >= 1")
        if int(self.synthesis.feather_radius) < 0:
            raise ConfigError("feather_radius must be >= 0")
        CorrectionParams(self.correction.apply_region, tuple(self.correction.channels))
        c = self.cutface
        if not 0.0 <= float(c.ratio) <= 1.0:
            raise ConfigError("cutface.ratio must lie in [0, 1]")
        if not 1 <= int(c.k_min) <= int(c.k_max):
            raise ConfigError("cutface needs 1 <= k_min <= k_max")
        if not 0.0 < float(c.scale_min) <= float(c.scale_max) <= 1.0:
            raise ConfigError("cutface needs 0 < scale_min <= scale_max <= 1")
        if int(c.max_attempts) < 1 or int(c.max_restarts) < 0:
            raise ConfigError("cutface needs max_attempts >= 1 and max_restarts >= 0")
        if int(self.analysis.bins) < 2:
            raise ConfigError("analysis.bins must be >= 2")
        if not self.inputs.root and not self.inputs.records:
            raise ConfigError("inputs needs either a root directory or a records list")

    def effective(self) -> "DatasetConfig":
        """Config with paper-exact overrides applied (feather 0, whole image, no CutFace)."""
        if not self.paper_exact:
            return self
        return dataclasses.replace(
            self,
            synthesis=dataclasses.replace(self.synthesis, feather_radius=0, linear_blend=False),
            correction=dataclasses.replace(self.correction, enabled=True, apply_region="whole_image", channels=list(CHANNELS)),
            cutface=dataclasses.replace(self.cutface, ratio=0.0),
        )

    def resolve(self, path) -> Path:
        p = Path(os.path.expanduser(str(path)))
        return p if p.is_absolute() else (Path(self.base_dir) / p)

    @property
    def job_count(self) -> int:
        return int(self.jobs) if self.jobs else (os.cpu_count() or 1)

    def correction_params(self) -> CorrectionParams:
        return CorrectionParams(self.correction.apply_region, tuple(self.correction.channels))

    def backend_spec(self) -> BackendSpec:
        b = self.backend
        if b.kind == "precomputed_dir":
            return dataclasses.replace(b, directory=str(self.resolve(b.directory)))
        return b

    def fingerprint(self) -> dict:
        """Output-relevant settings, echoed into the manifest (no jobs, no output dir)."""
        eff = self.effective()
        return {
            "synthesis": dataclasses.asdict(eff.synthesis),
            "correction": dataclasses.asdict(eff.correction),
            "cutface": {k: v for k, v in dataclasses.asdict(eff.cutface).items() if k != "landscapes"},
        }

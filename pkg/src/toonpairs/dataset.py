"""Batch dataset builder and input validation.

Every record goes through stylize -> measure -> correct -> compose; a
seeded subset additionally yields a CutFace pair. Records are processed
in a thread pool and only the manifest assembly is sequential, so output
bytes never depend on the number of workers.

Output layout::

    out/src/<id>.png       source photo (X_src)
    out/tgt/<id>.png       target (composed, color corrected)
    out/masks/<id>.png     head mask used for the pair
    out/manifest.json      written last, atomically
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import distribution_report
from .backends import stylize
from .config import DatasetConfig
from .correct import reflect_input_color
from .cutface import apply_cutface, crop_to_mask, pair_cutface_source, plan_cutface, resize, scaled_dims
from .errors import ConfigError, DecodeError, DimensionMismatch, EmptyRegion, ToonPairsError
from .imageio import read_image, write_png
from .masks import load_mask
from .synthesis import compose

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
IMAGE_EXTS = (".png", ".bmp", ".tif", ".tiff", ".ppm", ".pgm")


@dataclass(frozen=True)
class RecordInputs:
    record_id: str
    source_path: Path
    head_styled_path: Path
    mask_path: Path
    face_stats_mask_path: Path | None = None

    def to_dict(self) -> dict:
        d = {"source": str(self.source_path), "head_styled": str(self.head_styled_path), "mask": str(self.mask_path)}
        if self.face_stats_mask_path is not None:
            d["face_stats_mask"] = str(self.face_stats_mask_path)
        return d


@dataclass
class Issue:
    record_id: str
    kind: str
    message: str

    def __str__(self):
        return f"{self.record_id}: {self.kind}: {self.message}"


def record_seed(global_seed, *parts) -> int:
    """Stable 64-bit seed derived from the global seed and a record key."""
    key = ":".join([str(int(global_seed))] + [str(p) for p in parts]).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def _find(directory: Path, stem: str):
    for ext in IMAGE_EXTS:
        p = directory / f"{stem}{ext}"
        if p.exists():
            return p
    return None


def list_records(cfg: DatasetConfig) -> list[RecordInputs]:
    """Resolve the configured inputs into records sorted by id."""
    inp = cfg.inputs
    records = []
    if inp.records:
        for item in inp.records:
            try:
                records.append(
                    RecordInputs(
                        str(item["record_id"]),
                        cfg.resolve(item["source"]),
                        cfg.resolve(item["head_styled"]),
                        cfg.resolve(item["mask"]),
                        cfg.resolve(item["face_stats_mask"]) if item.get("face_stats_mask") else None,
                    )
                )
            except KeyError as exc:
                raise ConfigError(f"input record is missing {exc}") from exc
    else:
        root = cfg.resolve(inp.root)
        src_dir = root / inp.sources
        if not src_dir.is_dir():
            raise ConfigError(f"source directory {src_dir} does not exist")
        face_dir = root / inp.face_masks
        for p in sorted(src_dir.iterdir()):
            if p.suffix.lower() not in IMAGE_EXTS:
                continue
            rid = p.stem
            head = _find(root / inp.heads, rid) or (root / inp.heads / f"{rid}.png")
            mask = _find(root / inp.masks, rid) or (root / inp.masks / f"{rid}.png")
            face = _find(face_dir, rid) if face_dir.is_dir() else None
            records.append(RecordInputs(rid, p, head, mask, face))
    ids = [r.record_id for r in records]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ConfigError(f"duplicate record ids: {dupes}")
    return sorted(records, key=lambda r: r.record_id)


def list_landscapes(cfg: DatasetConfig) -> list[Path]:
    if not cfg.cutface.landscapes:
        return []
    d = cfg.resolve(cfg.cutface.landscapes)
    if not d.is_dir():
        raise ConfigError(f"landscape directory {d} does not exist")
    return sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_EXTS)


def load_record(rec: RecordInputs):
    """Read and cross-check one record; returns ``(source, head, mask, stats_mask)``."""
    src = read_image(rec.source_path)
    head = read_image(rec.head_styled_path)
    if head.shape != src.shape:
        raise DimensionMismatch(
            f"head image is {head.shape[1]}x{head.shape[0]}, source is {src.shape[1]}x{src.shape[0]}"
        )
    mask = load_mask(rec.mask_path, src.shape)
    stats_mask = mask
    if rec.face_stats_mask_path is not None:
        stats_mask = load_mask(rec.face_stats_mask_path, src.shape)
    return src, head, mask, stats_mask


# -- validation -------------------------------------------------------------------


def validate_inputs(cfg: DatasetConfig) -> list[Issue]:
    """Check that every record's files exist, decode and agree in size."""
    issues = []
    try:
        records = list_records(cfg)
    except ConfigError as exc:
        return [Issue("*", "ConfigError", str(exc))]
    if not records:
        issues.append(Issue("*", "EmptyInput", "no input records found"))
    for rec in records:
        missing = [
            p for p in (rec.source_path, rec.head_styled_path, rec.mask_path, rec.face_stats_mask_path)
            if p is not None and not p.exists()
        ]
        if missing:
            issues.extend(Issue(rec.record_id, "MissingFile", str(p)) for p in missing)
            continue
        try:
            _, _, mask, stats_mask = load_record(rec)
        except DimensionMismatch as exc:
            issues.append(Issue(rec.record_id, "DimensionMismatch", str(exc)))
            continue
        except DecodeError as exc:
            issues.append(Issue(rec.record_id, "DecodeError", str(exc)))
            continue
        if not stats_mask.sum() > 0 or not mask.sum() > 0:
            issues.append(Issue(rec.record_id, "EmptyRegion", "head mask selects no pixels"))
    eff = cfg.effective()
    if eff.cutface.ratio > 0:
        try:
            if not list_landscapes(eff):
                issues.append(Issue("*", "ConfigError", "cutface.ratio > 0 but no landscape images configured"))
        except ConfigError as exc:
            issues.append(Issue("*", "ConfigError", str(exc)))
    return issues


# -- build --------------------------------------------------------------------------


def _sha(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _lab_list(c):
    return [float(v) for v in c]


class _Builder:
    def __init__(self, cfg: DatasetConfig):
        self.cfg = cfg.effective()
        self.out = cfg.resolve(cfg.output.dir)
        self.backend = self.cfg.backend_spec()
        self.params = self.cfg.correction_params()
        self.records = list_records(self.cfg)
        self.by_id = {r.record_id: r for r in self.records}
        self._landscape_cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _write(self, name, arr):
        payload = write_png(self.out / name, arr)
        return _sha(payload)

    def _prepare(self, rec):
        src, head, mask, stats_mask = load_record(rec)
        if self.cfg.correction.enabled:
            corrected, delta, s_stats, t_stats = reflect_input_color(src, head, mask, self.params, stats_mask)
        else:
            corrected, delta, s_stats, t_stats = head, np.zeros(3), None, None
        return src, head, mask, corrected, delta, s_stats, t_stats

    # composed pairs

    def composed(self, rec: RecordInputs) -> dict:
        entry = {"record_id": rec.record_id, "kind": "composed", "inputs": rec.to_dict()}
        try:
            src, head, mask, corrected, delta, s_stats, t_stats = self._prepare(rec)
            styled = stylize(src, self.backend, key=rec.record_id)
            target = compose(
                corrected, styled.image, mask, self.cfg.synthesis.feather_radius, self.cfg.synthesis.linear_blend
            )
        except (ToonPairsError, OSError) as exc:
            entry["skip_reason"] = _reason(exc)
            logger.warning("skipping %s: %s", rec.record_id, entry["skip_reason"])
            return entry
        names = {k: f"{k_dir}/{rec.record_id}.png" for k, k_dir in (("source", "src"), ("target", "tgt"), ("mask", "masks"))}
        hashes = {
            "source": self._write(names["source"], src),
            "target": self._write(names["target"], target),
            "mask": self._write(names["mask"], mask),
        }
        entry["outputs"] = names
        entry["hashes"] = hashes
        entry["background"] = {"backend_id": styled.backend_id, "content_hash": styled.content_hash}
        entry["correction"] = {
            "enabled": bool(self.cfg.correction.enabled),
            "apply_region": self.params.apply_region,
            "channels": list(self.params.channels),
            "stats_mask": "face_stats_mask" if rec.face_stats_mask_path is not None else "head_mask",
            "delta": _lab_list(delta),
            "source_mean": _lab_list(s_stats.mean) if s_stats else None,
            "target_mean": _lab_list(t_stats.mean) if t_stats else None,
        }
        entry["feather_radius"] = int(self.cfg.synthesis.feather_radius)
        return entry

    # CutFace pairs

    def _landscape(self, path: Path):
        key = path.stem
        with self._lock:
            cached = self._landscape_cache.get(key)
        if cached is not None:
            return cached
        src = read_image(path)
        styled = stylize(src, self.backend, key=key).image
        with self._lock:
            self._landscape_cache.setdefault(key, (src, styled))
            return self._landscape_cache[key]

    def cutface(self, rec: RecordInputs, donors_pool: list[str], landscapes: list[Path]) -> dict:
        c = self.cfg.cutface
        rid = f"{rec.record_id}_cf0"
        seed = record_seed(self.cfg.seed, rec.record_id, "cutface")
        entry = {"record_id": rid, "kind": "cutface", "base_record": rec.record_id, "seed": seed}
        rng = np.random.default_rng(seed)
        try:
            if not landscapes:
                raise ConfigError("no landscape images available")
            land_path = landscapes[int(rng.integers(len(landscapes)))]
            others = [d for d in donors_pool if d != rec.record_id]
            k = int(rng.integers(int(c.k_min), int(c.k_max) + 1))
            k = min(k, len(others) + 1)
            donors = [rec.record_id] + [others[i] for i in sorted(rng.choice(len(others), k - 1, replace=False))]
            scales = [float(rng.uniform(c.scale_min, c.scale_max)) for _ in donors]
            entry["landscape"] = land_path.stem
            entry["k"] = k
            land_src, land_styled = self._landscape(land_path)
            canvas = land_src.shape[:2]

            src_faces, tgt_faces, face_info = [], [], []
            for donor, scale in zip(donors, scales):
                src, _, mask, corrected, *_ = self._prepare(self.by_id[donor])
                m, s_crop, t_crop = crop_to_mask(mask, src, corrected)
                h, w = scaled_dims(m.shape, scale * canvas[0], canvas)
                m = resize(m, h, w)
                src_faces.append((resize(s_crop, h, w), m))
                tgt_faces.append((resize(t_crop, h, w), m))
                face_info.append({"record_id": donor, "scale": scale, "height": h, "width": w})
            entry["faces"] = face_info
            layout = plan_cutface(
                canvas, [f[0].shape[:2] for f in tgt_faces], k, seed, int(c.max_attempts), int(c.max_restarts)
            )
            radius = self.cfg.synthesis.feather_radius
            target, union = apply_cutface(land_styled, tgt_faces, layout, radius)
            source = pair_cutface_source(land_src, src_faces, layout, radius)
        except (ToonPairsError, OSError, ValueError) as exc:
            entry["skip_reason"] = _reason(exc)
            logger.warning("skipping %s: %s", rid, entry["skip_reason"])
            return entry
        names = {"source": f"src/{rid}.png", "target": f"tgt/{rid}.png", "mask": f"masks/{rid}.png"}
        entry["layout"] = layout.to_dict()
        entry["outputs"] = names
        entry["hashes"] = {
            "source": self._write(names["source"], source),
            "target": self._write(names["target"], target),
            "mask": self._write(names["mask"], union),
        }
        return entry


def _reason(exc) -> str:
    text = f"{type(exc).__name__}: {exc}"
    diag = getattr(exc, "diagnostics", "")
    return f"{text} [{diag}]" if diag else text


def select_cutface_records(record_ids, ratio, global_seed) -> list[str]:
    """Pick ``floor(ratio * n)`` record ids with a seeded permutation."""
    n_aug = int(math.floor(float(ratio) * len(record_ids) + 1e-9))
    if n_aug == 0:
        return []
    rng = np.random.default_rng(record_seed(global_seed, "cutface-selection"))
    order = rng.permutation(len(record_ids))
    return sorted(record_ids[i] for i in order[:n_aug])


def _write_json_atomic(path: Path, data) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def build_dataset(cfg: DatasetConfig) -> dict:
    """Build the dataset described by ``cfg`` and return the manifest.

    Per-record failures become ``skip_reason`` entries. An unwritable
    output directory or an invalid config raises.
    """
    builder = _Builder(cfg)
    eff = builder.cfg
    if not builder.records:
        raise ConfigError("no input records found")
    out = builder.out
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    manifest_path = out / "manifest.json"
    # a stale manifest must not describe files this run is about to replace
    if manifest_path.exists():
        manifest_path.unlink()

    landscapes = list_landscapes(eff) if eff.cutface.ratio > 0 else []
    if eff.cutface.ratio > 0 and not landscapes:
        raise ConfigError("cutface.ratio > 0 needs a non-empty cutface.landscapes directory")

    jobs = cfg.job_count
    logger.info("building %d records with %d workers", len(builder.records), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        composed = list(pool.map(builder.composed, builder.records))
        ok_ids = [e["record_id"] for e in composed if "skip_reason" not in e]
        chosen = select_cutface_records([r.record_id for r in builder.records], eff.cutface.ratio, eff.seed)
        augmented = list(pool.map(lambda rid: builder.cutface(builder.by_id[rid], ok_ids, landscapes), chosen))
    entries = sorted(composed + augmented, key=lambda e: (e["record_id"], e["kind"]))
    manifest = {
        "version": MANIFEST_VERSION,
        "global_seed": int(eff.seed),
        "paper_exact": bool(eff.paper_exact),
        "backend": {"spec": builder.backend.identity_fields(), "hash": builder.backend.digest()},
        "config": eff.fingerprint(),
        "entries": entries,
        "summary": summarize(entries, len(builder.records)),
    }
    _write_json_atomic(manifest_path, manifest)
    logger.info("wrote %s", manifest_path)

    if eff.analysis.enabled:
        mask_corpus = cfg.resolve(eff.analysis.mask_corpus) if eff.analysis.mask_corpus else None
        distribution_report(out, out / "report", bins=eff.analysis.bins, mask_corpus=mask_corpus, plots=eff.analysis.plots)
    return manifest


def summarize(entries, n_records) -> dict:
    ok = [e for e in entries if "skip_reason" not in e]
    return {
        "records": int(n_records),
        "composed": sum(e["kind"] == "composed" for e in ok),
        "cutface": sum(e["kind"] == "cutface" for e in ok),
        "skipped": len(entries) - len(ok),
        "skipped_composed": sum(e["kind"] == "composed" and "skip_reason" in e for e in entries),
        "skipped_cutface": sum(e["kind"] == "cutface" and "skip_reason" in e for e in entries),
    }


def load_manifest(path) -> dict:
    """Read a manifest, refusing schema versions this code does not understand."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    data = json.loads(path.read_text())
    version = data.get("version")
    if not isinstance(version, int) or version != MANIFEST_VERSION:
        raise ConfigError(f"{path}: unsupported manifest version {version!r}")
    return data


def check_manifest(out_dir) -> list[str]:
    """List violations of the manifest invariants for a built dataset."""
    out_dir = Path(out_dir)
    m = load_manifest(out_dir)
    problems = []
    seen = set()
    for e in m["entries"]:
        outs = e.get("outputs")
        if "skip_reason" in e:
            if outs:
                problems.append(f"{e['record_id']}: skipped entry lists outputs")
            continue
        for name in outs.values():
            if name in seen:
                problems.append(f"{name} claimed by more than one entry")
            seen.add(name)
            if not (out_dir / name).exists():
                problems.append(f"{name} is missing")
    if summarize(m["entries"], m["summary"]["records"]) != m["summary"]:
        problems.append("summary counts do not match entries")
    return problems

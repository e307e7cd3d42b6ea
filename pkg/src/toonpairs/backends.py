"""Stylizer backends.

Background stylization and any other image-to-image model enter the
pipeline through :func:`stylize`. Built-in kinds are pure numpy:

``identity``
    returns the input unchanged.
``cartoonize``
    a classical cartoon filter (selective-mean smoothing, uniform
    quantization, Sobel ink lines).
``external_command``
    runs a user command that reads ``{in}`` and writes ``{out}``.
``precomputed_dir``
    looks up ``<directory>/<key>.png``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shlex
import subprocess
import tempfile
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .color import check_image
from .errors import ConfigError, DecodeError, ExternalBackendFailure, MissingPrecomputed
from .imageio import read_image, to_uint8, write_png

logger = logging.getLogger(__name__)

KINDS = ("identity", "cartoonize", "external_command", "precomputed_dir")


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "cartoonize"
    levels: int = 8
    edge_threshold: float = 0.35
    smoothing_iterations: int = 3
    smoothing_tolerance: float = 0.1
    command: str = ""
    directory: str = ""
    max_concurrent: int = field(default_factory=lambda: os.cpu_count() or 1)
    timeout: float = 600.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown backend kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "cartoonize":
            if int(self.levels) < 1:
                raise ConfigError("cartoonize levels must be >= 1")
            if not 0.0 <= float(self.edge_threshold) <= 1.0:
                raise ConfigError("cartoonize edge_threshold must lie in [0, 1]")
            if int(self.smoothing_iterations) < 0:
                raise ConfigError("smoothing_iterations must be >= 0")
        if self.kind == "external_command":
            if "{in}" not in self.command or "{out}" not in self.command:
                raise ConfigError("external command template needs {in} and {out} placeholders")
        if self.kind == "precomputed_dir" and not self.directory:
            raise ConfigError("precomputed_dir backend needs a directory")
        if int(self.max_concurrent) < 1:
            raise ConfigError("max_concurrent must be >= 1")

    def identity_fields(self) -> dict:
        """Fields that influence the output (concurrency limits excluded)."""
        d = asdict(self)
        d.pop("max_concurrent")
        d.pop("timeout")
        if self.kind != "cartoonize":
            for k in ("levels", "edge_threshold", "smoothing_iterations", "smoothing_tolerance"):
                d.pop(k)
        if self.kind != "external_command":
            d.pop("command")
        if self.kind != "precomputed_dir":
            d.pop("directory")
        return d

    @property
    def backend_id(self) -> str:
        return f"{self.kind}:{self.digest()[:12]}"

    def digest(self) -> str:
        blob = json.dumps(self.identity_fields(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class StylizedResult:
    image: np.ndarray
    backend_id: str
    content_hash: str


def _content_hash(img, spec, key):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(img, dtype=np.float64).tobytes())
    h.update(str(img.shape).encode())
    h.update(spec.digest().encode())
    if spec.kind == "precomputed_dir":
        h.update(str(key).encode())
    return h.hexdigest()


# -- cartoonize ---------------------------------------------------------------


def _neighbours(img):
    h, w = img.shape[:2]
    p = np.pad(img, ((1, 1), (1, 1), (0, 0)), mode="edge")
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            yield p[dy : dy + h, dx : dx + w]


def selective_mean(img, tolerance=0.1):
    """One pass of a 3x3 selective mean (sigma) filter.

    Each pixel becomes the mean of those neighbours whose largest channel
    difference from it is at most ``tolerance``; the pixel itself always
    qualifies, so edges between flat regions survive.
    """
    acc = np.zeros_like(img)
    count = np.zeros(img.shape[:2])
    for nb in _neighbours(img):
        ok = np.abs(nb - img).max(axis=2) <= tolerance
        acc += nb * ok[..., None]
        count += ok
    return acc / count[..., None]


def quantize(img, levels):
    """Snap each channel to the centre ``(i + 0.5) / levels`` of its level.

    ``levels >= 256`` is finer than 8-bit storage and leaves values alone.
    """
    if levels >= 256:
        return img.copy()
    idx = np.minimum(np.floor(img * levels), levels - 1)
    return (idx + 0.5) / levels


def sobel_magnitude(img):
    """Sobel gradient magnitude of the luma, scaled so it lies in [0, 1]."""
    luma = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    p = np.pad(luma, 1, mode="edge")
    gx = (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    gy = (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:]) - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    # a unit step gives |g| = 4; the diagonal worst case is 4 * sqrt(2)
    return np.hypot(gx, gy) / (4.0 * np.sqrt(2.0))


def cartoonize(img, levels=8, edge_threshold=0.35, smoothing_iterations=3, smoothing_tolerance=0.1):
    img = check_image(img)
    out = img
    for _ in range(int(smoothing_iterations)):
        out = selective_mean(out, smoothing_tolerance)
    if edge_threshold >= 1.0:
        edges = np.zeros(out.shape[:2], dtype=bool)
    else:
        edges = sobel_magnitude(out) > edge_threshold
    out = quantize(out, int(levels))
    if edges.any():
        ink = 0.5 / levels if levels < 256 else 0.0
        out[edges] = ink
    return np.clip(out, 0.0, 1.0)


# -- external commands --------------------------------------------------------

_slots_lock = threading.Lock()
_slots: dict[int, threading.BoundedSemaphore] = {}


def _semaphore(limit):
    with _slots_lock:
        if limit not in _slots:
            _slots[limit] = threading.BoundedSemaphore(limit)
        return _slots[limit]


def run_external(command_template, input_path, output_path, expected_shape=None, timeout=600.0):
    """Run an external stylizer and read back its output.

    ``command_template`` is split shell-style and ``{in}`` / ``{out}`` are
    substituted per argument, so paths with spaces need no quoting.
    The input file must already exist at ``input_path``.
    """
    if "{in}" not in command_template or "{out}" not in command_template:
        raise ExternalBackendFailure("command template needs {in} and {out} placeholders")
    argv = [
        tok.replace("{in}", str(input_path)).replace("{out}", str(output_path))
        for tok in shlex.split(command_template)
    ]
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise ExternalBackendFailure(f"could not run {argv[0]!r}: {exc}", str(exc)) from exc
    stderr = proc.stderr.decode(errors="replace").strip()
    if proc.returncode != 0:
        raise ExternalBackendFailure(f"command exited with status {proc.returncode}", stderr)
    if not Path(output_path).exists():
        raise ExternalBackendFailure("command did not create its output file", stderr)
    try:
        out = read_image(output_path)
    except DecodeError as exc:
        raise ExternalBackendFailure(f"unreadable output: {exc}", stderr) from exc
    if expected_shape is not None and out.shape[:2] != tuple(expected_shape[:2]):
        raise ExternalBackendFailure(
            f"DimensionMismatch: output is {out.shape[1]}x{out.shape[0]}, "
            f"expected {expected_shape[1]}x{expected_shape[0]}",
            stderr,
        )
    return out


def _stylize_external(img, spec):
    with _semaphore(int(spec.max_concurrent)):
        with tempfile.TemporaryDirectory(prefix="toonpairs-") as tmp:
            src = Path(tmp) / "in.png"
            dst = Path(tmp) / "out.png"
            write_png(src, img)
            return run_external(spec.command, src, dst, expected_shape=img.shape, timeout=spec.timeout)


def stylize(img, spec: BackendSpec, key=None) -> StylizedResult:
    """Apply a backend to ``img``.

    ``key`` names the record (or landscape) and is required by the
    ``precomputed_dir`` kind, which reads ``<directory>/<key>.png``.
    """
    img = check_image(img)
    if spec.kind == "identity":
        out = img.copy()
    elif spec.kind == "cartoonize":
        out = cartoonize(
            img,
            levels=spec.levels,
            edge_threshold=spec.edge_threshold,
            smoothing_iterations=spec.smoothing_iterations,
            smoothing_tolerance=spec.smoothing_tolerance,
        )
    elif spec.kind == "external_command":
        out = _stylize_external(img, spec)
    else:
        if key is None:
            raise MissingPrecomputed("precomputed_dir backend needs a record key")
        path = Path(spec.directory) / f"{key}.png"
        if not path.exists():
            raise MissingPrecomputed(f"no precomputed output at {path}")
        out = read_image(path)
        if out.shape != img.shape:
            raise ExternalBackendFailure(
                f"DimensionMismatch: precomputed {path} is {out.shape[1]}x{out.shape[0]}, "
                f"expected {img.shape[1]}x{img.shape[0]}"
            )
    return StylizedResult(out, spec.backend_id, _content_hash(img, spec, key))


def palette_sizes(img) -> list[int]:
    """Number of distinct 8-bit values per channel."""
    q = to_uint8(img)
    return [int(np.unique(q[..., c]).size) for c in range(3)]

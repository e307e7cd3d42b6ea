"""Synthetic fixture corpus.

Stands in for face-parser masks, stylized heads and photos so the whole
pipeline can run without model weights. Each record has a textured
background, a person with one of several skin tones, a binary head mask,
and a "stylized head" image whose head is painted in a pale character
skin tone and whose background drifts toward purple with flattened
contrast.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .imageio import write_png
from .masks import synthetic_head_mask

SKIN_TONES = [
    (0.96, 0.84, 0.74),
    (0.90, 0.74, 0.62),
    (0.80, 0.62, 0.48),
    (0.68, 0.49, 0.36),
    (0.52, 0.36, 0.25),
    (0.38, 0.26, 0.18),
]
CHARACTER_SKIN = (0.99, 0.91, 0.87)


def _gradient(h, w, top, bottom):
    t = np.linspace(0.0, 1.0, h)[:, None, None]
    return np.broadcast_to(np.asarray(top) * (1 - t) + np.asarray(bottom) * t, (h, w, 3)).copy()


def _background(rng, h, w):
    img = _gradient(h, w, rng.uniform(0.2, 0.9, 3), rng.uniform(0.1, 0.8, 3))
    yy, xx = np.mgrid[0:h, 0:w]
    fx, fy = rng.uniform(0.03, 0.15, 2)
    img += 0.06 * np.sin(fx * xx + fy * yy + rng.uniform(0, 6.3))[..., None]
    for _ in range(rng.integers(2, 6)):
        y0, x0 = rng.integers(0, h - 8), rng.integers(0, w - 8)
        y1, x1 = y0 + rng.integers(6, h // 2), x0 + rng.integers(6, w // 3)
        img[y0:y1, x0:x1] = 0.5 * img[y0:y1, x0:x1] + 0.5 * rng.uniform(0.1, 0.9, 3)
    img += rng.normal(0.0, 0.02, img.shape)
    return np.clip(img, 0.03, 0.97)


def make_record(rng, h=112, w=96, skin=None):
    """Return ``(source, head_styled, mask)`` float arrays for one synthetic portrait."""
    src = _background(rng, h, w)
    yy, xx = np.mgrid[0:h, 0:w]
    if skin is None:
        skin = SKIN_TONES[int(rng.integers(len(SKIN_TONES)))]
    skin = np.asarray(skin)
    hair = rng.uniform(0.05, 0.35) * np.array([1.0, 0.8, 0.6])
    shirt = rng.uniform(0.1, 0.9, 3)

    cx = w / 2 + rng.uniform(-0.08, 0.08) * w
    cy = h * rng.uniform(0.33, 0.42)
    ax, ay = w * rng.uniform(0.16, 0.22), h * rng.uniform(0.17, 0.22)
    head = synthetic_head_mask(w, h, (cx, cy), (ax, ay), rng.uniform(-0.2, 0.2)) >= 0.5
    neck = (np.abs(xx + 0.5 - cx) < ax * 0.45) & (yy + 0.5 > cy) & (yy + 0.5 < cy + ay * 1.35)
    body = (yy + 0.5 > cy + ay * 1.2) & (np.abs(xx + 0.5 - cx) < ax * 1.6 + (yy - cy - ay) * 0.5)
    hair_region = head & (yy + 0.5 < cy - ay * 0.35)
    mask = (head | neck).astype(np.float64)

    src[body] = shirt * (0.9 + 0.1 * rng.random((int(body.sum()), 1)))
    shade = 0.92 + 0.08 * np.cos((xx + 0.5 - cx) / ax)[..., None]
    person = mask.astype(bool)
    src[person] = (skin * shade)[person]
    src[hair_region] = hair
    for side in (-1, 1):
        eye = ((xx + 0.5 - cx - side * ax * 0.4) ** 2 + (yy + 0.5 - cy + ay * 0.05) ** 2) < (ax * 0.1) ** 2
        src[eye] = 0.1
    src = np.clip(src + rng.normal(0.0, 0.01, src.shape), 0.0, 1.0)

    # stylized head: pale flat skin, flat hair, big eyes; purplish flat background
    styled = 0.6 * src + 0.4 * np.array([0.55, 0.4, 0.7])
    styled = 0.5 + 0.6 * (styled - 0.5)
    styled[person] = np.asarray(CHARACTER_SKIN) * (0.96 + 0.04 * shade[person])
    styled[hair_region] = 0.7 * hair + 0.3 * np.array([0.3, 0.1, 0.2])
    for side in (-1, 1):
        eye = ((xx + 0.5 - cx - side * ax * 0.4) ** 2 + (yy + 0.5 - cy + ay * 0.05) ** 2) < (ax * 0.17) ** 2
        styled[eye & person] = (0.15, 0.1, 0.25)
    return src, np.clip(styled, 0.0, 1.0), mask


def make_landscape(rng, h=128, w=160):
    img = _gradient(h, w, rng.uniform(0.5, 0.95, 3), rng.uniform(0.3, 0.8, 3))
    xx = np.arange(w)
    for layer in range(3):
        ridge = h * (0.35 + 0.15 * layer) + 10 * np.sin(xx * rng.uniform(0.02, 0.08) + rng.uniform(0, 6.3))
        below = np.arange(h)[:, None] > ridge[None, :]
        img[below] = 0.55 * img[below] + 0.45 * rng.uniform(0.1, 0.7, 3)
    img += rng.normal(0.0, 0.015, img.shape)
    return np.clip(img, 0.0, 1.0)


def make_fixture_corpus(root, n_records=32, n_landscapes=6, seed=0, size=(112, 96), config_extra=None) -> Path:
    """Write a fixture tree plus ``config.json`` under ``root`` and return the config path.

    Layout: ``sources/``, ``heads/``, ``masks/``, ``landscapes/`` with
    records named ``rec000`` onward.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    h, w = size
    for i in range(n_records):
        rid = f"rec{i:03d}"
        src, styled, mask = make_record(rng, h, w, skin=SKIN_TONES[i % len(SKIN_TONES)])
        write_png(root / "sources" / f"{rid}.png", src)
        write_png(root / "heads" / f"{rid}.png", styled)
        write_png(root / "masks" / f"{rid}.png", mask)
    for j in range(n_landscapes):
        write_png(root / "landscapes" / f"land{j:02d}.png", make_landscape(rng))
    config = {
        "seed": 7,
        "inputs": {"root": "."},
        "backend": {"kind": "cartoonize", "levels": 8},
        "cutface": {"ratio": 0.25, "landscapes": "landscapes"},
        "output": {"dir": "out"},
    }
    for section, values in (config_extra or {}).items():
        if isinstance(values, dict):
            config.setdefault(section, {}).update(values)
        else:
            config[section] = values
    path = root / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n")
    return path

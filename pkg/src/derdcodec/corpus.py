"""Synthetic desk-scale test corpus: gradients, text-like blocks, noise.

The real HEVC test set is license-encumbered, so the harness generates its own
images (the config also accepts user-supplied sequences). Every image carries
low-amplitude noise on all three planes so no plane ever reconstructs
losslessly at the evaluation QPs, which would break PSNR/BD validity.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .frames import Frame, write_yuv

DEFAULT_RESOLUTIONS = ((416, 240), (832, 480))


def _finalize(plane, rng, noise_amp=2):
    noise = rng.integers(-noise_amp, noise_amp + 1, size=plane.shape)
    return np.clip(np.rint(plane) + noise, 0, 255).astype(np.uint8)


def _gradient_image(w, h, rng, angle_deg):
    yy, xx = np.mgrid[0:h, 0:w]
    a = np.deg2rad(angle_deg)
    ramp = (np.cos(a) * xx / w + np.sin(a) * yy / h)
    ramp = (ramp - ramp.min()) / (ramp.max() - ramp.min())
    y = 32 + 192 * ramp
    u = 96 + 64 * (xx / w)
    v = 96 + 64 * (yy / h)
    return y, u[0:h:2, 0:w:2], v[0:h:2, 0:w:2]


def _text_image(w, h, rng):
    y = np.full((h, w), 235.0)
    # Random dark glyph-ish strokes on a light background.
    for _ in range(w * h // 300):
        gx = int(rng.integers(0, w - 8))
        gy = int(rng.integers(0, h - 12))
        gw = int(rng.integers(2, 8))
        gh = int(rng.integers(6, 12))
        y[gy:gy + gh, gx:gx + gw] = float(rng.integers(8, 64))
    for _ in range(h // 16):
        ly = int(rng.integers(0, h - 2))
        y[ly:ly + 1, :] = float(rng.integers(8, 64))
    u = np.full((h // 2, w // 2), 120.0)
    v = np.full((h // 2, w // 2), 136.0)
    return y, u, v


def _noise_image(w, h, rng):
    # Low-pass filtered noise: textured but compressible.
    base = rng.normal(128, 64, size=(h // 4 + 1, w // 4 + 1))
    y = np.clip(np.kron(base, np.ones((4, 4)))[:h, :w], 16, 240)
    cu = rng.normal(128, 24, size=(h // 8 + 1, w // 8 + 1))
    cv = rng.normal(128, 24, size=(h // 8 + 1, w // 8 + 1))
    u = np.clip(np.kron(cu, np.ones((4, 4)))[: h // 2, : w // 2], 16, 240)
    v = np.clip(np.kron(cv, np.ones((4, 4)))[: h // 2, : w // 2], 16, 240)
    return y, u, v


def _mixed_image(w, h, rng):
    gy, gu, gv = _gradient_image(w, h, rng, 30)
    ty, _, _ = _text_image(w, h, rng)
    ny, nu, nv = _noise_image(w, h, rng)
    y = gy.copy()
    y[:, : w // 3] = ny[:, : w // 3]
    y[:, 2 * w // 3:] = ty[:, 2 * w // 3:]
    u = (gu + nu) / 2
    v = (gv + nv) / 2
    return y, u, v


GENERATORS = (
    ("gradient", _gradient_image, {"angle_deg": 25}),
    ("text", _text_image, {}),
    ("noise", _noise_image, {}),
    ("mixed", _mixed_image, {}),
)


def generate_frame(kind: str, w: int, h: int, rng) -> Frame:
    for name, fn, kwargs in GENERATORS:
        if name == kind:
            y, u, v = fn(w, h, rng, **kwargs)
            return Frame(_finalize(y, rng), _finalize(u, rng), _finalize(v, rng))
    raise ValueError(f"unknown corpus image kind {kind!r}")


def default_corpus_plan():
    """Six images across the two resolutions."""
    w1, h1 = DEFAULT_RESOLUTIONS[0]
    w2, h2 = DEFAULT_RESOLUTIONS[1]
    return [
        ("gradient", w1, h1), ("text", w1, h1), ("noise", w1, h1),
        ("mixed", w1, h1), ("gradient", w2, h2), ("mixed", w2, h2),
    ]


def generate_corpus(out_dir, seed: int = 1, plan=None, fps: float = 30.0):
    """Write the corpus .yuv files plus a ready-to-run experiment config.

    Returns the list of corpus entry dicts (also stored in corpus.json).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for kind, w, h in (plan or default_corpus_plan()):
        label = f"{kind}_{w}x{h}"
        path = out / f"{label}.yuv"
        frame = generate_frame(kind, w, h, rng)
        write_yuv(path, [frame])
        entries.append({
            "path": str(path), "width": w, "height": h,
            "frames": 1, "fps": fps, "label": label,
        })
    config = {
        "corpus": entries,
        "qp_ladder": [15, 25, 35, 45],
        "objectives": ["rdo", "dedo", "derdo"],
        "profile": None,
        "out_dir": str(out / "results"),
        "lambda_e_grid": None,
        "seed": seed,
    }
    (out / "corpus.json").write_text(json.dumps(config, indent=2) + "\n")
    return entries

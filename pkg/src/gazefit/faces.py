"""Procedural parametric face renderer and trial-stimulus composition.

A face is fully described by 18 sliders in [0,1] covering four reconstructable
feature groups (eyes, nose, mouth, jaw) plus two fixed appearance attributes
(skin tone, hair darkness).  Rendering is analytic rasterization — ellipses,
capsules and flat shading — computed on the left half of a 4x supersampled
grid and mirrored, so every image is exactly bilaterally symmetric and fully
deterministic.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .nn.tensor import ConfigError

__all__ = [
    "SCHEMA_ID", "SLIDER_NAMES", "GROUPS", "GROUP_ORDER", "RECONSTRUCTABLE",
    "K", "REGION_BOXES", "HAIR_BOTTOM", "validate_sliders", "render_face",
    "sample_sliders", "compose_trial_faces", "region_of", "sliders_to_json",
    "sliders_from_json", "save_png", "load_png", "image_to_u8", "face_hash",
]

SCHEMA_ID = "oval18-v1"

SLIDER_NAMES = (
    "eye_spacing", "eye_size", "eye_height", "brow_angle", "brow_thickness",
    "iris_darkness",
    "nose_width", "nose_length", "nose_bridge",
    "mouth_width", "lip_thickness", "mouth_height", "lip_darkness",
    "jaw_width", "chin_length", "cheek_fullness",
    "skin_tone", "hair_darkness",
)

GROUPS: dict[str, tuple[int, ...]] = {
    "eyes": (0, 1, 2, 3, 4, 5),
    "nose": (6, 7, 8),
    "mouth": (9, 10, 11, 12),
    "jaw": (13, 14, 15),
    "fixed": (16, 17),
}
GROUP_ORDER = ("eyes", "nose", "mouth", "jaw")
RECONSTRUCTABLE: tuple[int, ...] = tuple(range(16))
K = len(SLIDER_NAMES)

# Normalized axis-aligned fixation regions, one per reconstructable group.
# Mutually disjoint; the hair zone (y < HAIR_BOTTOM) is outside all of them.
REGION_BOXES: dict[str, tuple[float, float, float, float]] = {
    "eyes": (0.22, 0.31, 0.78, 0.49),
    "nose": (0.40, 0.495, 0.60, 0.655),
    "mouth": (0.28, 0.66, 0.72, 0.83),
    "jaw": (0.20, 0.845, 0.80, 0.98),
}
HAIR_BOTTOM = 0.30

# flat palette endpoints
_BG = np.array([0.84, 0.87, 0.90])
_SKIN_LIGHT = np.array([0.96, 0.85, 0.76])
_SKIN_DEEP = np.array([0.52, 0.36, 0.26])
_HAIR_LIGHT = np.array([0.82, 0.68, 0.45])
_HAIR_DARK = np.array([0.09, 0.07, 0.06])
_SCLERA = np.array([0.97, 0.97, 0.96])
_IRIS_LIGHT = np.array([0.55, 0.62, 0.71])
_IRIS_DARK = np.array([0.10, 0.07, 0.05])
_PUPIL = np.array([0.05, 0.05, 0.06])
_LIP_LIGHT = np.array([0.82, 0.48, 0.45])
_LIP_DARK = np.array([0.48, 0.12, 0.14])

_HEAD_CY = 0.56
_HEAD_A = 0.33
_HEAD_B_UP = 0.40


def validate_sliders(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (K,):
        raise ConfigError(f"expected {K} slider values, got shape {arr.shape}")
    bad = np.where((arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr))[0]
    if bad.size:
        i = int(bad[0])
        raise ConfigError(f"slider '{SLIDER_NAMES[i]}' value {arr[i]!r} outside [0, 1]")
    return arr


def _lerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    return a + (b - a) * float(t)


def _soft(field: np.ndarray, width: float = 0.10) -> np.ndarray:
    """Antialiased inside-mask for a quadratic field with boundary at 1."""
    return np.clip((1.0 - field) / width, 0.0, 1.0)


def _paint(img: np.ndarray, alpha: np.ndarray, color: np.ndarray) -> None:
    a = alpha[..., None]
    img *= 1.0 - a
    img += a * color


def _ellipse(x, y, cx, cy, rx, ry):
    return ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2


def _capsule(x, y, cx, cy, ux, uy, half_len, radius):
    """Field for a line segment of direction (ux,uy) with rounded caps."""
    dx = x - cx
    dy = y - cy
    t = np.clip(dx * ux + dy * uy, -half_len, half_len)
    px = dx - t * ux
    py = dy - t * uy
    return (px * px + py * py) / (radius * radius)


def render_face(sliders, size: int = 64) -> np.ndarray:
    """Rasterize a slider vector to an RGB image in [0,1], (size,size,3) float32."""
    s = validate_sliders(sliders)
    (esp, esz, ehi, ban, bth, ird,
     nwi, nle, nbr,
     mwi, lth, mhe, mda,
     jwi, cle, cfu,
     skt, hda) = s

    s2 = 2 * size
    half = size  # columns of the supersampled left half
    ys = (np.arange(s2, dtype=np.float64) + 0.5) / s2
    xs = (np.arange(half, dtype=np.float64) + 0.5) / s2
    x = np.broadcast_to(xs[None, :], (s2, half))
    y = np.broadcast_to(ys[:, None], (s2, half))

    img = np.empty((s2, half, 3), dtype=np.float64)
    img[:] = _BG

    skin = _lerp(_SKIN_LIGHT, _SKIN_DEEP, skt)
    hair = _lerp(_HAIR_LIGHT, _HAIR_DARK, hda)

    # head outline: upper half-ellipse; lower half with jaw-shaped width
    dx = x - 0.5
    dy = y - _HEAD_CY
    b_low = 0.34 + 0.08 * cle
    v = np.maximum(dy, 0.0) / b_low
    width = _HEAD_A * (1.0 + 0.35 * (jwi - 0.5) * v + 0.6 * (cfu - 0.5) * v * (1.0 - v))
    q_up = (dx / _HEAD_A) ** 2 + (dy / _HEAD_B_UP) ** 2
    q_low = (dx / width) ** 2 + v ** 2
    head_field = np.where(dy < 0.0, q_up, q_low)
    head = _soft(head_field)
    _paint(img, head, skin)

    # hair cap: slightly enlarged head ellipse cut at a fixed horizontal line
    hair_field = _ellipse(x, y, 0.5, _HEAD_CY, _HEAD_A + 0.015, _HEAD_B_UP + 0.015)
    hair_alpha = _soft(hair_field) * np.clip((0.295 - y) / 0.008, 0.0, 1.0)
    _paint(img, hair_alpha, hair)

    # -- eyes group (left instance only; the mirror produces the right) -----
    ex = 0.5 - (0.115 + 0.055 * esp)
    ey = 0.40 + 0.04 * ehi  # in [0.40, 0.44]
    rx = 0.045 + 0.035 * esz
    ry = 0.55 * rx
    _paint(img, _soft(_ellipse(x, y, ex, ey, rx, ry)), _SCLERA)
    iris_r = 0.50 * rx
    _paint(img, _soft(_ellipse(x, y, ex, ey, iris_r, iris_r)), _lerp(_IRIS_LIGHT, _IRIS_DARK, ird))
    pupil_r = 0.42 * iris_r
    _paint(img, _soft(_ellipse(x, y, ex, ey, pupil_r, pupil_r)), _PUPIL)

    # eyebrow: tilted capsule above the eye; outer end raised for positive angle
    by = np.clip(ey - ry - 0.030, 0.355, 0.42)
    theta = (ban - 0.5) * 0.5  # radians; mirrored automatically
    ux, uy = np.cos(theta), np.sin(theta)
    brow_h = 0.008 + 0.014 * bth
    _paint(img, _soft(_capsule(x, y, ex, by, ux, uy, 0.65 * rx + 0.02, brow_h)), hair * 0.55)

    # -- nose group: tapered vertical capsule, nostrils, tip shading --------
    y0, y1 = 0.51, 0.555 + 0.065 * nle
    tip_w = 0.025 + 0.035 * nwi
    bridge_w = 0.006 + 0.016 * nbr
    t = np.clip((y - y0) / (y1 - y0), 0.0, 1.0)
    halfw = bridge_w + (tip_w - bridge_w) * t
    seg_dy = np.where(y < y0, y0 - y, np.maximum(y - y1, 0.0))
    nose_field = (dx / halfw) ** 2 + (seg_dy / 0.012) ** 2
    _paint(img, _soft(nose_field) * 0.55, skin * 0.88)
    _paint(img, _soft(_ellipse(x, y, 0.5 - (tip_w - 0.012), y1 - 0.004, 0.013, 0.009)), skin * 0.45)

    # -- mouth group: lens with thinner upper lip and a darker split line ---
    mcy = 0.7425 + 0.0275 * (2.0 * mhe - 1.0)
    hw = 0.07 + 0.08 * mwi
    hh = 0.010 + 0.020 * lth
    mdy = y - mcy
    hh_asym = np.where(mdy < 0.0, 0.85 * hh, 1.15 * hh)
    mouth_field = (dx / hw) ** 2 + (mdy / hh_asym) ** 2
    lip = _lerp(_LIP_LIGHT, _LIP_DARK, mda)
    mouth_alpha = _soft(mouth_field)
    _paint(img, mouth_alpha, lip)
    split = mouth_alpha * np.clip((0.0035 - np.abs(mdy)) / 0.002, 0.0, 1.0)
    _paint(img, split * 0.6, lip * 0.55)

    # mirror the left half and box-filter the 2x2 supersamples
    full = np.concatenate([img, img[:, ::-1, :]], axis=1)
    out = full.reshape(size, 2, size, 2, 3).mean(axis=(1, 3))
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def sample_sliders(rng: np.random.Generator, fixed_overrides: dict | None = None) -> np.ndarray:
    """Uniform[0,1] per slider; overrides (by index or name) copied verbatim."""
    values = rng.uniform(0.0, 1.0, size=K)
    if fixed_overrides:
        for key, val in fixed_overrides.items():
            idx = SLIDER_NAMES.index(key) if isinstance(key, str) else int(key)
            values[idx] = float(val)
    return values


def compose_trial_faces(target, rng: np.random.Generator) -> tuple[list[np.ndarray], np.ndarray]:
    """Six auxiliary slider vectors plus per-(face, slider) relevance labels.

    Faces 0-3 carry the target's eyes/nose/mouth/jaw group respectively with
    all other reconstructable sliders random; faces 4-5 are fully random.
    Every face copies the target's fixed attributes.  labels[i, k] == 1 iff
    face i's slider k equals the target's and k is reconstructable.
    """
    target = validate_sliders(target)
    fixed_idx = GROUPS["fixed"]
    faces: list[np.ndarray] = []
    labels = np.zeros((6, K), dtype=np.uint8)
    for face_i, group in enumerate(GROUP_ORDER):
        vec = sample_sliders(rng)
        vec[list(fixed_idx)] = target[list(fixed_idx)]
        for k in GROUPS[group]:
            vec[k] = target[k]
            labels[face_i, k] = 1
        faces.append(vec)
    for face_i in (4, 5):
        vec = sample_sliders(rng)
        vec[list(fixed_idx)] = target[list(fixed_idx)]
        faces.append(vec)
    return faces, labels


def region_of(group: str) -> tuple[float, float, float, float]:
    try:
        return REGION_BOXES[group]
    except KeyError:
        raise ConfigError(f"unknown feature group {group!r}; expected one of {GROUP_ORDER}") from None


# -- serialization --------------------------------------------------------------


def sliders_to_json(values) -> str:
    arr = validate_sliders(values)
    return json.dumps(
        {"schema_id": SCHEMA_ID, "values": {n: float(v) for n, v in zip(SLIDER_NAMES, arr)}},
        indent=None, separators=(",", ":"), sort_keys=True,
    )


def sliders_from_json(text: str) -> np.ndarray:
    obj = json.loads(text)
    if obj.get("schema_id") != SCHEMA_ID:
        raise ConfigError(f"unknown slider schema {obj.get('schema_id')!r}")
    values = obj["values"]
    missing = [n for n in SLIDER_NAMES if n not in values]
    if missing:
        raise ConfigError(f"slider json missing values for: {', '.join(missing)}")
    return validate_sliders([values[n] for n in SLIDER_NAMES])


def image_to_u8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_png(img: np.ndarray, path: str | Path) -> None:
    Image.fromarray(image_to_u8(img), mode="RGB").save(path, format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0


def face_hash(img: np.ndarray) -> str:
    """Content hash of the 8-bit render, stable across platforms."""
    return hashlib.sha1(image_to_u8(img).tobytes()).hexdigest()

"""Deterministic paired-data synthesis.

A sample is built by linearizing the background and each flare with their
own random gamma, blurring each flare, scaling it by a random gain and a
color-jitter triple, offsetting it, summing the flares, and re-encoding
the three outputs (corrupted, clean, flare-only) with one shared gamma.
Clamping happens before the final encoding.

Every random draw comes from a counter-based stream keyed by
(config.seed, sample_index), so a sample is a pure function of its inputs
and generation parallelizes without any ordering concerns.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from flarebench import pngio
from flarebench.errors import ParameterError, ShapeError
from flarebench.imgcore import (
    clamp01,
    gaussian_blur,
    require_image,
    require_same_shape,
    to_encoded,
    to_linear,
    translate,
)
from flarebench.manifest import ManifestRecord, write_manifest
from flarebench.regionmask import (
    RegionMask,
    extract_light_mask,
    flare_mask_from_flare_image,
)

# Default color-jitter palette: bluish, yellowish, neutral gains. The
# composite clamp absorbs products that exceed 1.
DEFAULT_PALETTE = (
    (0.6, 0.8, 1.2),
    (1.2, 1.1, 0.7),
    (1.0, 1.0, 1.0),
)

# Thresholds for deriving ground-truth masks from annotation components.
LIGHT_COMPONENT_TAU = 0.25
CLASS_COMPONENT_TAU = 0.02

# Saturation fallback when no light-source annotation exists.
FALLBACK_LIGHT_THRESHOLD = 0.99
FALLBACK_SE_RADIUS = 1

_COMPONENT_DIRS = (
    ("Light_Source", "light_source"),
    ("Glare", "glare"),
    ("Streak", "streak"),
)


@dataclass(frozen=True)
class SynthConfig:
    """Sampled parameter ranges of the compositing pipeline.

    ``lightsource_count_weights`` drives how many flares (one emitter
    each) a generated sample composites: weight i belongs to count i+1.
    Setting it to None fixes the count at ``flare_count`` instead.
    """

    gamma_range: tuple = (1.8, 2.2)
    blur_kernel_range: tuple = (5, 21)
    gain_range: tuple = (0.8, 1.0)
    flare_count: int = 4
    offset_fraction: float = 0.3
    lightsource_count_weights: tuple | None = (11.0, 4.0, 1.0)
    color_jitter_palette: tuple = DEFAULT_PALETTE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gamma_range", _float_range(self.gamma_range, "gamma_range", low=0.0))
        object.__setattr__(self, "gain_range", _float_range(self.gain_range, "gain_range"))
        kr = tuple(int(v) for v in self.blur_kernel_range)
        if len(kr) != 2 or kr[0] > kr[1] or kr[0] < 1 or kr[0] % 2 == 0 or kr[1] % 2 == 0:
            raise ParameterError(
                f"blur_kernel_range must be odd positive (lo, hi) with lo <= hi, got {kr}"
            )
        object.__setattr__(self, "blur_kernel_range", kr)
        if int(self.flare_count) < 1:
            raise ParameterError(f"flare_count must be >= 1, got {self.flare_count}")
        object.__setattr__(self, "flare_count", int(self.flare_count))
        frac = float(self.offset_fraction)
        if not 0.0 <= frac <= 1.0:
            raise ParameterError(f"offset_fraction must be in [0, 1], got {frac}")
        object.__setattr__(self, "offset_fraction", frac)
        if self.lightsource_count_weights is not None:
            weights = tuple(float(w) for w in self.lightsource_count_weights)
            if not weights or any(w < 0 for w in weights) or sum(weights) <= 0:
                raise ParameterError(
                    "lightsource_count_weights must be non-negative and not all zero"
                )
            object.__setattr__(self, "lightsource_count_weights", weights)
        palette = tuple(tuple(float(c) for c in triple) for triple in self.color_jitter_palette)
        if not palette or any(len(t) != 3 or min(t) <= 0 for t in palette):
            raise ParameterError("color_jitter_palette must be non-empty positive RGB triples")
        object.__setattr__(self, "color_jitter_palette", palette)
        if int(self.seed) < 0:
            raise ParameterError(f"seed must be a non-negative integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))


def _float_range(value, name, low=None):
    pair = tuple(float(v) for v in value)
    if len(pair) != 2 or pair[0] > pair[1]:
        raise ParameterError(f"{name} must be (lo, hi) with lo <= hi, got {pair}")
    if low is not None and pair[0] <= low:
        raise ParameterError(f"{name} lower bound must exceed {low}, got {pair}")
    return pair


@dataclass(frozen=True)
class FlareParams:
    """Per-flare draw: linearization gamma, blur size, gain, offset, color.

    The offset is stored as a fraction of the image extent per axis and is
    realized as integer pixels once dimensions are known.
    """

    gamma: float
    kernel_size: int
    gain: float
    offset: tuple
    color: tuple

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "kernel_size": self.kernel_size,
            "gain": self.gain,
            "offset": list(self.offset),
            "color": list(self.color),
        }


@dataclass(frozen=True)
class SampleParams:
    """Every sampled value for one synthesized pair."""

    sample_seed: int
    n_flares: int
    background_gamma: float
    encode_gamma: float
    flares: tuple

    def to_dict(self):
        return {
            "sample_seed": self.sample_seed,
            "n_flares": self.n_flares,
            "background_gamma": self.background_gamma,
            "encode_gamma": self.encode_gamma,
            "flares": [fp.to_dict() for fp in self.flares],
        }


@dataclass(frozen=True)
class SamplePair:
    """One synthesized record: rasters, masks, and the seed that remakes it."""

    corrupted: np.ndarray
    clean: np.ndarray
    flare_only: np.ndarray
    light_mask: RegionMask
    glare_mask: RegionMask
    streak_mask: RegionMask
    sample_seed: int
    params: SampleParams


def sample_seed_for(seed: int, sample_index: int) -> int:
    """Stable 64-bit per-sample seed derived from (dataset seed, index)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(sample_index),))
    return int(ss.generate_state(1, np.uint64)[0])


def _stream(sample_seed: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(sample_seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def params_from_seed(config: SynthConfig, sample_seed: int, n_flares: int | None = None) -> SampleParams:
    """Reconstruct the parameter record from a stored per-sample seed.

    The draw order is fixed: flare count, background gamma, encode gamma,
    then per flare (gamma, kernel, gain, offset x, offset y, color). An
    explicit ``n_flares`` overrides the drawn count without disturbing the
    per-flare draws that follow.
    """
    rng = _stream(sample_seed, 0)
    if config.lightsource_count_weights is None:
        drawn = config.flare_count
    else:
        weights = np.asarray(config.lightsource_count_weights, dtype=np.float64)
        drawn = 1 + int(rng.choice(len(weights), p=weights / weights.sum()))
    n = drawn if n_flares is None else int(n_flares)
    if n < 0:
        raise ParameterError(f"flare count must be >= 0, got {n}")
    background_gamma = float(rng.uniform(*config.gamma_range))
    encode_gamma = float(rng.uniform(*config.gamma_range))
    lo, hi = config.blur_kernel_range
    n_sizes = (hi - lo) // 2 + 1
    frac = config.offset_fraction
    flares = []
    for _ in range(n):
        gamma = float(rng.uniform(*config.gamma_range))
        kernel = lo + 2 * int(rng.integers(n_sizes))
        gain = float(rng.uniform(*config.gain_range))
        offset = (float(rng.uniform(-frac, frac)), float(rng.uniform(-frac, frac)))
        color = config.color_jitter_palette[int(rng.integers(len(config.color_jitter_palette)))]
        flares.append(FlareParams(gamma, kernel, gain, offset, color))
    return SampleParams(
        sample_seed=int(sample_seed),
        n_flares=n,
        background_gamma=background_gamma,
        encode_gamma=encode_gamma,
        flares=tuple(flares),
    )


def sample_params(config: SynthConfig, sample_index: int, n_flares: int | None = None) -> SampleParams:
    """Draw the full parameter record for one sample index."""
    return params_from_seed(config, sample_seed_for(config.seed, sample_index), n_flares)


def _scaled(flare, fp):
    out = flare.astype(np.float32) * np.float32(fp.gain)
    if out.ndim == 3:
        out = out * np.asarray(fp.color, dtype=np.float32)
    return out


def _pixel_offset(fp, shape):
    h, w = shape[:2]
    return int(round(fp.offset[0] * w)), int(round(fp.offset[1] * h))


def compose_flares(flares, params: SampleParams, shape=None) -> np.ndarray:
    """Gain, color, offset, and sum pre-linearized, pre-blurred flares.

    The accumulated sum is intentionally left unclamped; clamping belongs
    to the final composite. An empty list yields a zero canvas of the
    given shape.
    """
    flares = list(flares)
    if len(flares) != len(params.flares):
        raise ParameterError(
            f"got {len(flares)} flares but parameters for {len(params.flares)}"
        )
    if not flares:
        if shape is None:
            raise ParameterError("shape is required to compose an empty flare list")
        return np.zeros(shape, dtype=np.float32)
    for f in flares:
        require_image(f)
    require_same_shape(*flares)
    canvas = np.zeros(flares[0].shape, dtype=np.float32)
    for flare, fp in zip(flares, params.flares):
        dx, dy = _pixel_offset(fp, flare.shape)
        canvas += translate(_scaled(flare, fp), dx, dy)
    return canvas


def synthesize_pair(
    background: np.ndarray,
    flares,
    config: SynthConfig,
    sample_index: int,
    annotations=None,
    params: SampleParams | None = None,
) -> SamplePair:
    """Build one corrupted/clean/flare-only triple plus region masks.

    Args:
        background: flare-free scene, same dimensions as every flare
            (callers crop or resize beforehand).
        flares: flare images, one emitter each.
        config: sampling configuration.
        sample_index: per-sample stream selector under config.seed.
        annotations: optional per-flare dicts with component images under
            the keys light_source / glare / streak. When present they go
            through the same transform as their flare and drive the mask
            derivation; otherwise masks fall back to thresholding the
            synthesized outputs.
        params: pre-drawn parameter record (for regeneration from a stored
            sample seed). Drawn from (config.seed, sample_index) if omitted.
    """
    require_image(background)
    flares = list(flares)
    for f in flares:
        require_image(f)
        require_same_shape(background, f)
    if params is None:
        params = sample_params(config, sample_index, n_flares=len(flares))
    elif params.n_flares != len(flares):
        raise ParameterError(
            f"parameter record is for {params.n_flares} flares, got {len(flares)}"
        )
    if annotations is not None and len(annotations) != len(flares):
        raise ParameterError("annotations must align one-to-one with flares")

    background_linear = to_linear(background, params.background_gamma)
    prepared = [
        gaussian_blur(to_linear(f, fp.gamma), fp.kernel_size)
        for f, fp in zip(flares, params.flares)
    ]
    flare_sum = compose_flares(prepared, params, shape=background.shape)

    theta = params.encode_gamma
    corrupted = to_encoded(clamp01(background_linear + flare_sum), theta)
    clean = to_encoded(background_linear, theta)
    flare_only = to_encoded(clamp01(flare_sum), theta)

    light, glare, streak = _derive_masks(corrupted, flare_only, flares, annotations, params)
    return SamplePair(
        corrupted=corrupted,
        clean=clean,
        flare_only=flare_only,
        light_mask=light,
        glare_mask=glare,
        streak_mask=streak,
        sample_seed=params.sample_seed,
        params=params,
    )


def _compose_class(components, params, shape, theta):
    """Run annotation components through the flare transform and encode."""
    canvas = np.zeros(shape, dtype=np.float32)
    for i, comp in enumerate(components):
        if comp is None:
            continue
        fp = params.flares[i]
        prepared = gaussian_blur(to_linear(comp, fp.gamma), fp.kernel_size)
        dx, dy = _pixel_offset(fp, prepared.shape)
        canvas += translate(_scaled(prepared, fp), dx, dy)
    return to_encoded(clamp01(canvas), theta)


def _derive_masks(corrupted, flare_only, flares, annotations, params):
    annotations = annotations or [{} for _ in flares]
    shape = corrupted.shape
    theta = params.encode_gamma

    def class_mask(role, tau):
        components = [ann.get(role) for ann in annotations]
        if not any(c is not None for c in components):
            return None
        encoded = _compose_class(components, params, shape, theta)
        mask = flare_mask_from_flare_image(encoded, tau=tau)
        return RegionMask(mask.weights, role=role)

    light = class_mask("light_source", LIGHT_COMPONENT_TAU)
    if light is None:
        # No emitter annotation: detect saturated pixels in the composite.
        light = extract_light_mask(
            corrupted, threshold=FALLBACK_LIGHT_THRESHOLD, se_radius=FALLBACK_SE_RADIUS
        )
    glare = class_mask("glare", CLASS_COMPONENT_TAU)
    streak = class_mask("streak", CLASS_COMPONENT_TAU)
    if glare is None or streak is None:
        # Without component annotations the classes are indistinguishable;
        # both collapse to the whole-flare region.
        whole = flare_mask_from_flare_image(flare_only, tau=CLASS_COMPONENT_TAU)
        if glare is None:
            glare = RegionMask(whole.weights, role="glare")
        if streak is None:
            streak = RegionMask(whole.weights.copy(), role="streak")
    return light, glare, streak


def fit_canvas(img: np.ndarray, shape) -> np.ndarray:
    """Center-crop or zero-pad an image to the target (H, W).

    Padding uses zeros (additive flare convention), cropping keeps the
    center. Used to harmonize flare rasters with the background canvas.
    """
    require_image(img)
    th, tw = int(shape[0]), int(shape[1])
    out = img
    h, w = out.shape[:2]
    if h > th:
        top = (h - th) // 2
        out = out[top:top + th]
    if w > tw:
        left = (w - tw) // 2
        out = out[:, left:left + tw]
    h, w = out.shape[:2]
    if h < th or w < tw:
        pad_h = th - h
        pad_w = tw - w
        pad = ((pad_h // 2, pad_h - pad_h // 2), (pad_w // 2, pad_w - pad_w // 2))
        if out.ndim == 3:
            pad = pad + ((0, 0),)
        out = np.pad(out, pad, mode="constant", constant_values=0)
    return out.copy()


def find_flare_components(flare_path) -> dict:
    """Locate sibling annotation images for a flare file, by convention.

    For ``<root>/<set>/<name>.png`` the component for role R is
    ``<root>/<RoleDir>/<name>.png`` with RoleDir in Light_Source, Glare,
    Streak. Roles without a file are simply absent.
    """
    flare_path = str(flare_path)
    parent = os.path.dirname(flare_path)
    grandparent = os.path.dirname(parent)
    name = os.path.basename(flare_path)
    found = {}
    for role_dir, role in _COMPONENT_DIRS:
        candidate = os.path.join(grandparent, role_dir, name)
        if os.path.isfile(candidate):
            found[role] = candidate
    return found


def _match_channels(img, reference):
    """Promote gray to the reference's channel count (or reduce to gray)."""
    if img.ndim == reference.ndim:
        return img
    if reference.ndim == 3 and img.ndim == 2:
        return np.repeat(img[:, :, None], reference.shape[2], axis=2)
    return img.mean(axis=2).astype(img.dtype)


def _generate_sample(task):
    """Worker: load inputs, synthesize, write rasters, return a record."""
    (config, index, background_path, flare_paths, component_paths, out_dir, bits) = task
    sample_id = f"{index:06d}"
    try:
        background = pngio.load_image(background_path)
        shape = background.shape[:2]
        flares = []
        annotations = []
        for flare_path, components in zip(flare_paths, component_paths):
            flare = _match_channels(pngio.load_image(flare_path), background)
            flares.append(fit_canvas(flare, shape))
            annotations.append(
                {
                    role: fit_canvas(_match_channels(pngio.load_image(p), background), shape)
                    for role, p in components.items()
                }
            )
        params = sample_params(config, index, n_flares=len(flares))
        pair = synthesize_pair(
            background, flares, config, index, annotations=annotations, params=params
        )
        rel = {
            "corrupted": f"images/{sample_id}_corrupted.png",
            "clean": f"images/{sample_id}_clean.png",
            "flare": f"images/{sample_id}_flare.png",
            "light_mask": f"masks/{sample_id}_light.png",
            "glare_mask": f"masks/{sample_id}_glare.png",
            "streak_mask": f"masks/{sample_id}_streak.png",
        }
        pngio.save_image(os.path.join(out_dir, rel["corrupted"]), pair.corrupted, bits=bits)
        pngio.save_image(os.path.join(out_dir, rel["clean"]), pair.clean, bits=bits)
        pngio.save_image(os.path.join(out_dir, rel["flare"]), pair.flare_only, bits=bits)
        pngio.save_mask_weights(os.path.join(out_dir, rel["light_mask"]), pair.light_mask.weights)
        pngio.save_mask_weights(os.path.join(out_dir, rel["glare_mask"]), pair.glare_mask.weights)
        pngio.save_mask_weights(os.path.join(out_dir, rel["streak_mask"]), pair.streak_mask.weights)
        record = ManifestRecord(
            id=sample_id,
            paths=rel,
            sample_seed=pair.sample_seed,
            params=params.to_dict(),
        )
        return index, record, None
    except (OSError, ParameterError, ShapeError) as exc:
        return index, None, f"{sample_id}: {exc}"


def synthesize_dataset(
    background_paths,
    flare_paths,
    config: SynthConfig,
    count: int,
    out_dir,
    threads: int = 0,
    bits: int = 16,
):
    """Generate ``count`` pairs and write them plus a manifest to out_dir.

    Background and flare files are chosen per sample from seeded streams,
    so output bytes depend only on (config, input lists, count), not on
    the execution order or the number of worker processes. Unreadable
    input files are recorded in errors.jsonl and skipped; generation
    continues.

    Returns (records, errors).
    """
    count = int(count)
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    background_paths = [str(p) for p in background_paths]
    flare_paths = [str(p) for p in flare_paths]
    if count > 0 and (not background_paths or not flare_paths):
        raise ParameterError("background and flare manifests must be non-empty")
    out_dir = str(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    tasks = []
    for index in range(count):
        params = sample_params(config, index)
        chooser = _stream(sample_seed_for(config.seed, index), 1)
        background = background_paths[int(chooser.integers(len(background_paths)))]
        n = params.n_flares
        replace = len(flare_paths) < n
        picks = chooser.choice(len(flare_paths), size=n, replace=replace)
        chosen = [flare_paths[int(i)] for i in picks]
        components = [find_flare_components(p) for p in chosen]
        tasks.append((config, index, background, chosen, components, out_dir, bits))

    workers = threads if threads and threads > 0 else (os.cpu_count() or 1)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_generate_sample, tasks))
    else:
        outcomes = [_generate_sample(t) for t in tasks]

    outcomes.sort(key=lambda item: item[0])
    records = [record for _, record, err in outcomes if err is None]
    errors = [err for _, _, err in outcomes if err is not None]
    write_manifest(records, os.path.join(out_dir, "manifest.jsonl"))
    if errors:
        with open(os.path.join(out_dir, "errors.jsonl"), "w", encoding="utf-8") as fh:
            for err in errors:
                fh.write(json.dumps({"error": err}))
                fh.write("\n")
    return records, errors

"""Shared fixtures: synthetic flare/background asset trees on disk."""

import os

import numpy as np
import pytest

from flarebench import pngio


def _grid(size):
    return np.mgrid[0:size, 0:size].astype(np.float32)


def _rgb(plane):
    return np.repeat(plane[:, :, None], 3, axis=2)


def make_flare(size, rng):
    """One synthetic scattering flare plus its component annotations.

    Saturated emitter disk, radial glare falloff, and a long narrow streak
    through the emitter. The compound image is their clipped sum.
    """
    yy, xx = _grid(size)
    cy = size / 2 + float(rng.integers(-size // 8, size // 8 + 1))
    cx = size / 2 + float(rng.integers(-size // 8, size // 8 + 1))
    r = max(2.0, size / 16)
    light = ((yy - cy) ** 2 + (xx - cx) ** 2 <= r * r).astype(np.float32)

    sigma = size / 6.0
    glare = np.exp(-(((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma * sigma))).astype(np.float32)
    glare *= 0.7

    angle = float(rng.uniform(0, np.pi))
    dist = np.abs((xx - cx) * np.sin(angle) - (yy - cy) * np.cos(angle))
    streak = (dist <= 1.2).astype(np.float32) * 0.85

    components = {
        "light_source": _rgb(light),
        "glare": _rgb(glare),
        "streak": _rgb(streak),
    }
    compound = np.clip(light + glare + streak, 0.0, 1.0)
    return _rgb(compound), components


def make_background(size, rng):
    """Dark, smooth nighttime-ish background."""
    coarse = rng.random((size // 8 + 1, size // 8 + 1)).astype(np.float32)
    idx = np.linspace(0, coarse.shape[0] - 1, size)
    up = coarse[np.ix_(idx.astype(int), idx.astype(int))]
    noise = rng.random((size, size)).astype(np.float32) * 0.05
    return _rgb(np.clip(0.05 + 0.35 * up + noise, 0.0, 1.0))


def build_assets(root, n_backgrounds=2, n_flares=3, size=64, with_components=True, seed=0):
    """Write a background tree, a flare tree, and their path-list manifests.

    Returns (background_list_path, flare_list_path). Component images go
    to sibling directories of Compound_Flare so the discovery convention
    finds them; with_components=False writes compounds only.
    """
    root = str(root)
    rng = np.random.default_rng(seed)
    bg_rel = []
    for i in range(n_backgrounds):
        rel = f"backgrounds/b{i}.png"
        pngio.save_image(os.path.join(root, rel), make_background(size, rng), bits=8)
        bg_rel.append(rel)
    flare_rel = []
    for i in range(n_flares):
        compound, components = make_flare(size, rng)
        rel = f"flares/Compound_Flare/f{i}.png"
        pngio.save_image(os.path.join(root, rel), compound, bits=8)
        if with_components:
            for role_dir, role in (
                ("Light_Source", "light_source"),
                ("Glare", "glare"),
                ("Streak", "streak"),
            ):
                pngio.save_image(
                    os.path.join(root, "flares", role_dir, f"f{i}.png"),
                    components[role],
                    bits=8,
                )
        flare_rel.append(rel)
    bg_list = os.path.join(root, "backgrounds.txt")
    flare_list = os.path.join(root, "flares.txt")
    with open(bg_list, "w") as fh:
        fh.write("\n".join(bg_rel) + "\n")
    with open(flare_list, "w") as fh:
        fh.write("\n".join(flare_rel) + "\n")
    return bg_list, flare_list


@pytest.fixture
def asset_builder(tmp_path):
    def build(**kwargs):
        return build_assets(tmp_path, **kwargs)

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

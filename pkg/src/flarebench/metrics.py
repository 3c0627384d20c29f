"""Scoring: PSNR, region-masked PSNR, SSIM, and the averaged final score.

The protocol scores a restoration three ways and averages them: PSNR over
the streak region, PSNR over the glare region, and global PSNR, all with
light-source pixels excluded (ground truth cannot provide a clean
emitter). Accumulation is float64 throughout; the masked and unmasked
paths share one code path so an all-ones mask reproduces the unmasked
value bit for bit.
"""

import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from flarebench import manifest as manifest_mod
from flarebench import pngio
from flarebench.errors import EmptyRegionError, ParameterError, ShapeError
from flarebench.imgcore import require_image, require_same_shape
from flarebench.regionmask import RegionMask, as_weights, extract_light_mask

MSE_FLOOR = 1e-10
DEFAULT_PSNR_CAP = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def mse(a: np.ndarray, b: np.ndarray, mask=None) -> float:
    """Mean squared error, optionally weighted by an (H, W) mask.

    With a mask: sum(mask * (a-b)^2) / (channels * sum(mask)). A missing
    mask behaves as all-ones.
    """
    require_image(a)
    require_image(b)
    require_same_shape(a, b)
    channels = 1 if a.ndim == 2 else a.shape[2]
    w = np.ones(a.shape[:2], dtype=np.float64) if mask is None else as_weights(mask).astype(np.float64)
    if w.shape != a.shape[:2]:
        raise ShapeError(f"mask shape {w.shape} does not match image {a.shape[:2]}")
    support = float(w.sum())
    if support <= 0.0:
        raise EmptyRegionError("empty evaluation region")
    d = a.astype(np.float64) - b.astype(np.float64)
    d *= d
    if a.ndim == 3:
        d = d.sum(axis=2)
    return float((d * w).sum() / (channels * support))


def psnr(a: np.ndarray, b: np.ndarray, mask=None, cap: float = DEFAULT_PSNR_CAP) -> float:
    """Peak signal-to-noise ratio in dB against a unit peak.

    Near-zero error (MSE below 1e-10) returns the cap so aggregates stay
    finite.
    """
    err = mse(a, b, mask=mask)
    if err < MSE_FLOOR:
        return float(cap)
    return float(10.0 * math.log10(1.0 / err))


@dataclass(frozen=True)
class RegionScores:
    """Per-sample streak/glare/global PSNRs; None marks an absent region."""

    s_psnr: float | None
    g_psnr: float | None
    global_psnr: float | None

    def present(self):
        return [v for v in (self.s_psnr, self.g_psnr, self.global_psnr) if v is not None]


def region_psnrs(
    pred: np.ndarray,
    gt: np.ndarray,
    light,
    glare,
    streak,
    cap: float = DEFAULT_PSNR_CAP,
    sample_id: str = "",
) -> RegionScores:
    """Streak, glare, and global PSNR with light-source pixels excluded.

    Masks are binarized at weight > 0.5 first. A missing (None) light mask
    excludes nothing; a missing glare or streak mask widens that region to
    the full frame. An empty evaluation region yields None for that metric
    and a warning rather than an error.
    """
    require_same_shape(pred, gt)
    if light is None:
        not_light = np.ones(pred.shape[:2], dtype=np.float64)
    else:
        not_light = 1.0 - _binary(light, pred.shape[:2])
    regions = (
        ("s_psnr", _binary(streak, pred.shape[:2]) * not_light),
        ("g_psnr", _binary(glare, pred.shape[:2]) * not_light),
        ("global_psnr", not_light),
    )
    values = {}
    for name, region in regions:
        if region.sum() <= 0.0:
            tag = f" for sample {sample_id}" if sample_id else ""
            warnings.warn(
                f"{name} evaluation region is empty{tag}; metric excluded",
                RuntimeWarning,
                stacklevel=2,
            )
            values[name] = None
        else:
            values[name] = psnr(pred, gt, mask=region, cap=cap)
    return RegionScores(**values)


def _binary(mask, shape):
    if mask is None:
        return np.ones(shape, dtype=np.float64)
    w = as_weights(mask)
    if w.shape != shape:
        raise ShapeError(f"mask shape {w.shape} does not match image {shape}")
    return (w > 0.5).astype(np.float64)


def challenge_score(s_psnr: float, g_psnr: float, global_psnr: float) -> float:
    """Arithmetic mean of the three protocol metrics."""
    vals = (float(s_psnr), float(g_psnr), float(global_psnr))
    if not all(math.isfinite(v) for v in vals):
        raise ParameterError(f"score inputs must be finite, got {vals}")
    return sum(vals) / 3.0


def _gaussian_window(size, sigma):
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-0.5 * (offsets / sigma) ** 2)
    return w / w.sum()


def _sepconv_valid(plane, kern):
    """Separable valid-mode correlation (no padding), float64."""
    k = kern.shape[0]
    h, w = plane.shape
    wo = w - k + 1
    ho = h - k + 1
    tmp = kern[0] * plane[:, 0:wo]
    for t in range(1, k):
        tmp = tmp + kern[t] * plane[:, t:t + wo]
    out = kern[0] * tmp[0:ho, :]
    for t in range(1, k):
        out = out + kern[t] * tmp[t:t + ho, :]
    return out


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local structural similarity for unit-range images.

    Gaussian window 11x11 (sigma 1.5), the usual stabilizing constants,
    and valid-region windows only. The window shrinks to the largest odd
    size that fits when an image is smaller than 11 pixels on a side;
    anything below 2x2 is rejected.
    """
    require_image(a)
    require_image(b)
    require_same_shape(a, b)
    h, w = a.shape[:2]
    if h < 2 or w < 2:
        raise ParameterError(f"ssim needs at least a 2x2 image, got {w}x{h}")
    win = min(SSIM_WINDOW, h, w)
    if win % 2 == 0:
        win -= 1
    kern = _gaussian_window(win, SSIM_SIGMA)

    def plane_ssim(x, y):
        x = x.astype(np.float64)
        y = y.astype(np.float64)
        mu_x = _sepconv_valid(x, kern)
        mu_y = _sepconv_valid(y, kern)
        var_x = _sepconv_valid(x * x, kern) - mu_x * mu_x
        var_y = _sepconv_valid(y * y, kern) - mu_y * mu_y
        cov = _sepconv_valid(x * y, kern) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
        den = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
        return float(np.mean(num / den))

    if a.ndim == 2:
        return plane_ssim(a, b)
    return float(np.mean([plane_ssim(a[:, :, c], b[:, :, c]) for c in range(a.shape[2])]))


@dataclass
class SampleScore:
    id: str
    s_psnr: float | None = None
    g_psnr: float | None = None
    global_psnr: float | None = None
    score: float | None = None
    failed: bool = False
    note: str = ""


@dataclass
class ScoreReport:
    rows: list = field(default_factory=list)
    mean_s_psnr: float | None = None
    mean_g_psnr: float | None = None
    mean_global_psnr: float | None = None
    score: float | None = None
    evaluated: int = 0
    failed: int = 0
    absent_regions: dict = field(default_factory=dict)

    def ok(self) -> bool:
        return self.failed == 0 and self.evaluated > 0


def evaluate_run(
    pred_dir,
    gt_manifest,
    light_threshold: float = 0.99,
    se_radius: int = 1,
    cap: float = DEFAULT_PSNR_CAP,
    threads: int = 0,
) -> ScoreReport:
    """Score a directory of predictions against a ground-truth manifest.

    Each manifest record needs a ``clean`` image; predictions are looked
    up as ``<pred_dir>/<id>.png``. Region masks come from the manifest
    roles ``light_mask``/``glare_mask``/``streak_mask``; a missing light
    mask is extracted from the ``corrupted`` image by saturation threshold
    when available, and a missing glare or streak mask widens that region
    to everything outside the light source. Missing or unreadable
    predictions mark the row failed and leave the aggregates untouched.
    """
    records = manifest_mod.load_manifest(gt_manifest)
    if not records:
        raise ParameterError(f"manifest {gt_manifest} has no records")

    def score_one(record):
        row = SampleScore(id=record.id)
        pred_path = os.path.join(str(pred_dir), f"{record.id}.png")
        if "clean" not in record.paths:
            row.failed = True
            row.note = "manifest record lacks a clean image"
            return row
        try:
            gt = pngio.load_image(manifest_mod.resolve(gt_manifest, record.paths["clean"]))
            pred = pngio.load_image(pred_path)
        except OSError as exc:
            row.failed = True
            row.note = str(exc)
            return row
        if pred.shape != gt.shape:
            row.failed = True
            row.note = f"prediction shape {pred.shape} != ground truth {gt.shape}"
            return row
        light = _load_role_mask(record, "light_mask", gt_manifest)
        if light is None:
            light = _fallback_light_mask(record, gt_manifest, light_threshold, se_radius)
        glare = _load_role_mask(record, "glare_mask", gt_manifest)
        streak = _load_role_mask(record, "streak_mask", gt_manifest)
        scores = region_psnrs(pred, gt, light, glare, streak, cap=cap, sample_id=record.id)
        row.s_psnr = scores.s_psnr
        row.g_psnr = scores.g_psnr
        row.global_psnr = scores.global_psnr
        present = scores.present()
        row.score = sum(present) / len(present) if present else None
        return row

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(score_one, records))
    else:
        rows = [score_one(r) for r in records]

    report = ScoreReport(rows=rows)
    report.failed = sum(1 for r in rows if r.failed)
    scored = [r for r in rows if not r.failed]
    report.evaluated = len(scored)
    for name in ("s_psnr", "g_psnr", "global_psnr"):
        vals = [getattr(r, name) for r in scored if getattr(r, name) is not None]
        report.absent_regions[name] = len(scored) - len(vals)
        setattr(report, f"mean_{name}", sum(vals) / len(vals) if vals else None)
    means = [
        v
        for v in (report.mean_s_psnr, report.mean_g_psnr, report.mean_global_psnr)
        if v is not None
    ]
    report.score = sum(means) / len(means) if means else None
    return report


def _load_role_mask(record, role, manifest_path):
    rel = record.paths.get(role)
    if rel is None:
        return None
    weights = pngio.load_mask_weights(manifest_mod.resolve(manifest_path, rel))
    return RegionMask(weights, role=role.removesuffix("_mask"))


def _fallback_light_mask(record, manifest_path, threshold, se_radius):
    rel = record.paths.get("corrupted")
    if rel is None:
        return None
    img = pngio.load_image(manifest_mod.resolve(manifest_path, rel))
    return extract_light_mask(img, threshold=threshold, se_radius=se_radius)


def _fmt(value, places=2):
    return "" if value is None else f"{value:.{places}f}"


def write_report_csv(report: ScoreReport, path):
    """CSV rows at 2 decimal places plus a trailing summary block."""
    os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,s_psnr,g_psnr,global_psnr\n")
        for row in sorted(report.rows, key=lambda r: r.id):
            fh.write(
                f"{row.id},{_fmt(row.s_psnr)},{_fmt(row.g_psnr)},{_fmt(row.global_psnr)}\n"
            )
        fh.write("# summary\n")
        fh.write(f"# mean_s_psnr={_fmt(report.mean_s_psnr)}\n")
        fh.write(f"# mean_g_psnr={_fmt(report.mean_g_psnr)}\n")
        fh.write(f"# mean_global_psnr={_fmt(report.mean_global_psnr)}\n")
        fh.write(f"# score={_fmt(report.score)}\n")
        fh.write(f"# evaluated={report.evaluated} failed={report.failed}\n")


def write_report_json(report: ScoreReport, path):
    """Full-precision JSON mirror of the report."""
    obj = {
        "rows": [
            {
                "id": r.id,
                "s_psnr": r.s_psnr,
                "g_psnr": r.g_psnr,
                "global_psnr": r.global_psnr,
                "score": r.score,
                "failed": r.failed,
                "note": r.note,
            }
            for r in sorted(report.rows, key=lambda r: r.id)
        ],
        "mean_s_psnr": report.mean_s_psnr,
        "mean_g_psnr": report.mean_g_psnr,
        "mean_global_psnr": report.mean_global_psnr,
        "score": report.score,
        "evaluated": report.evaluated,
        "failed": report.failed,
        "absent_regions": report.absent_regions,
    }
    os.makedirs(os.path.dirname(str(path)) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def format_table(report: ScoreReport) -> str:
    """Per-sample table sorted by score descending, best rows first."""
    lines = [f"{'id':<16}{'score':>9}{'s_psnr':>9}{'g_psnr':>9}{'global':>9}"]
    ordered = sorted(
        report.rows,
        key=lambda r: (-(r.score if r.score is not None else -math.inf), r.id),
    )
    for row in ordered:
        status = "  FAILED" if row.failed else ""
        lines.append(
            f"{row.id:<16}{_fmt(row.score):>9}{_fmt(row.s_psnr):>9}"
            f"{_fmt(row.g_psnr):>9}{_fmt(row.global_psnr):>9}{status}"
        )
    lines.append(
        f"score={_fmt(report.score)} "
        f"(S={_fmt(report.mean_s_psnr)}, G={_fmt(report.mean_g_psnr)}, "
        f"global={_fmt(report.mean_global_psnr)}; "
        f"{report.evaluated} scored, {report.failed} failed)"
    )
    return "\n".join(lines)

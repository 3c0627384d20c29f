"""Reference implementations of the published restoration loss kernels.

These are pure float64 numeric kernels; none of them compute gradients.
Norm-style terms are realized as means rather than sums so values are
resolution independent (multiply by the element count to recover a
sum-convention value). Perceptual terms take a pluggable feature
extractor, an (image -> flat vector) callable; the default flattens the
image unchanged, which keeps every compositional identity testable
without a pretrained network. Adversarial terms are accepted as
externally supplied scalars.
"""

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from flarebench import metrics
from flarebench.errors import ParameterError, ShapeError
from flarebench.imgcore import composite, require_image, require_same_shape
from flarebench.regionmask import as_weights, mask_or

SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


def flatten_features(img: np.ndarray) -> np.ndarray:
    """Default feature extractor: the image itself, flattened to float64."""
    return np.asarray(img, dtype=np.float64).ravel()


@dataclass(frozen=True)
class LossWeights:
    """Published mixing constants for the composite losses.

    Defaults are the values fixed by the teams; they round-trip through
    JSON unchanged.
    """

    usask_alpha: float = 0.01
    usask_beta: float = 0.01
    usask_gamma: float = 0.005
    actionbrain_lambda: float = 0.6
    actionbrain_delta: float = 0.001
    cevi_alpha: float = 0.33
    cevi_beta: float = 0.33
    cevi_gamma: float = 0.33
    recurrent_gammas: tuple = (1.0 / 32.0, 1.0 / 8.0, 1.0)
    mask_lambda: float = 0.1
    region_weight_inside: float = 5.0
    region_weight_outside: float = 1.0
    lvgroup_frequency_weight: float = 0.1

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LossWeights":
        obj = json.loads(text)
        obj["recurrent_gammas"] = tuple(obj["recurrent_gammas"])
        return cls(**obj)

    def override(self, **kwargs) -> "LossWeights":
        return replace(self, **kwargs)


DEFAULT_WEIGHTS = LossWeights()


def _diff(a, b):
    require_image(a)
    require_image(b)
    require_same_shape(a, b)
    return a.astype(np.float64) - b.astype(np.float64)


def l1(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference."""
    return float(np.mean(np.abs(_diff(a, b))))


def mse_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference."""
    d = _diff(a, b)
    return float(np.mean(d * d))


def smooth_l1(a: np.ndarray, b: np.ndarray, beta: float = 1.0) -> float:
    """Huber-style smooth L1: quadratic below beta, linear above."""
    beta = float(beta)
    if not beta > 0.0:
        raise ParameterError(f"smooth_l1 beta must be positive, got {beta}")
    d = np.abs(_diff(a, b))
    per = np.where(d < beta, 0.5 * d * d / beta, d - 0.5 * beta)
    return float(np.mean(per))


def charbonnier(a: np.ndarray, b: np.ndarray, eps: float = 1e-3) -> float:
    """Smooth L1 surrogate sqrt(d^2 + eps^2); floor is eps at d = 0."""
    eps = float(eps)
    if not eps > 0.0:
        raise ParameterError(f"charbonnier eps must be positive, got {eps}")
    d = _diff(a, b)
    return float(np.mean(np.sqrt(d * d + eps * eps)))


def perceptual_loss(a: np.ndarray, b: np.ndarray, fx=None) -> float:
    """Mean squared distance between extracted feature vectors."""
    fx = fx or flatten_features
    fa = np.asarray(fx(a), dtype=np.float64).ravel()
    fb = np.asarray(fx(b), dtype=np.float64).ravel()
    if fa.shape != fb.shape:
        raise ShapeError(f"feature lengths differ: {fa.shape} vs {fb.shape}")
    d = fa - fb
    return float(np.mean(d * d))


def separation_loss(Yc, Yf, Iy, If, fx=None) -> float:
    """Two-channel separation objective: content L1 + flare L1 + perceptual.

    The prediction is split into a content estimate Yc and a flare
    estimate Yf, each supervised against its target, plus a squared
    feature distance between the content estimate and its target.
    """
    return l1(Yc, Iy) + l1(Yf, If) + perceptual_loss(Yc, Iy, fx=fx)


# Alias under the team-tagged name the objective is usually cited by.
megfr_separation_loss = separation_loss


def triplet_loss(anchor, positive, negative, margin: float = 1.0) -> float:
    """max(0, d(a, p) - d(a, n) + margin) with mean-squared distances."""
    margin = float(margin)
    if margin < 0.0:
        raise ParameterError(f"triplet margin must be >= 0, got {margin}")
    a = np.asarray(anchor, dtype=np.float64).ravel()
    p = np.asarray(positive, dtype=np.float64).ravel()
    n = np.asarray(negative, dtype=np.float64).ravel()
    if not (a.shape == p.shape == n.shape):
        raise ShapeError("triplet operands must have equal lengths")
    d_ap = float(np.mean((a - p) ** 2))
    d_an = float(np.mean((a - n) ** 2))
    return max(0.0, d_ap - d_an + margin)


def actionbrain_loss(
    anchor,
    positive,
    negative,
    lam: float = DEFAULT_WEIGHTS.actionbrain_lambda,
    delta: float = DEFAULT_WEIGHTS.actionbrain_delta,
    margin: float = 1.0,
    fx=None,
) -> float:
    """Cascade objective: lam*MSE + delta*perceptual + (1-lam)*triplet.

    MSE and the perceptual term compare anchor and positive; the triplet
    runs in feature space (identity features by default).
    """
    fx = fx or flatten_features
    term_mse = mse_loss(anchor, positive)
    term_pl = perceptual_loss(anchor, positive, fx=fx)
    term_triplet = triplet_loss(fx(anchor), fx(positive), fx(negative), margin=margin)
    return lam * term_mse + delta * term_pl + (1.0 - lam) * term_triplet


def _correlate3(plane, kernel):
    """Dense 3x3 correlation with edge-mirroring padding, float64."""
    padded = np.pad(plane.astype(np.float64), 1, mode="symmetric")
    h, w = plane.shape
    out = np.zeros((h, w), dtype=np.float64)
    for i in range(3):
        for j in range(3):
            out += kernel[i, j] * padded[i:i + h, j:j + w]
    return out


def sobel_gradients(img: np.ndarray):
    """Per-channel Sobel responses along x and y, stacked like the input."""
    require_image(img)
    if img.ndim == 2:
        return _correlate3(img, SOBEL_X), _correlate3(img, SOBEL_Y)
    gx = np.stack([_correlate3(img[:, :, c], SOBEL_X) for c in range(img.shape[2])], axis=2)
    gy = np.stack([_correlate3(img[:, :, c], SOBEL_Y) for c in range(img.shape[2])], axis=2)
    return gx, gy


def gradient_loss_sobel(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared Sobel-gradient difference over both axes.

    Invariant to constant offsets between the operands.
    """
    require_same_shape(a, b)
    gxa, gya = sobel_gradients(a)
    gxb, gyb = sobel_gradients(b)
    return float(np.mean((gxa - gxb) ** 2 + (gya - gyb) ** 2))


def _forward_diff(img):
    x = img.astype(np.float64)
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    gx[:, :-1] = x[:, 1:] - x[:, :-1]
    gy[:-1, :] = x[1:, :] - x[:-1, :]
    return gx, gy


def fdn_loss(F: np.ndarray, F_ref: np.ndarray, grad: str = "sobel") -> float:
    """Flare-detection objective: MSE plus squared gradient difference.

    ``grad`` selects the gradient operator: "sobel" (default, consistent
    with the gradient loss above) or "diff" for plain forward differences.
    """
    require_same_shape(F, F_ref)
    if grad == "sobel":
        grad_term = gradient_loss_sobel(F, F_ref)
    elif grad == "diff":
        gxa, gya = _forward_diff(F)
        gxb, gyb = _forward_diff(F_ref)
        grad_term = float(np.mean((gxa - gxb) ** 2 + (gya - gyb) ** 2))
    else:
        raise ParameterError(f"grad must be 'sobel' or 'diff', got {grad!r}")
    return mse_loss(F, F_ref) + grad_term


def recurrent_reconstruction_loss(
    preds,
    ref: np.ndarray,
    gammas=DEFAULT_WEIGHTS.recurrent_gammas,
    fx=None,
) -> float:
    """Multi-step reconstruction objective over K refinement outputs.

    Per step k: gamma_k * (MSE + 1 - SSIM(pred_k, ref)) plus an unweighted
    mean absolute feature distance. Defaults to K = 3 with gammas
    1/32, 1/8, 1.
    """
    preds = list(preds)
    gammas = [float(g) for g in gammas]
    if len(preds) != len(gammas):
        raise ParameterError(
            f"got {len(preds)} predictions but {len(gammas)} step weights"
        )
    fx = fx or flatten_features
    total = 0.0
    for pred, gamma in zip(preds, gammas):
        require_same_shape(pred, ref)
        total += gamma * (mse_loss(pred, ref) + 1.0 - metrics.ssim(pred, ref))
        fa = np.asarray(fx(pred), dtype=np.float64).ravel()
        fb = np.asarray(fx(ref), dtype=np.float64).ravel()
        if fa.shape != fb.shape:
            raise ShapeError(f"feature lengths differ: {fa.shape} vs {fb.shape}")
        total += float(np.mean(np.abs(fa - fb)))
    return total


def mask_loss(pred_masks, flare_masks, lam: float = DEFAULT_WEIGHTS.mask_lambda) -> float:
    """Attention-mask supervision: lam * sum_k MSE(M_k, 1 - F_k)."""
    pred_masks = list(pred_masks)
    flare_masks = list(flare_masks)
    if len(pred_masks) != len(flare_masks):
        raise ParameterError(
            f"got {len(pred_masks)} predicted masks but {len(flare_masks)} flare masks"
        )
    total = 0.0
    for pred, flare in zip(pred_masks, flare_masks):
        mw = as_weights(pred).astype(np.float64)
        fw = as_weights(flare).astype(np.float64)
        if mw.shape != fw.shape:
            raise ShapeError(f"mask shapes differ: {mw.shape} vs {fw.shape}")
        d = mw - (1.0 - fw)
        total += float(np.mean(d * d))
    return float(lam) * total


def weighted_region_l1(
    pred: np.ndarray,
    gt: np.ndarray,
    flare_mask,
    w_in: float = DEFAULT_WEIGHTS.region_weight_inside,
    w_out: float = DEFAULT_WEIGHTS.region_weight_outside,
) -> float:
    """L1 with different weights inside and outside the flare region."""
    d = np.abs(_diff(pred, gt))
    w = as_weights(flare_mask).astype(np.float64)
    if w.shape != pred.shape[:2]:
        raise ShapeError(f"mask shape {w.shape} does not match image {pred.shape[:2]}")
    per_pixel = np.where(w > 0.5, float(w_in), float(w_out))
    if d.ndim == 3:
        per_pixel = per_pixel[:, :, None]
    return float(np.mean(per_pixel * d))


def global_regional_prediction(pred, clean, light_mask, nonflare_mask):
    """Composites used for global and regional supervision.

    The global view keeps the clean pixels inside the light-source mask;
    the regional view additionally keeps them wherever no flare fell
    (light OR non-flare). Any base loss evaluated on the pair against the
    clean image gives the corresponding term; mixing is the caller's
    choice.
    """
    require_same_shape(pred, clean)
    img_g = composite(clean, pred, light_mask)
    img_r = composite(clean, pred, mask_or(light_mask, nonflare_mask))
    return img_g, img_r


def frequency_reconstruction_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute difference of unnormalized 2-D DFT coefficients.

    Real and imaginary parts both count; channels average. Zero exactly
    when the operands are identical (the DFT is injective).
    """
    require_image(a)
    require_image(b)
    require_same_shape(a, b)

    def plane_term(x, y):
        fa = np.fft.fft2(x.astype(np.float64))
        fb = np.fft.fft2(y.astype(np.float64))
        parts = np.concatenate(
            [np.abs(fa.real - fb.real).ravel(), np.abs(fa.imag - fb.imag).ravel()]
        )
        return float(parts.mean())

    if a.ndim == 2:
        return plane_term(a, b)
    return float(np.mean([plane_term(a[:, :, c], b[:, :, c]) for c in range(a.shape[2])]))


def lvgroup_loss(
    a: np.ndarray,
    b: np.ndarray,
    freq_weight: float = DEFAULT_WEIGHTS.lvgroup_frequency_weight,
) -> float:
    """L1 plus weighted frequency reconstruction loss."""
    return l1(a, b) + float(freq_weight) * frequency_reconstruction_loss(a, b)


def usask_hybrid_loss(
    smooth: float,
    per: float,
    mge: float,
    adv: float,
    alpha: float = DEFAULT_WEIGHTS.usask_alpha,
    beta: float = DEFAULT_WEIGHTS.usask_beta,
    gamma: float = DEFAULT_WEIGHTS.usask_gamma,
) -> float:
    """Hybrid objective: smooth + alpha*per + beta*mge + gamma*adv.

    All four terms arrive as scalars; the adversarial term in particular
    is supplied externally since no discriminator lives here.
    """
    return float(smooth) + alpha * float(per) + beta * float(mge) + gamma * float(adv)


def cevi_deflare_loss(
    flare_term: float,
    ls_term: float,
    recon_term: float,
    alpha: float = DEFAULT_WEIGHTS.cevi_alpha,
    beta: float = DEFAULT_WEIGHTS.cevi_beta,
    gamma: float = DEFAULT_WEIGHTS.cevi_gamma,
) -> float:
    """Weighted sum of flare, light-source, and reconstruction terms."""
    return alpha * float(flare_term) + beta * float(ls_term) + gamma * float(recon_term)

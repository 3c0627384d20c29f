"""Command-line surface tying synthesis, masking, scoring, and losses together.

Subcommands:
  synth   generate a paired dataset from background and flare path lists
  score   evaluate a directory of predictions against a manifest
  mask    extract a light-source mask from an image
  blend   light-source blend-back or prediction/input ratio blending
  loss    evaluate any loss kernel on image files and print the scalar

Exit status: 0 on success, 1 on validation errors (including unknown
flags), 2 on I/O errors. The CLI adds no arithmetic of its own, so its
outputs match direct library calls bit for bit.
"""

import argparse
import dataclasses
import os
import sys

from flarebench import losskit, metrics, pngio, postproc, synth
from flarebench.errors import FlareBenchError, ParameterError
from flarebench.manifest import load_path_list, resolve
from flarebench.regionmask import extract_light_mask
from flarebench.runconfig import RunConfig, load_run_config, resolve_threads


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _cmd_synth(args):
    run = load_run_config(args.config) if args.config else RunConfig()
    config = run.synth
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    backgrounds = [resolve(args.backgrounds, p) for p in load_path_list(args.backgrounds)]
    flares = [resolve(args.flares, p) for p in load_path_list(args.flares)]
    threads = resolve_threads(args.threads, run.threads)
    records, errors = synth.synthesize_dataset(
        backgrounds, flares, config, args.count, args.out, threads=threads, bits=args.bits
    )
    print(f"wrote {len(records)} pairs to {args.out} ({len(errors)} errors)")
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    return 0


def _cmd_score(args):
    threads = resolve_threads(args.threads, 0)
    report = metrics.evaluate_run(
        args.pred,
        args.manifest,
        light_threshold=args.threshold,
        se_radius=args.se_radius,
        cap=args.cap,
        threads=threads,
    )
    os.makedirs(args.out, exist_ok=True)
    metrics.write_report_csv(report, os.path.join(args.out, "report.csv"))
    metrics.write_report_json(report, os.path.join(args.out, "report.json"))
    print(metrics.format_table(report))
    return 0 if report.ok() else 1


def _cmd_mask(args):
    img = pngio.load_image(args.input)
    mask = extract_light_mask(img, threshold=args.threshold, se_radius=args.se_radius)
    pngio.save_mask_weights(args.out, mask.weights)
    print(f"wrote {args.out} ({int(mask.weights.sum())} light-source pixels)")
    return 0


def _cmd_blend(args):
    pred = pngio.load_image(args.pred)
    original = pngio.load_image(args.input)
    if args.mode == "lightsource":
        out = postproc.blend_back_light_source(
            pred,
            original,
            threshold=args.threshold,
            se_radius=args.se_radius,
            feather=args.feather,
        )
    else:
        out = postproc.blend_with_input(pred, original, args.alpha)
    pngio.save_image(args.out, out, bits=args.bits)
    print(f"wrote {args.out}")
    return 0


def _parse_setting(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ParameterError(f"--set expects key=value, got {text!r}")
    value = value.strip()
    if "," in value:
        return key.strip(), tuple(float(p) for p in value.split(",") if p.strip())
    for cast in (int, float):
        try:
            return key.strip(), cast(value)
        except ValueError:
            pass
    return key.strip(), value


def _load_images(paths):
    return [pngio.load_image(p) for p in paths]


def _loss_two(fn, allowed=()):
    def handler(images, masks, opts):
        _expect(images, 2)
        return fn(images[0], images[1], **_pick(opts, allowed))

    return handler


def _expect(images, n):
    if len(images) != n:
        raise ParameterError(f"kernel expects {n} images, got {len(images)}")


def _pick(opts, allowed):
    unknown = set(opts) - set(allowed)
    if unknown:
        raise ParameterError(f"unknown settings {sorted(unknown)}; allowed: {sorted(allowed)}")
    return opts


def _loss_separation(images, masks, opts):
    _expect(images, 4)
    _pick(opts, ())
    return losskit.separation_loss(*images)


def _loss_triplet(images, masks, opts):
    _expect(images, 3)
    return losskit.triplet_loss(*images, **_pick(opts, ("margin",)))


def _loss_actionbrain(images, masks, opts):
    _expect(images, 3)
    return losskit.actionbrain_loss(*images, **_pick(opts, ("lam", "delta", "margin")))


def _loss_recurrent(images, masks, opts):
    if len(images) < 2:
        raise ParameterError("recurrent kernel expects K predictions plus the reference")
    opts = _pick(opts, ("gammas",))
    gammas = opts.get("gammas", losskit.DEFAULT_WEIGHTS.recurrent_gammas)
    if isinstance(gammas, (int, float)):
        gammas = (float(gammas),)
    return losskit.recurrent_reconstruction_loss(images[:-1], images[-1], gammas=gammas)


def _loss_mask(images, masks, opts):
    if not images or len(images) % 2:
        raise ParameterError("mask kernel expects predicted masks then flare masks, equal counts")
    half = len(images) // 2
    opts = _pick(opts, ("lam",))
    to_weights = [img if img.ndim == 2 else img.max(axis=2) for img in images]
    return losskit.mask_loss(to_weights[:half], to_weights[half:], **opts)


def _loss_weighted_region(images, masks, opts):
    _expect(images, 2)
    if len(masks) != 1:
        raise ParameterError("weighted_region_l1 needs exactly one --mask")
    return losskit.weighted_region_l1(
        images[0], images[1], masks[0], **_pick(opts, ("w_in", "w_out"))
    )


def _loss_usask(images, masks, opts):
    _expect(images, 2)
    opts = dict(_pick(opts, ("alpha", "beta", "gamma", "adv", "beta_smooth")))
    adv = float(opts.pop("adv", 0.0))
    beta_smooth = float(opts.pop("beta_smooth", 1.0))
    pred, gt = images
    return losskit.usask_hybrid_loss(
        losskit.smooth_l1(pred, gt, beta=beta_smooth),
        losskit.perceptual_loss(pred, gt),
        losskit.gradient_loss_sobel(pred, gt),
        adv,
        **opts,
    )


def _loss_cevi(images, masks, opts):
    _expect(images, 6)
    opts = _pick(opts, ("alpha", "beta", "gamma"))
    return losskit.cevi_deflare_loss(
        losskit.l1(images[0], images[1]),
        losskit.l1(images[2], images[3]),
        losskit.l1(images[4], images[5]),
        **opts,
    )


def _loss_global_regional(images, masks, opts):
    _expect(images, 2)
    if len(masks) != 2:
        raise ParameterError(
            "global_regional needs two --mask arguments: light then non-flare"
        )
    opts = dict(_pick(opts, ("w_global", "w_regional")))
    w_global = float(opts.get("w_global", 1.0))
    w_regional = float(opts.get("w_regional", 1.0))
    pred, clean = images
    img_g, img_r = losskit.global_regional_prediction(pred, clean, masks[0], masks[1])
    return w_global * losskit.l1(img_g, clean) + w_regional * losskit.l1(img_r, clean)


LOSS_KERNELS = {
    "l1": _loss_two(losskit.l1),
    "mse": _loss_two(losskit.mse_loss),
    "smooth_l1": _loss_two(losskit.smooth_l1, ("beta",)),
    "charbonnier": _loss_two(losskit.charbonnier, ("eps",)),
    "perceptual": _loss_two(losskit.perceptual_loss),
    "separation": _loss_separation,
    "megfr_separation": _loss_separation,
    "triplet": _loss_triplet,
    "actionbrain": _loss_actionbrain,
    "sobel_gradient": _loss_two(losskit.gradient_loss_sobel),
    "fdn": _loss_two(losskit.fdn_loss, ("grad",)),
    "recurrent": _loss_recurrent,
    "mask": _loss_mask,
    "weighted_region_l1": _loss_weighted_region,
    "frequency": _loss_two(losskit.frequency_reconstruction_loss),
    "lvgroup": _loss_two(losskit.lvgroup_loss, ("freq_weight",)),
    "usask_hybrid": _loss_usask,
    "cevi": _loss_cevi,
    "global_regional": _loss_global_regional,
}


def _cmd_loss(args):
    handler = LOSS_KERNELS.get(args.kernel)
    if handler is None:
        raise ParameterError(
            f"unknown loss kernel {args.kernel!r}; available: {sorted(LOSS_KERNELS)}"
        )
    opts = dict(_parse_setting(s) for s in args.set or [])
    images = _load_images(args.images)
    masks = [pngio.load_mask_weights(p) for p in args.mask or []]
    value = handler(images, masks, opts)
    print(repr(float(value)))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="flarebench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a paired flare dataset")
    p.add_argument("--backgrounds", required=True, help="newline-delimited background paths")
    p.add_argument("--flares", required=True, help="newline-delimited flare paths")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, required=True, help="number of pairs")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--config", default=None, help="key=value run configuration file")
    p.add_argument("--threads", type=int, default=None, help="worker processes")
    p.add_argument("--bits", type=int, default=16, choices=(8, 16), help="output bit depth")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("score", help="score predictions against a manifest")
    p.add_argument("--pred", required=True, help="directory of <id>.png predictions")
    p.add_argument("--manifest", required=True, help="ground-truth manifest (line JSON)")
    p.add_argument("--out", required=True, help="directory for report.csv / report.json")
    p.add_argument("--threshold", type=float, default=0.99, help="fallback light threshold")
    p.add_argument("--se-radius", type=int, default=1, dest="se_radius")
    p.add_argument("--cap", type=float, default=100.0, help="PSNR cap in dB")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("mask", help="extract a light-source mask")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.99)
    p.add_argument("--se-radius", type=int, default=1, dest="se_radius")
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("blend", help="blend a prediction with its input")
    p.add_argument("--pred", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("lightsource", "ratio"), default="lightsource")
    p.add_argument("--alpha", type=float, default=0.5, help="prediction weight (ratio mode)")
    p.add_argument("--threshold", type=float, default=0.99)
    p.add_argument("--se-radius", type=int, default=1, dest="se_radius")
    p.add_argument("--feather", type=int, default=0, help="odd blur size for soft mask edges")
    p.add_argument("--bits", type=int, default=16, choices=(8, 16))
    p.set_defaults(func=_cmd_blend)

    p = sub.add_parser("loss", help="evaluate a loss kernel on image files")
    p.add_argument("kernel", help=f"one of {sorted(LOSS_KERNELS)}")
    p.add_argument("images", nargs="+", help="operand image paths (kernel-specific order)")
    p.add_argument("--mask", action="append", help="mask image path (repeatable)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="weight overrides")
    p.set_defaults(func=_cmd_loss)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FlareBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def run():
    raise SystemExit(main())


if __name__ == "__main__":
    run()

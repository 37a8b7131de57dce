"""Command-line front end.

Subcommands cover the full pipeline: ``embed`` writes watermarked noise
plus a manifest, ``channel`` perturbs/tampers it, ``extract``/``locate``/
``evaluate`` recover messages and tamper masks and emit JSON reports,
and ``sweep`` runs seeded multi-trial experiments over tamper ratios.

Exit codes: 0 success, 2 validation/parameter error, 3 I/O or file
format error.  Every command is reproducible from its manifest: all
randomness is derived from seeds recorded there.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .arrays import derive_seed, read_array, seeded_uniforms, write_array
from .channel import (ChannelSpec, DEFAULT_CLEAN_FLIP_RATE, apply_channel, blob_mask,
                      calibrate_sigma, crop_mask, drop_mask, logo_mask)
from .decoding import DecisionThresholds, decide, plain_decode, tamper_aware_decode
from .errors import FormatError, LatentmarkError, ManifestError, ParameterError
from .localize import DvrdConfig, detect, upsample_mask, xor_map
from .metrics import auc, dice, iou
from .sampling import IntervalStrategy, reconstruct_bits, sample_noise
from .watermark import (CipherKey, TemplateSpec, as_message_bits, make_copyright_watermark,
                        make_localization_watermark, message_from_hex, message_to_hex)

MANIFEST_FORMAT = "latentmark/manifest-v1"
REPORT_FORMAT = "latentmark/report-v1"

_TAMPER_KINDS = ("none", "crop", "drop", "logo", "blob")


def message_digest(bits) -> str:
    """Hash of the packed message bits; stored instead of the plaintext."""
    packed = np.packbits(as_message_bits(bits)).tobytes()
    return hashlib.sha256(packed).hexdigest()


def _parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ParameterError(f"shape must be C,H,W: {text!r}")
    c, h, w = (int(p) for p in parts)
    if min(c, h, w) <= 0:
        raise ParameterError(f"shape must be positive: {text!r}")
    return c, h, w


def _load_manifest(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{path}: not a {MANIFEST_FORMAT} file")
    return manifest


def _dump_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _make_tamper_mask(kind: str, shape, ratio, count, smoothness, seed):
    if kind == "none":
        return None
    if ratio is None:
        raise ParameterError(f"--ratio is required for tamper kind {kind!r}")
    if kind == "crop":
        return crop_mask(shape, ratio, seed)
    if kind == "drop":
        return drop_mask(shape, ratio, seed)
    if kind == "logo":
        return logo_mask(shape, count, ratio, seed)
    if kind == "blob":
        return blob_mask(shape, ratio, smoothness, seed)
    raise ParameterError(f"unknown tamper kind {kind!r}")


def cmd_embed(args) -> int:
    shape = _parse_shape(args.shape)
    message = message_from_hex(args.message, args.length)
    key = CipherKey.from_hex(args.key, args.nonce)
    strategy = IntervalStrategy(args.intervals, args.theta)
    template = TemplateSpec(seed=args.template_seed, theta=args.theta)

    w_cop = make_copyright_watermark(message, key, shape)
    w_loc = make_localization_watermark(template, shape)
    noise = sample_noise(w_cop, w_loc, strategy, args.sample_seed)
    write_array(noise, args.out_noise)
    if args.out_template:
        write_array(w_loc, args.out_template)

    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "shape": list(shape),
        "length": int(message.size),
        "message_sha256": message_digest(message),
        "nonce": key.nonce.hex(),
        "strategy": strategy.to_json(),
        "template_seed": args.template_seed,
        "sample_seed": args.sample_seed,
    }
    _dump_json(manifest, args.out_manifest)
    print(f"wrote {args.out_noise} and {args.out_manifest}")
    return 0


def cmd_channel(args) -> int:
    manifest = _load_manifest(args.manifest)
    noise = read_array(args.noise, expect="latent").astype(np.float64)
    shape_hw = noise.shape[1:]

    mask = _make_tamper_mask(args.tamper, shape_hw, args.ratio, args.count,
                             args.smoothness, args.mask_seed)
    if args.calibrate is not None:
        strategy = IntervalStrategy.from_json(manifest["strategy"])
        sigma = calibrate_sigma(args.calibrate, strategy)
    else:
        sigma = args.sigma
    spec = ChannelSpec(sigma=sigma, tamper_mask=mask, seed=args.channel_seed)
    write_array(apply_channel(noise, spec), args.out)

    mask_path = None
    if mask is not None:
        mask_path = args.out_mask or (args.out + ".mask.npy")
        write_array(mask, mask_path)
    channel_entry = spec.to_json(mask_path)
    channel_entry["tamper"] = {"kind": args.tamper, "ratio": args.ratio,
                               "count": args.count, "smoothness": args.smoothness,
                               "mask_seed": args.mask_seed}
    if args.calibrate is not None:
        channel_entry["calibrated_to"] = args.calibrate
    manifest["channel"] = channel_entry
    _dump_json(manifest, args.out_manifest or args.manifest)
    print(f"wrote {args.out} (sigma={sigma:.5f})")
    return 0


def _reconstruct(args, need_message: bool):
    """Shared front half of extract/locate/evaluate."""
    manifest = _load_manifest(args.manifest)
    noise = read_array(args.noise, expect="latent").astype(np.float64)
    if list(noise.shape) != manifest["shape"]:
        raise ManifestError(
            f"noise shape {list(noise.shape)} does not match manifest {manifest['shape']}")
    strategy = IntervalStrategy.from_json(manifest["strategy"])
    template = TemplateSpec(seed=manifest["template_seed"], theta=strategy.theta)
    w_loc = make_localization_watermark(template, noise.shape)
    rec_c, rec_l = reconstruct_bits(noise, strategy)

    message = None
    if need_message:
        if args.message is None:
            raise ManifestError("--message is required to score decoding accuracy")
        message = message_from_hex(args.message, manifest["length"])
        if message_digest(message) != manifest["message_sha256"]:
            raise ManifestError("--message does not match the manifest's message hash")
    return manifest, strategy, w_loc, rec_c, rec_l, message


def _locate(w_loc, rec_l, cfg: DvrdConfig):
    return detect(xor_map(w_loc, rec_l), cfg)


def cmd_extract(args) -> int:
    manifest, strategy, w_loc, rec_c, rec_l, _ = _reconstruct(args, need_message=False)
    key = CipherKey.from_hex(args.key, manifest["nonce"])
    score, pred_mask = _locate(w_loc, rec_l, DvrdConfig())
    decoded_tad, tally = tamper_aware_decode(rec_c, pred_mask, key, manifest["length"])
    decoded_plain = plain_decode(rec_c, key, manifest["length"])
    report = {
        "format": REPORT_FORMAT,
        "strategy": strategy.to_json(),
        "message_hex": {"tamper_aware": message_to_hex(decoded_tad),
                        "plain": message_to_hex(decoded_plain)},
        "excluded_fraction": tally.excluded_fraction,
        "predicted_mask_area": float(pred_mask.mean()),
    }
    if args.message is not None:
        message = message_from_hex(args.message, manifest["length"])
        if message_digest(message) != manifest["message_sha256"]:
            raise ManifestError("--message does not match the manifest's message hash")
        thresholds = DecisionThresholds.for_rates(manifest["length"], args.fpr, args.users)
        report["bit_acc"] = {
            "tamper_aware": decide(message, decoded_tad, thresholds).bit_acc,
            "plain": decide(message, decoded_plain, thresholds).bit_acc,
        }
    _dump_json(report, args.out_report)
    print(f"wrote {args.out_report}")
    return 0


def cmd_locate(args) -> int:
    manifest, strategy, w_loc, rec_c, rec_l, _ = _reconstruct(args, need_message=False)
    cfg = DvrdConfig(tau=args.tau) if args.tau else DvrdConfig()
    score, pred_mask = _locate(w_loc, rec_l, cfg)
    write_array(pred_mask, args.out_mask)
    if args.out_score:
        write_array(score, args.out_score)
    if args.out_image_mask:
        write_array(upsample_mask(pred_mask, args.upsample), args.out_image_mask)
    report = {
        "format": REPORT_FORMAT,
        "strategy": strategy.to_json(),
        "predicted_mask_area": float(pred_mask.mean()),
        "localization": None,
    }
    if args.truth:
        truth = read_array(args.truth, expect="mask")
        report["localization"] = {"iou": iou(pred_mask, truth),
                                  "dice": dice(pred_mask, truth),
                                  "auc": auc(score, truth)}
    if args.out_report:
        _dump_json(report, args.out_report)
    print(json.dumps(report["localization"] or {"predicted_mask_area": report["predicted_mask_area"]}))
    return 0


def cmd_evaluate(args) -> int:
    manifest, strategy, w_loc, rec_c, rec_l, message = _reconstruct(args, need_message=True)
    key = CipherKey.from_hex(args.key, manifest["nonce"])
    score, pred_mask = _locate(w_loc, rec_l, DvrdConfig())
    decoded_tad, tally = tamper_aware_decode(rec_c, pred_mask, key, manifest["length"])
    decoded_plain = plain_decode(rec_c, key, manifest["length"])
    thresholds = DecisionThresholds.for_rates(manifest["length"], args.fpr, args.users)
    d_tad = decide(message, decoded_tad, thresholds)
    d_plain = decide(message, decoded_plain, thresholds)

    report = {
        "format": REPORT_FORMAT,
        "strategy": strategy.to_json(),
        "bit_acc": {"tamper_aware": d_tad.bit_acc, "plain": d_plain.bit_acc},
        "detected": d_tad.detected,
        "traced": d_tad.traced,
        "detect_k": thresholds.detect_k,
        "trace_k": thresholds.trace_k,
        "excluded_fraction": tally.excluded_fraction,
        "predicted_mask_area": float(pred_mask.mean()),
        "localization": None,
    }
    if args.truth:
        truth = read_array(args.truth, expect="mask")
        report["localization"] = {"iou": iou(pred_mask, truth),
                                  "dice": dice(pred_mask, truth),
                                  "auc": auc(score, truth)}
    _dump_json(report, args.out_report)
    print(f"bit_acc tamper_aware={d_tad.bit_acc:.4f} plain={d_plain.bit_acc:.4f} "
          f"detected={d_tad.detected} traced={d_tad.traced}")
    return 0


def cmd_sweep(args) -> int:
    shape = _parse_shape(args.shape)
    ratios = [float(r) for r in args.ratios.split(",")]
    if any(not 0.0 < r < 1.0 for r in ratios):
        raise ParameterError(f"ratios must lie in (0, 1): {ratios}")
    if args.trials < 1:
        raise ParameterError("trials must be >= 1")
    strategy = IntervalStrategy(args.intervals, args.theta)
    sigma = args.sigma
    if sigma is None:
        sigma = calibrate_sigma(DEFAULT_CLEAN_FLIP_RATE, strategy)
    key = CipherKey.from_hex(args.key, args.nonce)
    thresholds = DecisionThresholds.for_rates(args.length, args.fpr, args.users)

    rows = []
    for ratio in ratios:
        accs_tad, accs_plain, detected, traced = [], [], 0, 0
        for trial in range(args.trials):
            base = derive_seed(args.seed, f"sweep/{args.tamper}/{ratio}/{trial}")
            message = (seeded_uniforms(derive_seed(base, "message"), args.length)
                       < 0.5).astype(np.uint8)
            template = TemplateSpec(seed=derive_seed(base, "template"), theta=args.theta)
            w_cop = make_copyright_watermark(message, key, shape)
            w_loc = make_localization_watermark(template, shape)
            noise = sample_noise(w_cop, w_loc, strategy, derive_seed(base, "sample"))
            mask = _make_tamper_mask(args.tamper, shape[1:], ratio, args.count,
                                     args.smoothness, derive_seed(base, "mask"))
            spec = ChannelSpec(sigma=sigma, tamper_mask=mask, seed=derive_seed(base, "channel"))
            rec_c, rec_l = reconstruct_bits(apply_channel(noise, spec), strategy)
            _, pred_mask = detect(xor_map(w_loc, rec_l), DvrdConfig())
            decoded_tad, _ = tamper_aware_decode(rec_c, pred_mask, key, args.length)
            decoded_plain = plain_decode(rec_c, key, args.length)
            d_tad = decide(message, decoded_tad, thresholds)
            accs_tad.append(d_tad.bit_acc)
            accs_plain.append(decide(message, decoded_plain, thresholds).bit_acc)
            detected += d_tad.detected
            traced += d_tad.traced
        rows.append({
            "ratio": ratio,
            "trials": args.trials,
            "bit_acc_plain": float(np.mean(accs_plain)),
            "bit_acc_tamper_aware": float(np.mean(accs_tad)),
            "d_tpr": detected / args.trials,
            "t_tpr": traced / args.trials,
        })

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    if args.out_json:
        _dump_json({"format": REPORT_FORMAT, "tamper": args.tamper, "sigma": sigma,
                    "rows": rows}, args.out_json)
    print(f"wrote {args.out} ({len(rows)} ratios x {args.trials} trials, sigma={sigma:.5f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentmark",
                                     description="Latent-noise dual watermarking toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed both watermarks into fresh noise")
    p.add_argument("--message", required=True, help="message as hex")
    p.add_argument("--length", type=int, default=256, help="message length in bits")
    p.add_argument("--key", required=True, help="256-bit key as hex")
    p.add_argument("--nonce", default=None, help="96-bit nonce as hex (default: zero)")
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--intervals", type=int, choices=(3, 4), default=3)
    p.add_argument("--shape", default="4,64,64")
    p.add_argument("--template-seed", type=int, default=1)
    p.add_argument("--sample-seed", type=int, default=2)
    p.add_argument("--out-noise", required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-template", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("channel", help="perturb and optionally tamper a noise grid")
    p.add_argument("--noise", required=True)
    p.add_argument("--manifest", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--sigma", type=float, default=0.0)
    group.add_argument("--calibrate", type=float, default=None,
                       help="calibrate sigma to this localization flip rate")
    p.add_argument("--tamper", choices=_TAMPER_KINDS, default="none")
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--count", type=int, default=2, help="rectangles for logo tampering")
    p.add_argument("--smoothness", type=float, default=8.0, help="blob smoothing length")
    p.add_argument("--mask-seed", type=int, default=3)
    p.add_argument("--channel-seed", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--out-mask", default=None)
    p.add_argument("--out-manifest", default=None, help="default: update in place")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("extract", help="decode the message from perturbed noise")
    p.add_argument("--noise", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--message", default=None, help="reference message hex for accuracy")
    p.add_argument("--fpr", type=float, default=1e-6)
    p.add_argument("--users", type=int, default=10**6)
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("locate", help="detect tampered regions")
    p.add_argument("--noise", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--truth", default=None, help="ground-truth mask file")
    p.add_argument("--upsample", type=int, default=8)
    p.add_argument("--out-mask", required=True)
    p.add_argument("--out-score", default=None)
    p.add_argument("--out-image-mask", default=None)
    p.add_argument("--out-report", default=None)
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("evaluate", help="full report: decoding, decisions, localization")
    p.add_argument("--noise", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--message", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--fpr", type=float, default=1e-6)
    p.add_argument("--users", type=int, default=10**6)
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="multi-trial tamper-ratio experiment")
    p.add_argument("--tamper", choices=[k for k in _TAMPER_KINDS if k != "none"],
                   default="blob")
    p.add_argument("--ratios", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--sigma", type=float, default=None,
                   help="default: calibrate to the reference flip rate")
    p.add_argument("--length", type=int, default=256)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--intervals", type=int, choices=(3, 4), default=3)
    p.add_argument("--shape", default="4,64,64")
    p.add_argument("--key", default="00" * 32)
    p.add_argument("--nonce", default=None)
    p.add_argument("--count", type=int, default=2)
    p.add_argument("--smoothness", type=float, default=8.0)
    p.add_argument("--fpr", type=float, default=1e-6)
    p.add_argument("--users", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (json.JSONDecodeError, LatentmarkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

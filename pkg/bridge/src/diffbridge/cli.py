"""bridge-generate / bridge-invert command line entry points."""

from __future__ import annotations

import argparse
import sys

from .backend import BackendUnavailable, load_backend
from .config import BridgeConfig
from .pipeline import generate, invert


def _add_common(parser):
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--fake-backend", action="store_true",
                        help="use the in-repo stand-in backend (tests, dry runs)")


def _make_backend(args, config):
    if args.fake_backend:
        from .testing import FakeBackend
        return FakeBackend()
    return load_backend(config)


def main_generate(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bridge-generate",
        description="Denoise a watermarked noise file into an image")
    parser.add_argument("--noise", required=True, help="input noise .npy")
    parser.add_argument("--image", required=True, help="output image file")
    parser.add_argument("--latent-out", default=None, help="optional clean-latent dump")
    parser.add_argument("--prompt", default=None, help="override the config prompt")
    _add_common(parser)
    args = parser.parse_args(argv)
    try:
        config = BridgeConfig.from_yaml(args.config) if args.config else BridgeConfig()
        backend = _make_backend(args, config)
        generate(args.noise, args.image, config, backend,
                 latent_path=args.latent_out, prompt=args.prompt)
    except BackendUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.image}")
    return 0


def main_invert(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bridge-invert",
        description="Recover the initial noise estimate from an image")
    parser.add_argument("--image", required=True, help="input image file")
    parser.add_argument("--out", required=True, help="output noise .npy")
    _add_common(parser)
    args = parser.parse_args(argv)
    try:
        config = BridgeConfig.from_yaml(args.config) if args.config else BridgeConfig()
        backend = _make_backend(args, config)
        invert(args.image, args.out, config, backend)
    except BackendUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main_generate())

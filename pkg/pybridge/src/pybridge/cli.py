"""Command line: ``bridge serve --model <module:callable> [--tcp PORT]``.

The model callable receives graph dicts and returns probability lists;
``--conformance ba2motifs`` serves the built-in reference rule instead of
importing a user module.
"""

from __future__ import annotations

import argparse
import importlib
import sys

from .models import ba2motifs_conformance
from .server import serve_stdio, serve_tcp


def load_model(spec: str):
    module_name, _, attr = spec.partition(":")
    if not module_name or not attr:
        raise ValueError(f"--model expects module:callable, got {spec!r}")
    module = importlib.import_module(module_name)
    target = getattr(module, attr)
    return target() if isinstance(target, type) else target


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridge", description="wire-protocol classifier server")
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="serve a model over stdio or TCP")
    group = serve.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="module:callable returning prob lists")
    group.add_argument("--conformance", choices=["ba2motifs"],
                       help="serve a built-in reference model")
    serve.add_argument("--tcp", type=int, default=None,
                       help="listen on this TCP port instead of stdio")
    serve.add_argument("--num-classes", type=int, default=None)
    serve.add_argument("--feature-dim", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.conformance == "ba2motifs":
        model = ba2motifs_conformance()
    else:
        try:
            model = load_model(args.model)
        except (ImportError, AttributeError, ValueError) as exc:
            print(f"could not load model: {exc}", file=sys.stderr)
            return 2
    try:
        if args.tcp is not None:
            serve_tcp(model, args.tcp, args.num_classes, args.feature_dim)
        else:
            serve_stdio(model, args.num_classes, args.feature_dim)
    except KeyboardInterrupt:
        pass
    except BrokenPipeError:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())

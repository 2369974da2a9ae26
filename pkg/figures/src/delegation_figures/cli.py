"""Command line: render one figure from a JSON spec."""

from __future__ import annotations

import argparse
import sys

from .render import render
from .spec import SpecError, load_spec


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures", description="Render figures from experiment CSV outputs"
    )
    parser.add_argument("--spec", required=True, help="JSON figure spec")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        for path in render(spec):
            print(path)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()

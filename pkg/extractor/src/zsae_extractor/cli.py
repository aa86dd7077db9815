"""CLI: run an extraction job file.

Exit codes match the core convention: 0 success, 1 validation error,
2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import extract
from .job import JobError, load_job


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="zsae-extract",
        description="Encode videos and class descriptions into a zsae manifest.",
    )
    parser.add_argument("--job", required=True, help="extraction job JSON file")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        manifest_path = extract(load_job(args.job))
    except JobError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 2
    print(f"wrote {manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

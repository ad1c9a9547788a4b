#!/usr/bin/env python3
"""Build the offline demo corpus: four synthetic package archives plus the
mock transcript fixture that drives deterministic extraction."""

import argparse
from pathlib import Path

from ttpkit.demo import (
    build_coloram_archive,
    build_emptycode_archive,
    build_nometa_archive,
    build_oversized_archive,
    write_transcripts_fixture,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo-fixtures", help="output directory")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    built = [
        build_coloram_archive(out),
        build_nometa_archive(out),
        build_emptycode_archive(out),
        build_oversized_archive(out),
        write_transcripts_fixture(out / "transcripts.json"),
    ]
    for path in built:
        print(path)


if __name__ == "__main__":
    main()

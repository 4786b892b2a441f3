"""Regenerate the committed synthetic dataset fixtures.

Usage: python tools/make_datasets.py [directory] [seed]
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from yada.synthdata import write_default_sources  # noqa: E402

if __name__ == "__main__":
    directory = sys.argv[1] if len(sys.argv) > 1 else "fixtures/datasets"
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 1812
    for path in write_default_sources(directory, seed):
        print(f"wrote {path}")

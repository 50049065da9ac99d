"""
Generate the seeded synthetic-texture corpus used by train/ablate.
Writes <out>/train/*.png and a disjoint <out>/eval/*.png.

Usage:
    python scripts/make_synthetic_corpus.py [out_dir] [train_count] [eval_count]
"""

import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from loguru import logger

from gridwave.config import DATA_DIR
from gridwave.synthetic import write_train_eval


def make_corpus(out_dir: Path, train_count: int = 64, eval_count: int = 16, seed: int = 0):
    logger.info(f"[corpus] writing {train_count} training and {eval_count} eval textures to {out_dir}")
    written = write_train_eval(out_dir, train_count, eval_count, seed=seed)
    logger.info(f"[corpus] done: {len(written['train'])} train, {len(written['eval'])} eval")


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else DATA_DIR / "corpus"
    train = int(sys.argv[2]) if len(sys.argv) > 2 else 64
    evals = int(sys.argv[3]) if len(sys.argv) > 3 else 16
    make_corpus(out, train, evals)

"""End-to-end demo on generated frames: no dataset needed.

Builds disjoint train/test videos of synthetic tissue and smoke frames, then
runs the method comparison on them at a reduced frame size.

    python scripts/synthetic_demo.py --out-dir demo
"""
import argparse
import sys
from pathlib import Path

from smokefc.synthetic import write_split

sys.path.insert(0, str(Path(__file__).resolve().parent))
from compare_methods import main as compare  # noqa: E402


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="demo")
    p.add_argument("--videos", type=int, default=6, help="videos per split")
    p.add_argument("--frames", type=int, default=10, help="frames per video")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    a = p.parse_args(argv)

    root = Path(a.out_dir)
    ids = [f"{k:02d}" for k in range(1, 2 * a.videos + 1)]
    train = write_split(root / "frames", ids[: a.videos], "train.csv", frames_per_video=a.frames, seed=a.seed)
    test = write_split(root / "frames", ids[a.videos:], "test.csv", frames_per_video=a.frames, seed=a.seed)
    return compare([
        "--train-manifest", str(train), "--test-manifest", str(test), "--out-dir", str(root / "results"),
        "--frame-size", "96", "64", "--jobs", str(a.jobs),
    ])


if __name__ == "__main__":
    sys.exit(main())

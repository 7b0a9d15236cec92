"""Simulate the full two-block protocol, write the corpus, and analyze it.

    python3 scripts/run_protocol.py --participants 30 --seed 7 --out runs/seed7
"""
import argparse
import time
from pathlib import Path

from ghostguide.analysis import analyze, gnuplot_files, load_corpus, write_report
from ghostguide.config import AppConfig, load_config
from ghostguide.simulator import default_workers, run_experiment, write_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--participants", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path("runs/protocol"))
    ap.add_argument("--config", type=Path)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--no-motion", action="store_true", help="skip motion capture (much faster)")
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else AppConfig()
    cfg = cfg.with_overrides(protocol={"participants": args.participants,
                                       "record_motion": not args.no_motion})
    start = time.perf_counter()
    corpus = run_experiment(cfg, seed=args.seed, workers=args.workers)
    write_corpus(corpus, args.out / "corpus")
    print(f"simulated {len(corpus.logs)} logs in {time.perf_counter() - start:.1f} s")

    loaded = load_corpus(args.out / "corpus")
    files = analyze(loaded, with_similarity=not args.no_motion)
    files.update(gnuplot_files(loaded))
    write_report(files, args.out / "report")
    print(files["summary.txt"])


if __name__ == "__main__":
    main()

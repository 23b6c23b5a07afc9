#!/usr/bin/env python3
"""
Synthetic Ablation Runner

Generates the default planted-signal dataset (if absent), runs the four-arm
ablation over folds x repeats and prints the summary table.

Usage:
    python scripts/run_synthetic_ablation.py
    python scripts/run_synthetic_ablation.py --data data/synth --out results/synth --epochs 40
    python scripts/run_synthetic_ablation.py --amplitude 0   # chance-level control
"""

import sys
import argparse
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from mmgpl.cli import main as cli_main


def parse_args():
    parser = argparse.ArgumentParser(description="Run the four-arm ablation on synthetic data")
    parser.add_argument("--data", type=str, default=str(PROJECT_ROOT / "data" / "synth"),
                        help="Dataset directory (generated if it has no manifest)")
    parser.add_argument("--out", type=str, default=str(PROJECT_ROOT / "results" / "synth"),
                        help="Results directory")
    parser.add_argument("--config", type=str, default=str(PROJECT_ROOT / "config" / "run_config.json"))
    parser.add_argument("--epochs", type=int, default=None, help="Override train.epochs")
    parser.add_argument("--amplitude", type=float, default=None, help="Override signal_amplitude")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--by", choices=["arm", "modality"], default="arm")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    data_dir = Path(args.data)
    manifest = data_dir / "manifest.json"

    if not manifest.exists():
        gen = ["gen-data", "--out", str(data_dir), "--seed", str(args.seed)]
        if args.amplitude is not None:
            gen += ["--set", f"signal_amplitude={args.amplitude}"]
        code = cli_main(gen)
        if code != 0:
            return code

    ablate = [
        "ablate", "--config", args.config, "--data", str(manifest),
        "--bank", str(data_dir / "concepts.json"), "--out", args.out,
        "--by", args.by, "--seed", str(args.seed),
    ]
    if args.epochs is not None:
        ablate += ["--set", f"train.epochs={args.epochs}"]
        ablate += ["--set", f"train.decay_epochs={[e for e in (30, 60) if e < args.epochs]}"]
    code = cli_main(ablate)
    if code == 0:
        print((Path(args.out) / "summary.csv").read_text(encoding="utf-8"))
    return code


if __name__ == "__main__":
    sys.exit(main())

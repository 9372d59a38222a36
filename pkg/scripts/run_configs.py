"""Run every config under docs/configs and write reports plus series CSVs to an output directory."""

import argparse
import json
import sys
from pathlib import Path

from ergolab import cli

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(ROOT / "docs" / "configs"))
    ap.add_argument("--out", default="reports")
    args = ap.parse_args()
    worst = 0
    for cfg in sorted(Path(args.configs).glob("*.json")):
        kind = json.loads(cfg.read_text())["kind"]
        code = cli.main([kind, "--config", str(cfg), "--out", str(Path(args.out) / cfg.name)])
        print(f"{cfg.name:40s} exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())

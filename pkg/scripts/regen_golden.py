"""Regenerate the golden outputs under tests/golden from configs/.

Each Fig config is run as a lambda-demo (CSV) and, with the task swapped,
as an effective-hamiltonian (JSON).

Usage: python scripts/regen_golden.py [out_dir]
"""

import sys
from pathlib import Path

from qflq.cli import run
from qflq.config import parse_config

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"
CASES = ("fig1a", "fig1b", "fig2")
TASKS = (("lambda-demo", "csv"), ("effective-hamiltonian", "json"))


def regenerate(out_dir: Path = GOLDEN) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in CASES:
        cfg = parse_config((ROOT / "configs" / f"{name}.json").read_bytes())
        for task, ext in TASKS:
            target = out_dir / f"{name}.{task}.{ext}"
            code = run(cfg.model_copy(update={"task": task}), str(target))
            if code:
                raise SystemExit(f"{name} {task} exited with {code}")
            written.append(target)
    return written


if __name__ == "__main__":
    for path in regenerate(Path(sys.argv[1]) if len(sys.argv) > 1 else GOLDEN):
        print(path)

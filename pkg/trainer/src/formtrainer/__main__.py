"""CLI: run an experiment matrix from a JSON file.

    python -m formtrainer run experiment.json --results results/
"""

import argparse
import json
import sys
from pathlib import Path

from .matrix import run_matrix


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="formtrainer")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute an experiment matrix")
    runp.add_argument("experiment", type=Path, help="matrix JSON file")
    runp.add_argument("--results", type=Path, default=Path("results"))
    args = parser.parse_args(argv)

    matrix = json.loads(args.experiment.read_text())
    report = run_matrix(matrix, args.results)
    for cell in report["cells"]:
        ft = cell["finetune"]
        print(f"{cell['name']:10s} ppl {ft['mean_perplexity']:.3f} "
              f"+- {ft['ci95_halfwidth']:.3f}")
    if report["incomplete"]:
        print(f"incomplete cells: {[c['name'] for c in report['incomplete']]}")
    if report["ordering"]:
        print(f"ordering {report['ordering']['status']}: "
              f"{' < '.join(report['ordering']['realized'])}")
    return 0 if not report["incomplete"] else 1


if __name__ == "__main__":
    sys.exit(main())

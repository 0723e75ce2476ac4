import subprocess
import sys
import os
from itertools import product

from evaluation.run import EvaluationProcessor

WEIGHTS = [
    "denjoy:a0=0;1:1",
    "denjoy:a0=0;1:2",
    "raw:borel",
]

SELECTORS = ["regularity", "borel-sanity", "moments", "legendre", "asymptotic-ratios", "chebyshev-decay", "duality"]
SEEDS = [0]
REPORT_ROOT = os.path.join("output", "reports", "batch")


def run_experiment(weight, selector, seed):
    """Run one verify call and write its JSON report under REPORT_ROOT."""
    slug = weight.replace(":", "_").replace(";", "_").replace("=", "")
    out = os.path.join(REPORT_ROOT, slug, f"report_{selector}_{seed}.json")
    cmd = [
        sys.executable, "app.py", "verify",
        f"--weight={weight}",
        "--selector", selector,
        f"--seed={seed}",
        "--format=json",
        f"--out={out}",
    ]

    print(f"\n{'='*80}")
    print(f"Running: Weight={weight}, Suite={selector}, Seed={seed}")
    print(f"Command: {' '.join(cmd)}")
    print(f"{'='*80}\n")

    try:
        subprocess.run(cmd, capture_output=False, text=True, check=True)
        print(f"PASSED: {weight} - {selector}")
        return True
    except subprocess.CalledProcessError as e:
        # exit 1 is a failed check, 2 a usage or configuration error
        print(f"FAILED: {weight} - {selector} (exit {e.returncode})")
        return False


def main():
    """Run every weight/suite combination and summarize the verdicts."""
    print(f"Weights: {len(WEIGHTS)}")
    print(f"Suites: {len(SELECTORS)}")
    print(f"Total runs: {len(WEIGHTS) * len(SELECTORS) * len(SEEDS)}")

    successful = 0
    failed = 0
    for weight, selector, seed in product(WEIGHTS, SELECTORS, SEEDS):
        if run_experiment(weight, selector, seed):
            successful += 1
        else:
            failed += 1

    print(f"\n{'='*80}")
    print(f"Completed: {successful} passed, {failed} failed")
    print(f"{'='*80}")

    processor = EvaluationProcessor(REPORT_ROOT)
    for name, path in processor.save_results().items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()

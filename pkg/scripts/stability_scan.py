"""Search the maximum stable time step for both methods on the test scenarios.

Usage: python scripts/stability_scan.py [out_dir]
"""

import sys

sys.path.insert(0, "src")

from ibflow import studies


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "out/stability"
    report = studies.study_stability(out)
    for row in report["rows"]:
        print(*row)
    print(f"csv: {report['csv']}")


if __name__ == "__main__":
    main()

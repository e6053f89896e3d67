"""Run the eight-platelet wall-aggregation scenario and report link counts.

Usage: python scripts/aggregation_demo.py [out_dir] [t_end]
"""

import sys

sys.path.insert(0, "src")

from ibflow import runner, snapshots, studies


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "out/aggregation"
    t_end = float(sys.argv[2]) if len(sys.argv) > 2 else 2.4
    cfg = studies.aggregation_config(t_end=t_end)
    res = runner.run_simulation(cfg, out_dir=out)
    print(f"status {res.status}; {res.steps} steps to t={res.time:g}")
    header, _fields, markers, links = snapshots.read_snapshot(res.out_dir / "final.snap")
    wall = int((links[:, 2] < 0).sum()) if len(links) else 0
    pair = len(links) - wall
    print(f"{len(markers)} platelets remain; {wall} wall links, {pair} pair links")


if __name__ == "__main__":
    main()

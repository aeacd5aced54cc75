"""Print compact result tables from a directory of experiment outputs.

Usage: python scripts/report.py OUT_DIR
"""

import json
import sys
from pathlib import Path

import numpy as np


def _summary(root: Path, name: str):
    p = root / name / "summary.json"
    return json.loads(p.read_text()) if p.exists() else None


def sweep_table(s, keys=("sync_proxy", "proxy_rtf", "n_global_exchanges", "bytes_global", "f_irr_engine")):
    schemes = list(s["points"][0]["schemes"])
    print(f"{'value':>8} {'scheme':>16} " + " ".join(f"{k:>20}" for k in keys))
    for pt in s["points"]:
        for sc in schemes:
            st = pt["schemes"][sc]
            cells = [f"{st[k]['mean']:>11.4g} ±{st[k]['sd']:<7.2g}" for k in keys]
            print(f"{pt['value']!s:>8} {sc:>16} " + " ".join(cells))


def slopes(s, key="f_irr_engine"):
    """Least-squares slope of ``key`` against log2(M) per scheme."""
    M = np.log2([pt["value"] for pt in s["points"]])
    out = {}
    for sc in s["points"][0]["schemes"]:
        y = [pt["schemes"][sc][key]["mean"] for pt in s["points"]]
        out[sc] = float(np.polyfit(M, y, 1)[0])
    return out


def rows_table(s):
    for r in s["rows"]:
        extra = f" engine={r['engine']:.5f}" if "engine" in r else ""
        print(f"{r['quantity']:>12} {json.dumps(r['params'], sort_keys=True):<55} analytic={r['analytic']:<10.5g} "
              f"oracle={r['oracle']:<10.5g} rel_err={r['relative_error']:.2e}{extra}")


def main(root: str) -> None:
    root = Path(root)
    for name in ("single_run", "weak_scaling", "cv_area_sweep", "cv_rate_sweep", "d_sweep"):
        s = _summary(root, name)
        if s is None:
            continue
        print(f"\n## {name}")
        sweep_table(s)
        if name == "weak_scaling":
            print("slope of f_irr_engine per doubling of M:", slopes(s))
    for name in ("theory_check", "access_check"):
        s = _summary(root, name)
        if s is not None:
            print(f"\n## {name}")
            rows_table(s)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "out")

#!/usr/bin/env python3
"""
Compare grid and radial reference energies of analytic densities across resolutions
"""
import sys
import argparse
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

import pandas as pd
from loguru import logger

from src.config.settings import settings
from src.energy import energy_density_reference
from src.kernels import KernelSpec
from src.measures import DensitySpec

CASES = {
    # name: (density, kernel, closed form or None)
    "newtonian_ball_3d": (lambda: DensitySpec.uniform_ball(3), lambda: KernelSpec.power_law(3, -1.0, 2.0), 1.8),
    "log_disk_2d": (lambda: DensitySpec.uniform_ball(2), lambda: KernelSpec.power_law(2, "log", 2.0), 0.75),
    "log_polynomial_2d": (lambda: DensitySpec.figure1_polynomial(2), lambda: KernelSpec.power_law(2, "log", 2.0),
                          None),
}


def check_case(name: str, resolutions) -> pd.DataFrame:
    make_rho, make_kernel, exact = CASES[name]
    rho, k = make_rho(), make_kernel()
    logger.info(f"\n[{name}] {k.label}, density {rho.kind.value}")
    rows = []
    for resolution in resolutions:
        row = {"case": name, "resolution": resolution}
        for method in ("grid", "radial"):
            if method == "grid" and rho.d == 3 and resolution > 32:
                row[method] = float("nan")
                continue
            row[method] = energy_density_reference(rho, k, resolution=resolution, method=method)
        row["exact"] = exact if exact is not None else float("nan")
        rows.append(row)
        logger.info(f"  n={resolution:4d}  grid={row['grid']:.10f}  radial={row['radial']:.10f}"
                    + (f"  exact={exact:.10f}" if exact is not None else ""))
    return pd.DataFrame(rows)


def main():
    parser = argparse.ArgumentParser(description="Reference energy convergence check")
    parser.add_argument("--case", action="append", choices=sorted(CASES), help="Case to run (default: all)")
    parser.add_argument("--resolutions", type=int, nargs="+", default=[16, 32, 64])
    parser.add_argument("--csv", help="Also write the table to this CSV file")
    args = parser.parse_args()

    settings.show_progress = False
    settings.configure_logging()
    logger.info("=" * 80)
    logger.info("🚀 Reference energy check")
    logger.info("=" * 80)

    table = pd.concat([check_case(name, args.resolutions) for name in (args.case or sorted(CASES))],
                      ignore_index=True)
    if args.csv:
        try:
            table.to_csv(args.csv, index=False)
        except Exception as e:
            logger.error(f"Failed to write {args.csv}: {e}")
            raise
        logger.info(f"\n✅ Table written to {args.csv}")

    logger.info("\n" + "=" * 80)
    logger.info("✅ Done")
    logger.info("=" * 80)


if __name__ == "__main__":
    main()

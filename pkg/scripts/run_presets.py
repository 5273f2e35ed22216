#!/usr/bin/env python3
"""
Run and certify the shipped presets, then print one comparison table.

Usage:
    python -m scripts.run_presets
    python -m scripts.run_presets --preset 5bus-step-1ca --preset 5bus-step-2ca
    python -m scripts.run_presets --out output/presets --skip-certificate
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from feederctl.config import get_settings
from feederctl.exceptions import DivergedPlantError, FeederCtlError
from feederctl.presets import available_presets, preset_path
from feederctl.sim import ScenarioSetup, build_summary, run, settling_time, tracking_error_before_changes
from feederctl.stability import build_certificate

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def run_preset(name: str, out_dir: Path, certify: bool = True) -> Dict[str, Any]:
    """Simulate one preset, write its outputs and collect headline numbers."""
    setup = ScenarioSetup.from_file(preset_path(name))
    out = out_dir / name
    out.mkdir(parents=True, exist_ok=True)

    row: Dict[str, Any] = {"preset": name, "areas": len(setup.tree.areas), "status": "ok"}
    if certify:
        report = build_certificate(setup.certificate_inputs())
        (out / "certificate.txt").write_text(report.to_text(), encoding="utf-8")
        row["certificate"] = "pass" if report.passed else "fail"

    started = time.time()
    try:
        log = run(setup)
    except DivergedPlantError as e:
        log = e.log
        row["status"] = "diverged"
    row["wall_s"] = time.time() - started

    log.to_csv(out / "timeseries.csv", float_format=get_settings().csv_float_format)
    (out / "summary.txt").write_text(build_summary(log), encoding="utf-8")

    if len(log):
        changes = log.metadata.get("reference_change_times") or [0.0]
        row["settling_s"] = settling_time(log, "dp0_w", 1000.0, start=changes[0])
        row["tracking_w"] = tracking_error_before_changes(log)
    return row


def _format(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def print_table(rows: List[Dict[str, Any]]) -> None:
    columns = ["preset", "areas", "certificate", "status", "settling_s", "tracking_w", "wall_s"]
    print(" ".join(f"{column:>14s}" if column != "preset" else f"{column:28s}" for column in columns))
    for row in rows:
        cells = [_format(row.get(column)) for column in columns]
        print(f"{cells[0]:28s} " + " ".join(f"{cell:>14s}" for cell in cells[1:]))


def main():
    parser = argparse.ArgumentParser(description="Run and certify the shipped feederctl presets")
    parser.add_argument(
        "--preset", "-p",
        action="append",
        choices=available_presets(),
        help="Preset to run; repeatable (default: all)"
    )
    parser.add_argument(
        "--out", "-o",
        default=None,
        help="Output directory (default: FEEDERCTL_OUTPUT_DIR/presets)"
    )
    parser.add_argument(
        "--skip-certificate",
        action="store_true",
        help="Only simulate"
    )

    args = parser.parse_args()

    settings = get_settings()
    out_dir = Path(args.out) if args.out else Path(settings.output_dir) / "presets"
    names = args.preset or available_presets()
    logger.info(f"Running {len(names)} presets into {out_dir}")

    rows = []
    start_time = time.time()
    for name in names:
        try:
            rows.append(run_preset(name, out_dir, certify=not args.skip_certificate))
        except FeederCtlError as e:
            logger.error(f"Preset {name} failed: {e}")
            rows.append({"preset": name, "status": "error"})

    logger.info(f"Finished {len(rows)} presets in {time.time() - start_time:.2f}s")
    print_table(rows)
    if any(row["status"] != "ok" for row in rows):
        sys.exit(1)


if __name__ == "__main__":
    main()

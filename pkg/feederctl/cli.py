"""
Command-line entry point.

Usage:
    python -m feederctl run --scenario 5bus-step-2ca --out output/5bus-2ca
    python -m feederctl certify --scenario 5bus-step-1ca --form derived
    python -m feederctl linearize --scenario 5bus-step-2ca --out output/lin
    python -m feederctl presets
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .config import get_settings
from .exceptions import ConfigurationError, DivergedPlantError, FeederCtlError, LinearizationError
from .presets import PRESETS, resolve_scenario
from .sim import ScenarioSetup, build_summary, run
from .stability import build_certificate, save_sensitivities

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CERTIFICATE_FAILED = 2
EXIT_GAINS_EXCEED_BOUND = 3
EXIT_PLANT_DIVERGED = 4

EPILOG = """\
exit codes:
  0  success
  1  configuration or file error
  2  stability certificate fails (M + M^T not positive definite)
  3  configured gains exceed the certified bound
  4  plant power flow diverged (partial log still written by `run`)
"""


def _output_dir(args: argparse.Namespace, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path(get_settings().output_dir) / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_setup(args: argparse.Namespace, sensitivities: Optional[str] = None) -> ScenarioSetup:
    path = resolve_scenario(args.scenario)
    setup = ScenarioSetup.from_file(path, overrides=args.set or [], sensitivities=Path(sensitivities) if sensitivities else None)
    logger.info(f"Loaded scenario '{setup.scenario.name}' from {path}")
    return setup


def cmd_run(args: argparse.Namespace) -> int:
    """Simulate a scenario and write timeseries.csv, summary.txt and metadata.json."""
    setup = _load_setup(args, args.sensitivities)
    out = _output_dir(args, setup.scenario.name)
    float_format = get_settings().csv_float_format
    try:
        log = run(setup)
        code = EXIT_OK
    except DivergedPlantError as e:
        log = e.log
        code = EXIT_PLANT_DIVERGED
        if log is None:
            raise

    log.to_csv(out / "timeseries.csv", float_format=float_format)
    summary = build_summary(log)
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    (out / "metadata.json").write_text(log.metadata_json(), encoding="utf-8")
    print(summary, end="")
    logger.info(f"Wrote {len(log)} rows to {out / 'timeseries.csv'}")
    return code


def cmd_certify(args: argparse.Namespace) -> int:
    """Evaluate the stability certificate and gain bound."""
    setup = _load_setup(args)
    out = _output_dir(args, f"{setup.scenario.name}-certificate")
    inputs = setup.certificate_inputs(vder_model=args.vder_model)
    physical = {
        (i, j): setup.global_model.block(i, j, "physical") for i in setup.tree.order for j in setup.tree.order
    }
    report = build_certificate(inputs, form=args.form, physical_K=physical)
    (out / "certificate.json").write_text(report.to_json(), encoding="utf-8")
    (out / "certificate.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    if not report.passed:
        logger.warning(f"Certificate failed: lambda_min(M + M^T) = {report.lambda_min:.4e}")
    elif not report.gains_ok:
        logger.warning(f"Gains exceed the certified bound: ratio {report.gain_ratio:.4e} > {report.alpha_bar:.4e}")
    return report.exit_code


def cmd_linearize(args: argparse.Namespace) -> int:
    """Dump every area's sensitivities and offsets to sensitivities.npz."""
    setup = _load_setup(args)
    out = _output_dir(args, f"{setup.scenario.name}-sensitivities")
    path = out / "sensitivities.npz"
    save_sensitivities(setup.global_model, path)
    for area_id in setup.tree.order:
        local = setup.global_model.local_model(area_id)
        print(f"{area_id}: {local.K.shape[0]} measurements x {local.K.shape[1]} channels")
    print(f"Wrote {path}")
    return EXIT_OK


def cmd_presets(args: argparse.Namespace) -> int:
    """List shipped presets."""
    for name, description in PRESETS.items():
        print(f"{name:28s} {description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feederctl",
        description="Hierarchical feedback-optimization simulator for distribution feeders",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default: FEEDERCTL_LOG_LEVEL or INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--scenario", "-s", required=True, help="Preset name or scenario JSON path")
        sub.add_argument("--out", "-o", default=None, help="Output directory")
        sub.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="Override a scenario key (dotted path, JSON value); repeatable",
        )

    run_parser = subparsers.add_parser("run", help="Simulate a scenario", epilog=EPILOG,
                                       formatter_class=argparse.RawDescriptionHelpFormatter)
    add_scenario_args(run_parser)
    run_parser.add_argument("--sensitivities", default=None, help="Cached sensitivities (.npz from `linearize`)")
    run_parser.set_defaults(handler=cmd_run)

    certify_parser = subparsers.add_parser("certify", help="Check the stability certificate", epilog=EPILOG,
                                           formatter_class=argparse.RawDescriptionHelpFormatter)
    add_scenario_args(certify_parser)
    certify_parser.add_argument("--form", choices=["printed", "derived"], default="printed")
    certify_parser.add_argument("--vder-model", choices=["transfer", "physical"], default="transfer")
    certify_parser.set_defaults(handler=cmd_certify)

    linearize_parser = subparsers.add_parser("linearize", help="Dump sensitivity matrices", epilog=EPILOG,
                                             formatter_class=argparse.RawDescriptionHelpFormatter)
    add_scenario_args(linearize_parser)
    linearize_parser.set_defaults(handler=cmd_linearize)

    presets_parser = subparsers.add_parser("presets", help="List shipped presets")
    presets_parser.set_defaults(handler=cmd_presets)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = args.log_level or get_settings().log_level
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return args.handler(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergedPlantError, LinearizationError) as e:
        logger.error(f"Power flow failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PLANT_DIVERGED
    except FeederCtlError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

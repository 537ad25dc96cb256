#!/usr/bin/env python3
"""
Handset Antenna Simulator command line
Subcommands over one shared configuration file:
- pattern-cut, sphere-map, polarization-map: deterministic pattern exports
- imbalance, combine: full-sphere statistics
- blockage-mc: seeded Monte-Carlo over scenarios and orientations
- validate, self-test, init-config: utilities

Exit codes: 0 success, 2 configuration / validation / table errors,
3 contract violations, 1 anything unexpected.
"""

import argparse
import logging
import sys
import traceback
from importlib import resources
from pathlib import Path
from typing import List, Optional

from .blockage_sns import AttenuationTableError, InvalidRange, ProbabilityError, parse_scenario
from .config_manager import ConfigManager, ConfigurationError, SimConfig
from .device_layout import LayoutError
from .element_pattern import PatternParameterError, QuadratureTooCoarse
from .errors import ContractViolation, InvalidArgument
from .field_synthesis import EmptyInput, TooFewAntennas, UnknownAntenna
from .simulation import (
    SelfTestFailure,
    combine_export,
    imbalance_export,
    monte_carlo_export,
    pattern_cut_export,
    polarization_map_export,
    self_test,
    sphere_map_export,
)
from .sphere_geom import PoleDegenerate

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_CONTRACT = 3

CONFIG_TEMPLATE_RESOURCE = 'config_template.yaml'

CONFIG_ERRORS = (ConfigurationError, AttenuationTableError, LayoutError, PatternParameterError,
                 InvalidArgument, InvalidRange, ProbabilityError, EmptyInput, TooFewAntennas, UnknownAntenna)
CONTRACT_ERRORS = (ContractViolation, PoleDegenerate, QuadratureTooCoarse)

logger = logging.getLogger(__name__)


def setup_logging(log_level: str = 'INFO', log_file: Optional[str] = None) -> None:
    """
    Setup logging configuration

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional log file path
    """
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))

    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format=log_format,
        datefmt=date_format,
        handlers=handlers
    )


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', '-c', help='YAML configuration file')
    common.add_argument('--seed', type=int, help='Unsigned 64-bit seed (overrides run.seed)')
    common.add_argument('--out', '-o', help='Output CSV file')
    common.add_argument('--carrier-hz', type=float, help='Carrier frequency in Hz (overrides run.carrier_hz)')
    common.add_argument('--active-ids', type=int, nargs='+', help='Active antenna ids (overrides run.active_ids)')
    common.add_argument('--n-jobs', type=int, help='Worker threads (overrides run.n_jobs)')
    common.add_argument('--attenuation-table', help='Attenuation table YAML (overrides blockage.attenuation_table)')
    common.add_argument('--debug', action='store_true', help='Enable debug logging')
    common.add_argument('--log-file', help='Write log to file')
    common.add_argument('--verbose', '-v', action='store_true', help='Log full tracebacks on errors')
    return common


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parse command line arguments

    Returns:
        Parsed arguments namespace
    """
    parser = argparse.ArgumentParser(
        prog='handset-antenna-sim',
        description="Handset antenna pattern, blockage and coverage simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Reference pattern cut at theta = 90
  handset-antenna-sim pattern-cut --theta 90 --out cut.csv

  # Full-sphere imbalance CDF in the one-hand browsing scenario
  handset-antenna-sim imbalance --config sim.yaml --scenario OneHandBrowsing --out imbalance.csv

  # Seeded Monte-Carlo run
  handset-antenna-sim blockage-mc --config sim.yaml --seed 7 --out mc.csv

  # Write a configuration template
  handset-antenna-sim init-config --out sim.yaml
        """
    )
    common = _common_arguments()
    sub = parser.add_subparsers(dest='command', required=True)

    cut = sub.add_parser('pattern-cut', parents=[common], help='Azimuth cut of the element and port patterns')
    cut.add_argument('--theta', type=float, default=90.0, help='Polar angle of the cut in degrees (default: 90)')
    cut.add_argument('--phi-step', type=float, default=1.0, help='Azimuth step in degrees (default: 1)')
    cut.add_argument('--normalize', action='store_true', help='Subtract each column peak')
    cut.add_argument('--raw', action='store_true', help='Only the reference element pattern')

    sphere = sub.add_parser('sphere-map', parents=[common], help='Full-sphere gain per port')
    sphere.add_argument('--scenario', default='FreeSpace', help='Blockage scenario (default: FreeSpace)')

    imbalance = sub.add_parser('imbalance', parents=[common], help='Imbalance CDF and summary')
    imbalance.add_argument('--scenario', default='FreeSpace', help='Blockage scenario (default: FreeSpace)')
    imbalance.add_argument('--threshold-db', type=float, default=10.0,
                           help='Imbalance threshold reported in the summary (default: 10)')

    mc = sub.add_parser('blockage-mc', parents=[common], help='Seeded Monte-Carlo over scenarios and orientations')
    mc.add_argument('--replications', type=int, help='Replication count (overrides run.replications)')

    combine = sub.add_parser('combine', parents=[common], help='Equal-weight pair combining study')
    combine.add_argument('--position-phase', action='store_true',
                         help='Include the geometric phase of the antenna positions')

    sub.add_parser('polarization-map', parents=[common], help='Polarization orientation per port')
    sub.add_parser('validate', parents=[common], help='Validate the configuration and exit')

    st = sub.add_parser('self-test', parents=[common], help='Pattern, efficiency and geometry contracts')
    st.add_argument('--samples', type=int, default=10_000, help='Random rotations checked (default: 10000)')

    sub.add_parser('init-config', parents=[common], help='Write a configuration template')

    return parser.parse_args(argv)


DEFAULT_OUTPUTS = {
    'pattern-cut': 'pattern_cut.csv',
    'sphere-map': 'sphere_map.csv',
    'imbalance': 'imbalance_cdf.csv',
    'blockage-mc': 'blockage_mc.csv',
    'combine': 'combining.csv',
    'polarization-map': 'polarization_map.csv',
    'init-config': 'handset_antenna_config.yaml',
}


def load_simulation_config(args: argparse.Namespace, require_seed: bool = False) -> SimConfig:
    """Configuration file (or defaults) with command line overrides, validated"""
    if args.config:
        config = ConfigManager(args.config)
    else:
        config = ConfigManager()
        logger.info("Using default configuration")
    config.update_from_args(args)
    cfg = config.build(require_seed=require_seed)

    if not args.debug:
        logging.getLogger().setLevel(getattr(logging, cfg.log_level))
    if cfg.log_file and not args.log_file:
        handler = logging.FileHandler(cfg.log_file, encoding='utf-8')
        handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                                               '%Y-%m-%d %H:%M:%S'))
        logging.getLogger().addHandler(handler)
    return cfg


def generate_sample_config(out_path: str) -> None:
    """Copy the packaged configuration template"""
    template = resources.files('handset_antenna_sim.data').joinpath(CONFIG_TEMPLATE_RESOURCE)
    output_path = Path(out_path)
    output_path.write_text(template.read_text(encoding='utf-8'), encoding='utf-8')
    print(f"✅ Sample configuration saved to: {output_path}")
    print("📝 Edit this file to customize your simulation settings")


def validate_configuration(cfg: SimConfig) -> None:
    print("✅ Configuration is valid")
    print(f"📱 Layout: {cfg.layout.kind.value}, antennas {list(cfg.layout.ids)}, active {list(cfg.active_ids)}")
    print(f"📡 Pattern: {cfg.pattern.kind.value}, peak {cfg.pattern.g_max:g} dBi")
    print(f"📶 Carrier: {cfg.run.carrier_hz / 1e9:g} GHz")
    print(f"✋ Blockage: {cfg.blockage.model}, probabilities {cfg.blockage.probabilities.as_dict()}")
    print(f"📋 Attenuation table: {cfg.blockage.table_path or 'packaged example'} "
          f"({cfg.blockage.table.provenance})")
    print(f"🎲 Seed: {cfg.run.seed}, replications {cfg.run.replications}")


def run_command(args: argparse.Namespace) -> int:
    out = args.out or DEFAULT_OUTPUTS.get(args.command)

    if args.command == 'init-config':
        generate_sample_config(out)
        return EXIT_OK

    cfg = load_simulation_config(args, require_seed=(args.command == 'blockage-mc'))

    if args.command == 'validate':
        validate_configuration(cfg)

    elif args.command == 'self-test':
        results = self_test(cfg.run.quadrature_step_deg, args.samples,
                            cfg.run.seed if cfg.run.seed is not None else 0)
        failed = [r.name for r in results if not r.passed]
        for r in results:
            print(f"{'✅' if r.passed else '❌'} {r.name}: {r.detail}")
        if failed:
            raise SelfTestFailure(f"Self-test failed: {failed}")
        print(f"\n🎉 All {len(results)} checks passed")

    elif args.command == 'pattern-cut':
        rows = pattern_cut_export(cfg, args.theta, args.normalize, out, args.raw, args.phi_step)
        print(f"📈 Pattern cut at theta={args.theta:g}: {rows} rows written to {out}")

    elif args.command == 'sphere-map':
        grid = sphere_map_export(cfg, out, parse_scenario(args.scenario))
        print(f"🌐 Sphere map: {grid.shape[0] * grid.shape[1]} directions written to {out}")

    elif args.command == 'imbalance':
        stats = imbalance_export(cfg, out, parse_scenario(args.scenario), args.threshold_db)
        print(f"📊 Max imbalance {stats.max_db:.2f} dB, median {stats.weighted_median():.2f} dB, "
              f"{100 * stats.fraction_above(args.threshold_db):.1f}% of the sphere above "
              f"{args.threshold_db:g} dB")
        print(f"📈 CDF written to {out}")

    elif args.command == 'blockage-mc':
        frame = monte_carlo_export(cfg, out)
        print(f"🎲 {len(frame)} replications written to {out}")
        print(f"✋ Scenarios: {frame['scenario'].value_counts().to_dict()}")

    elif args.command == 'combine':
        frame = combine_export(cfg, out, args.position_phase)
        if len(frame):
            worst = frame.loc[frame['combined_peak_dbi'].idxmin()]
            print(f"🔗 {len(frame)} pairs written to {out}; lowest combined peak "
                  f"{worst['combined_peak_dbi']:.2f} dBi ({worst['port_a']}+{worst['port_b']})")

    elif args.command == 'polarization-map':
        rows = polarization_map_export(cfg, out)
        print(f"🧭 Polarization map: {rows} directions written to {out}")

    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code"""
    args = parse_arguments(argv)

    log_level = 'DEBUG' if args.debug else 'INFO'
    setup_logging(log_level, args.log_file)

    try:
        return run_command(args)

    except CONFIG_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    except CONTRACT_ERRORS as e:
        logger.error(f"Contract violation: {e}")
        return EXIT_CONTRACT

    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        if args.debug or args.verbose:
            logger.error("Full traceback:")
            logger.error(traceback.format_exc())
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())

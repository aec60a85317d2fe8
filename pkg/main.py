#!/usr/bin/env python3
"""
fermilab-nrc - norm-resolvent convergence lab for fermionic N-body operators
Command-line entry point
"""

import sys
import argparse
from pathlib import Path

# Add current directory to path for imports
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))

from loguru import logger
from core.config import ConfigManager, DEFAULT_CONFIG_PATH
from core.enums import ExperimentKind
from core.exceptions import ConfigurationError

# 하위 명령 설명
SUBCOMMAND_HELP = {
    ExperimentKind.CALIBRATE: "calibrate λ_ε against a target two-body energy",
    ExperimentKind.NORM_SWEEP: "odd-sector norm ‖v_ε R_0(z)‖ over the ε sweep",
    ExperimentKind.RATE_FIT: "resolvent-difference norms over the ε sweep and rate fit",
    ExperimentKind.KK_CHECK: "dense Konno–Kuroda identity, factorization and S(z) bound",
    ExperimentKind.VERIFY: "Hardy, log-Hölder, cutoff and Vandermonde inequality suite",
    ExperimentKind.THOMAS_CHECK: "matched-grid ε² scaling and fermionic stability",
    ExperimentKind.REPORT: "compare fitted exponents in the output directory with predictions",
    ExperimentKind.RESONANCE: "zero-energy resonance of the coulombic well",
    ExperimentKind.STRONG_CHECK: "λ_ε‖V_ε φ‖ on a collared antisymmetric field",
}


def setup_logging(debug: bool = False, config_manager: ConfigManager = None):
    """
    Setup logging configuration from the YAML logging section

    Args:
        debug: Enable debug logging (overrides config)
        config_manager: loaded configuration (None: defaults)
    """
    # Remove default logger
    logger.remove()

    logging_config = config_manager.get_logging_config() if config_manager else {}

    # Check if logging is enabled
    if not logging_config.get('enabled', True):
        logger.add(sys.stderr, level="WARNING")
        return

    # Get log directory
    log_path = Path(logging_config.get('log_path', './logs'))
    log_path.mkdir(parents=True, exist_ok=True)

    # Console logging
    console_config = logging_config.get('console', {})
    if console_config.get('enabled', True):
        console_level = "DEBUG" if debug else console_config.get('level', 'INFO')
        console_format = console_config.get(
            'format',
            '<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | <level>{message}</level>'
        )
        colorize = console_config.get('colorize', True)

        logger.add(
            sys.stderr,
            format=console_format,
            level=console_level,
            colorize=colorize
        )

    # File logging
    file_config = logging_config.get('file', {})
    file_format = file_config.get(
        'format',
        '{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} | {message}'
    )
    if file_config.get('enabled', True):
        file_level = "DEBUG" if debug else file_config.get('level', 'DEBUG')
        file_name = file_config.get('filename', 'nrc_{time:YYYY-MM-DD}.log')

        logger.add(
            log_path / file_name,
            format=file_format,
            level=file_level,
            rotation=file_config.get('rotation', '1 day'),
            retention=file_config.get('retention', '7 days'),
            compression=file_config.get('compression', None),
            catch=True
        )

    # Error log (separate file for errors)
    error_config = logging_config.get('error_log', {})
    if error_config.get('enabled', False):
        logger.add(
            log_path / error_config.get('filename', 'nrc_errors_{time:YYYY-MM-DD}.log'),
            format=file_format,
            level=error_config.get('level', 'ERROR'),
            rotation=error_config.get('rotation', '10 MB'),
            retention=error_config.get('retention', '30 days'),
            catch=True
        )

    # JSON log (structured logging)
    json_config = logging_config.get('json_log', {})
    if json_config.get('enabled', False):
        logger.add(
            log_path / json_config.get('filename', 'nrc_{time:YYYY-MM-DD}.json'),
            format="{message}",
            level="DEBUG",
            serialize=json_config.get('serialize', True),
            rotation="1 day",
            retention="7 days",
            catch=True
        )

    logger.info("Logging initialized from configuration")


def build_parser() -> argparse.ArgumentParser:
    """CLI 파서: 전역 플래그 + 실험 종류별 하위 명령"""
    parser = argparse.ArgumentParser(
        prog="fermilab-nrc",
        description="Norm-resolvent convergence experiments for fermionic N-body Schrödinger operators"
    )
    parser.add_argument("--config", type=str, default=str(DEFAULT_CONFIG_PATH),
                        help=f"Path to YAML config (default: {DEFAULT_CONFIG_PATH.name})")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes for sweep rows")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (overrides config)")
    parser.add_argument("--out", type=str, default=None, help="Output directory (overrides config)")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for kind in ExperimentKind:
        sub = subparsers.add_parser(kind.value, help=SUBCOMMAND_HELP[kind])
        sub.add_argument("--particles", type=int, default=None, help="Number of particles N")
        sub.add_argument("--dim", type=int, choices=(1, 2, 3), default=None, help="Dimension d per particle")
    return parser


def main(argv=None):
    """Main application entry point"""
    args = build_parser().parse_args(argv)

    try:
        config_manager = ConfigManager.get_instance(config_path=args.config)
    except ConfigurationError as e:
        # 로깅 설정 전이므로 기본 sink 로 출력
        logger.remove()
        logger.add(sys.stderr, level="ERROR")
        logger.error(f"Invalid configuration: {e}")
        sys.exit(1)

    setup_logging(debug=args.debug, config_manager=config_manager)
    app_display_name = f"{config_manager.app_config.app_name}/{config_manager.app_config.version}"
    logger.info(f"Starting {app_display_name} ({args.command})...")

    try:
        config_manager.apply_overrides(workers=args.workers, seed=args.seed, out_dir=args.out,
                                       kind=args.command, n_particles=args.particles, dim=args.dim)
        from harness.experiments import run_experiment
        flags = {"config": args.config, "workers": config_manager.experiment.workers,
                 "seed": config_manager.experiment.seed, "out": config_manager.experiment.output.out_dir,
                 "debug": args.debug, "command": args.command}
        outcome = run_experiment(config_manager.experiment, flags, version=config_manager.app_config.version)
    except Exception as e:
        logger.exception(f"Fatal error: {e}")
        sys.exit(1)

    sys.exit(outcome.exit_status)


if __name__ == "__main__":
    main()

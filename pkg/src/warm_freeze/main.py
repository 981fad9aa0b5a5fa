"""Command-line entry point for the warm-freeze toolkit."""

from __future__ import annotations

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

from warm_freeze import __version__
from warm_freeze.artifacts import canonical_json
from warm_freeze.commands import (
    cmd_eval,
    cmd_gen_data,
    cmd_pretrain,
    cmd_report,
    cmd_run_cdwf,
    cmd_run_lora,
    cmd_sweep_warm,
    cmd_train_ref,
    paths_for,
)
from warm_freeze.config import ConfigManager
from warm_freeze.exceptions import (
    ArtifactError,
    ConfigError,
    InfeasibleBudgetError,
    WarmFreezeError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_IO = 4

VERBS = [
    "gen-data",
    "pretrain",
    "train-ref",
    "run-cdwf",
    "run-lora",
    "eval",
    "report",
    "sweep-warm",
]


def setup_logging(
    debug: bool = False,
    config: Optional[ConfigManager] = None,
) -> None:
    """Configure logging for the application.

    Args:
        debug: If True, set log level to DEBUG (overrides config)
        config: Optional config manager for log settings (level, file, rotation)
    """
    log_config: Dict[str, Any] = {}
    if config:
        log_config = config.get("logging", {})

    # --debug takes precedence over the configured level
    if debug:
        log_level = logging.DEBUG
    else:
        level_name = str(log_config.get("level", "INFO")).upper()
        log_level = getattr(logging, level_name, logging.INFO)

    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Remove existing handlers to avoid duplicates on reconfigure
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(log_format, datefmt=date_format))
    root_logger.addHandler(console_handler)

    log_file = log_config.get("file", "")
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = RotatingFileHandler(
            log_file,
            maxBytes=int(log_config.get("max_bytes", 10485760)),
            backupCount=int(log_config.get("backup_count", 3)),
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(logging.Formatter(log_format, datefmt=date_format))
        root_logger.addHandler(file_handler)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Returns:
        Parsed command-line arguments
    """
    parser = argparse.ArgumentParser(
        prog="pv-warm-freeze",
        description="Budget-aware warm-freeze transfer learning for PV attack detection",
    )
    parser.add_argument("verb", choices=VERBS, help="Command to run")
    parser.add_argument("--config", type=str, default=None, help="YAML or JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="Global seed (default: 42)")
    parser.add_argument(
        "--attack", choices=["bias", "drift", "spike"], default=None, help="Target attack kind"
    )
    parser.add_argument(
        "--budget",
        type=float,
        action="append",
        default=None,
        help="Trainable-parameter budget f_max; repeat for a sweep",
    )
    parser.add_argument(
        "--rank",
        type=int,
        action="append",
        default=None,
        help="Forced CDWF rank, or LoRA baseline rank(s)",
    )
    parser.add_argument("--warm-epochs", type=int, default=None, help="Warm-start epochs")
    parser.add_argument("--ft-epochs", type=int, default=None, help="Fine-tuning epochs")
    parser.add_argument(
        "--no-epoch-parity",
        action="store_true",
        help="Allow e_warm + e_ft to differ from e_full (warm-start sweeps)",
    )
    parser.add_argument("--out", type=str, default=None, help="Output directory")
    parser.add_argument("--workers", type=int, default=None, help="Corpus generation processes")
    parser.add_argument("--method", type=str, default=None, help="Method to evaluate (eval)")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    return parser.parse_args(argv)


def build_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Dot-notation config overrides from flags; unset flags map to None and are skipped."""
    forced_rank = None
    if args.verb == "run-cdwf" and args.rank:
        if len(args.rank) != 1:
            raise ConfigError("run-cdwf accepts a single --rank")
        forced_rank = args.rank[0]
    return {
        "seed": args.seed,
        "attack_kind": args.attack,
        "output_dir": args.out,
        "dataset.workers": args.workers,
        "cdwf.budgets": args.budget,
        "cdwf.forced_rank": forced_rank,
        "training.enforce_epoch_parity": False if args.no_epoch_parity else None,
    }


def load_config(args: argparse.Namespace) -> ConfigManager:
    """Load the config file, apply flag overrides and keep the epoch budgets matched.

    When only one of --warm-epochs / --ft-epochs is given, the other is
    derived from the configured e_full.

    Raises:
        ConfigError: If the file or the overrides are invalid
    """
    manager = ConfigManager(user_config_path=args.config, overrides=build_overrides(args))
    e_full = manager.run_config.training.e_full
    e_warm, e_ft = args.warm_epochs, args.ft_epochs
    if e_warm is not None and e_ft is None:
        e_ft = e_full - e_warm
    elif e_ft is not None and e_warm is None:
        e_warm = e_full - e_ft
    manager.update_config({"training.e_warm": e_warm, "training.e_ft": e_ft})
    return manager


def run_verb(args: argparse.Namespace, manager: ConfigManager) -> Any:
    """Dispatch a verb and return a JSON-serializable summary."""
    config = manager.run_config
    manager.save_config(str(paths_for(config).resolved_config()))

    if args.verb == "gen-data":
        return cmd_gen_data(config).to_dict()
    if args.verb == "pretrain":
        return cmd_pretrain(config).to_dict()
    if args.verb == "train-ref":
        return cmd_train_ref(config).to_dict()
    if args.verb == "run-cdwf":
        return [r.to_dict() for r in cmd_run_cdwf(config)]
    if args.verb == "run-lora":
        return [r.to_dict() for r in cmd_run_lora(config, ranks=args.rank)]
    if args.verb == "eval":
        if not args.method:
            raise ConfigError("eval needs --method")
        return cmd_eval(config, args.method).to_dict()
    if args.verb == "report":
        return {k: str(v) for k, v in cmd_report(config).items()}
    budget = args.budget[0] if args.budget else None
    return {k: str(v) for k, v in cmd_sweep_warm(config, budget=budget).items()}


def _summary(value: Any) -> Any:
    """Drop bulky per-epoch and per-block fields from printed rows."""
    if isinstance(value, list):
        return [_summary(v) for v in value]
    if isinstance(value, dict):
        return {k: v for k, v in value.items() if k not in ("history", "importances")}
    return value


def main(argv: Optional[List[str]] = None) -> NoReturn:
    """Main application entry point."""
    args = parse_args(argv)

    # Basic logging setup (before config load, for startup errors)
    setup_logging(args.debug)
    logger.info("pv-warm-freeze v%s: %s", __version__, args.verb)

    try:
        manager = load_config(args)
        setup_logging(args.debug, manager)
        summary = run_verb(args, manager)
    except InfeasibleBudgetError as e:
        logger.error("Infeasible budget: %s", e)
        sys.exit(EXIT_INFEASIBLE)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        sys.exit(EXIT_CONFIG)
    except (ArtifactError, OSError) as e:
        logger.error("I/O error: %s", e)
        sys.exit(EXIT_IO)
    except WarmFreezeError as e:
        logger.error("%s failed: %s", args.verb, e)
        sys.exit(EXIT_ERROR)

    print(canonical_json(_summary(summary)), end="")
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()

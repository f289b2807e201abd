"""Command-line interface for relaxfree."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from relaxfree import __version__
from relaxfree.config import EXPERIMENTS, ExperimentConfig
from relaxfree.config_file import (
    ConfigFileError,
    config_dict_to_config,
    load_config_file,
    load_env_config,
    merge_configs,
    parse_k,
    save_config_file,
)
from relaxfree.exporter import Exporter
from relaxfree.harness import (
    BURGERS_CFLS,
    BURGERS_CONVERGENCE_T_END,
    EPS_SWEEP,
    OSCILLATOR_CONVERGENCE_T_END,
    OSCILLATOR_DTS,
    REGION_RESOLUTION,
    TARGETS,
    TargetResult,
    convergence_table,
    reproduce,
    run,
    stability_study,
    write_convergence_table,
)
from relaxfree.integrators import METHODS
from relaxfree.tableau import (
    KVectorError,
    UnknownSchemeError,
    available_schemes,
    builtin_tableau,
    declared_order_holds,
    default_k,
    format_tableau,
    validate_k,
)
from relaxfree.utils import setup_logging

logger = logging.getLogger("relaxfree")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2
EXIT_GOLDEN = 3


def parse_k_arg(text: str) -> Tuple[float, ...]:
    """argparse type for --k "1,2,-2,-1"."""
    try:
        return parse_k(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(
            f"Invalid k-vector: '{text}'. Use comma-separated numbers (e.g., 1,2,-2,-1). Error: {e}"
        )


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Enable verbose logging",
    )

    parser = argparse.ArgumentParser(
        prog="relaxfree",
        description="Energy-conserving Runge-Kutta integrators and their reference experiments.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  relaxfree list-schemes
  relaxfree run oscillator --mode rf --scheme RK44 --dt 0.1 --t-end 100
  relaxfree run dissipative --mode r --dt 0.7 --t-end 0.7
  relaxfree run burgers --mode classical --scheme SSPRK33 --cfl 0.3
  relaxfree run --config configs/table1_rf_dt0.5.toml
  relaxfree reproduce table1 fig1 --out results
  relaxfree converge burgers --mode idt --schemes RK44
  relaxfree stability --scheme RK44 --eps -0.05 0 0.05

Modes:
  classical  - the base Runge-Kutta method
  idt        - relaxed update, time advances by dt
  r          - relaxed update, time advances by gamma*dt
  rf         - perturbed weights b + eps*k, time advances by dt

Exit codes:
  0 success, 1 configuration error, 2 integration failure, 3 golden-check failure
        """,
    )

    parser.add_argument(
        "-V", "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    # run
    p_run = sub.add_parser("run", parents=[common], help="Run one experiment")
    p_run.add_argument(
        "experiment",
        nargs="?",
        choices=EXPERIMENTS,
        help="Experiment to run (may come from --config instead)",
    )
    p_run.add_argument("--config", type=Path, metavar="PATH", help="Flat TOML experiment file")
    p_run.add_argument("-s", "--scheme", metavar="NAME", help="Base scheme (default: RK44)")
    p_run.add_argument("-M", "--mode", choices=METHODS, help="Integration mode (default: rf)")
    step = p_run.add_mutually_exclusive_group()
    step.add_argument("--dt", type=float, metavar="FLOAT", help="Step size (dissipative, oscillator)")
    step.add_argument("--mu", type=float, metavar="FLOAT", help="Fraction of the stable step (advection)")
    step.add_argument("--cfl", type=float, metavar="FLOAT", help="dt / dx (Burgers)")
    p_run.add_argument("--t-end", type=float, metavar="FLOAT", help="Final time")
    p_run.add_argument("--seed", type=int, metavar="INT", help="White-noise seed")
    p_run.add_argument("--k", type=parse_k_arg, metavar="K1,K2,...", help="RF multipliers")
    p_run.add_argument("--m", type=int, metavar="INT", help="Spectral grid size (default: 128)")
    p_run.add_argument("--problem", choices=("oscillator", "burgers"), help="Problem for the convergence experiment")
    p_run.add_argument("--levels", type=int, metavar="INT", help="Step halvings for the convergence experiment")
    p_run.add_argument("--record-every", type=int, metavar="INT", help="Time-series CSV stride")
    p_run.add_argument("-o", "--out", type=Path, metavar="DIR", help="Output directory (default: ./results)")
    p_run.add_argument("--report", type=Path, metavar="PATH", help="Also write the run summary to this file")
    p_run.add_argument("--write-config", type=Path, metavar="PATH", help="Write the resolved configuration and exit")

    # reproduce
    p_rep = sub.add_parser("reproduce", parents=[common], help="Reproduce published tables and figures")
    p_rep.add_argument("targets", nargs="+", choices=TARGETS + ("all",), metavar="TARGET",
                       help=f"One or more of: {', '.join(TARGETS)}, all")
    p_rep.add_argument("-o", "--out", type=Path, default=Path("./results"), metavar="DIR",
                       help="Output directory (default: ./results)")
    p_rep.add_argument("--t-end", type=float, metavar="FLOAT", help="Override the final time of long runs")
    p_rep.add_argument("--report", type=Path, metavar="PATH", help="Also write a combined report to this file")

    # converge
    p_conv = sub.add_parser("converge", parents=[common], help="Convergence table for several schemes")
    p_conv.add_argument("problem", choices=("oscillator", "burgers"))
    p_conv.add_argument("-M", "--mode", choices=METHODS, default="rf", help="Integration mode (default: rf)")
    p_conv.add_argument("--schemes", nargs="+", metavar="NAME", help="Schemes (default: all)")
    p_conv.add_argument("--steps", nargs="+", type=float, metavar="FLOAT",
                        help="Step sizes (oscillator) or CFL numbers (burgers)")
    p_conv.add_argument("--t-end", type=float, metavar="FLOAT", help="Final time")
    p_conv.add_argument("-o", "--out", type=Path, default=Path("./results"), metavar="DIR",
                        help="Output directory (default: ./results)")

    # stability
    p_stab = sub.add_parser("stability", parents=[common], help="Stability limits and region grids")
    p_stab.add_argument("-s", "--scheme", default="RK44", metavar="NAME", help="Base scheme (default: RK44)")
    p_stab.add_argument("--k", type=parse_k_arg, metavar="K1,K2,...", help="RF multipliers")
    p_stab.add_argument("--eps", nargs="+", type=float, default=list(EPS_SWEEP), metavar="FLOAT",
                        help="Perturbation values (default: -0.05 -0.025 0 0.025 0.05)")
    p_stab.add_argument("--resolution", type=int, default=REGION_RESOLUTION, metavar="INT",
                        help=f"Grid points per axis (default: {REGION_RESOLUTION})")
    p_stab.add_argument("-o", "--out", type=Path, default=Path("./results"), metavar="DIR",
                        help="Output directory (default: ./results)")

    # list-schemes
    sub.add_parser("list-schemes", parents=[common], help="Show registered tableaus")

    return parser


def build_config(parsed: argparse.Namespace) -> ExperimentConfig:
    """Layer config file, environment and flags into an ExperimentConfig.

    Raises:
        ConfigFileError: If the config file cannot be read.
        ValueError: If the merged configuration is invalid.
    """
    file_config: Dict[str, Any] = load_config_file(parsed.config) if parsed.config else {}
    cli_config = {
        "experiment": parsed.experiment,
        "scheme": parsed.scheme,
        "mode": parsed.mode,
        "k": parsed.k,
        "dt": parsed.dt,
        "mu": parsed.mu,
        "cfl": parsed.cfl,
        "t_end": parsed.t_end,
        "seed": parsed.seed,
        "m": parsed.m,
        "problem": parsed.problem,
        "levels": parsed.levels,
        "record_every": parsed.record_every,
        "output_path": parsed.out,
        "verbose": parsed.verbose or None,
    }
    merged = merge_configs(file_config, load_env_config(), cli_config)

    # a step flag on the command line replaces whichever step the file set
    for key in ("dt", "mu", "cfl"):
        if cli_config[key] is not None:
            for other in ("dt", "mu", "cfl"):
                if other != key:
                    merged.pop(other, None)

    return ExperimentConfig(**config_dict_to_config(merged))


def cmd_run(parsed: argparse.Namespace) -> int:
    try:
        config = build_config(parsed)
    except (ValueError, TypeError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    # verbose may come from the experiment file or RELAXFREE_VERBOSE
    if config.verbose and not parsed.verbose:
        setup_logging(verbose=True)

    if parsed.write_config:
        path = save_config_file(config.to_dict(), parsed.write_config)
        print(f"Saved to: {path}")
        return EXIT_OK

    summary = run(config)
    lines = summary.lines()

    print("\n" + "=" * 50)
    for line in lines:
        print(line)
    print("Artifacts:")
    for path in summary.artifacts:
        print(f"  {path}")
    print("=" * 50 + "\n")

    if parsed.report:
        parsed.report.parent.mkdir(parents=True, exist_ok=True)
        parsed.report.write_text("\n".join(lines) + "\n", encoding="utf-8")

    return EXIT_INTEGRATION if summary.aborted else EXIT_OK


def _report_lines(result: TargetResult) -> List[str]:
    status = "PASSED" if result.passed else "FAILED"
    lines = [f"{result.target}: {status}"]
    for check in result.checks:
        mark = "PASS" if check.passed else "FAIL"
        lines.append(f"  [{mark}] {check.name}: {check.measured} (expected {check.expected})")
    for failure in result.failures:
        lines.append(f"  [RUN FAILED] {failure}")
    for note in result.notes:
        lines.append(f"  note: {note}")
    return lines


def cmd_reproduce(parsed: argparse.Namespace) -> int:
    targets = list(TARGETS) if "all" in parsed.targets else list(dict.fromkeys(parsed.targets))
    results = [reproduce(target, parsed.out, t_end=parsed.t_end) for target in targets]

    lines: List[str] = []
    for result in results:
        lines.extend(_report_lines(result))

    print("\n" + "=" * 50)
    for line in lines:
        print(line)
    print("=" * 50 + "\n")

    if parsed.report:
        parsed.report.parent.mkdir(parents=True, exist_ok=True)
        parsed.report.write_text("\n".join(lines) + "\n", encoding="utf-8")

    if any(r.failures for r in results):
        return EXIT_INTEGRATION
    if not all(r.passed for r in results):
        return EXIT_GOLDEN
    return EXIT_OK


def cmd_converge(parsed: argparse.Namespace) -> int:
    if parsed.problem == "burgers":
        steps = parsed.steps or list(BURGERS_CFLS)
        t_end = parsed.t_end if parsed.t_end is not None else BURGERS_CONVERGENCE_T_END
    else:
        steps = parsed.steps or list(OSCILLATOR_DTS)
        t_end = parsed.t_end if parsed.t_end is not None else OSCILLATOR_CONVERGENCE_T_END

    try:
        schemes = [builtin_tableau(s).name for s in (parsed.schemes or available_schemes())]
        if len(steps) < 2 or min(steps) <= 0 or t_end <= 0:
            raise ValueError("Need at least two positive steps and a positive t_end")
    except (UnknownSchemeError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    table = convergence_table(parsed.problem, schemes, parsed.mode, steps, t_end)
    write_convergence_table(Exporter(parsed.out), f"converge_{parsed.problem}_{parsed.mode}", table)

    print(f"\nObserved orders ({parsed.mode}, {parsed.problem}, t_end = {t_end:g}):")
    for scheme, slope in table.slopes.items():
        print(f"  {parsed.mode}-{scheme}: {slope:.4f}")
    print()

    return EXIT_INTEGRATION if table.failures else EXIT_OK


def cmd_stability(parsed: argparse.Namespace) -> int:
    try:
        tableau = builtin_tableau(parsed.scheme)
        k = validate_k(tableau, parsed.k) if parsed.k is not None else default_k(tableau.name)
        if parsed.resolution < 2:
            raise ValueError("Resolution must be at least 2")
    except (UnknownSchemeError, KVectorError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    rows = stability_study(tableau, k, Exporter(parsed.out), f"stability_{tableau.name}", parsed.eps, parsed.resolution)

    print(f"\n{tableau.name} stability limits (k = {k.k.tolist()}):")
    print(f"  {'eps':>8}  {'imaginary':>10}  {'real':>10}")
    for eps, imag, real in rows:
        print(f"  {eps:>8.4f}  {imag:>10.6f}  {real:>10.6f}")
    print()
    return EXIT_OK


def cmd_list_schemes(parsed: argparse.Namespace) -> int:
    for name in available_schemes():
        t = builtin_tableau(name)
        order = "holds" if declared_order_holds(t) else "FAILS"
        print(f"{t.name} (s={t.s}, p={t.p})")
        print(format_tableau(t))
        print(f"  order conditions through p={t.p}: {order}")
        print(f"  default k: {default_k(name).k.tolist()}")
        print()
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "reproduce": cmd_reproduce,
    "converge": cmd_converge,
    "stability": cmd_stability,
    "list-schemes": cmd_list_schemes,
}


def main(args: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI.

    Args:
        args: Command-line arguments (uses sys.argv if None).

    Returns:
        Exit code (0 for success).
    """
    parser = create_parser()
    parsed = parser.parse_args(args)

    verbose = getattr(parsed, "verbose", False)
    setup_logging(verbose=verbose)

    if parsed.command is None:
        parser.print_help()
        return EXIT_CONFIG

    if parsed.command == "run" and parsed.experiment is None and parsed.config is None:
        logger.error("Configuration error: give an experiment or --config")
        return EXIT_CONFIG

    try:
        return COMMANDS[parsed.command](parsed)
    except ConfigFileError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"Error during {parsed.command}: {e}")
        if verbose:
            import traceback
            traceback.print_exc()
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())

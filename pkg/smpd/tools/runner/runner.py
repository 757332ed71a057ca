""" The smpd command line tool. """
import argparse
import logging
import sys

from pathlib import Path
from typing import Optional, Sequence

from smpd.common import InvalidConfiguration, init_logging, log_exception
from smpd.common.config import build_config, load_parameters, parse_override
from smpd.common.types.scenario_kind import ScenarioKind
from smpd.common.types.verdict import Verdict
from smpd.common.units import from_internal
from smpd.core.merit import dark_budget

from .report import load_targets, overall_verdict
from .scenarios import Scenario, run_scenario


# Exit codes.
EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='smpd',
        description='Digital twin of a single microwave photon detector')
    commands = parser.add_subparsers(dest='command', required=True)

    run = commands.add_parser('run', help='Run a scenario and compare it against its targets')
    run.add_argument('scenario', type=str,
                     help='Scenario name, see list-scenarios')
    run.add_argument('-c', '--config', type=str, default=None,
                     help='Path to the YAML parameter file')
    run.add_argument('-s', '--seed', type=int, default=0,
                     help='Seed of all random draws')
    run.add_argument('-o', '--out', type=str, default=None,
                     help='Output directory, default ./<scenario>')
    run.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                     help='Override a parameter, may be repeated')

    commands.add_parser('list-scenarios', help='List the scenarios and their targets')

    validate = commands.add_parser('validate', help='Validate a parameter file')
    validate.add_argument('-c', '--config', type=str, required=True,
                          help='Path to the YAML parameter file')

    return parser


def _run(args: argparse.Namespace) -> int:
    kind = ScenarioKind.from_str(args.scenario)
    if kind is None:
        raise InvalidConfiguration(
            f'Unknown scenario {args.scenario}, expected one of {", ".join(str(k) for k in ScenarioKind)}!')

    overrides = dict(parse_override(o) for o in args.overrides)
    scenario = Scenario(
        kind=kind,
        overrides=overrides,
        output_dir=Path(args.out) if args.out else Path(str(kind)),
        seed=args.seed,
        config_path=Path(args.config) if args.config else None
    )

    report = run_scenario(scenario)
    print(report.summary)

    verdict = overall_verdict(report.checks)
    logging.info('Scenario %s: %s, files in %s', kind, verdict, scenario.output_dir)
    return EXIT_PASS if verdict == Verdict.PASS else EXIT_FAIL


def _list_scenarios() -> int:
    targets = load_targets()
    for kind in ScenarioKind:
        scenario = targets.get(str(kind), None)
        names = ', '.join(t.name for t in scenario.targets) if scenario else ''
        print(f'{str(kind):<22s} {names}')
    return EXIT_PASS


def _validate(args: argparse.Namespace) -> int:
    params = load_parameters(args.config)
    config = build_config(params)
    budget = dark_budget(config.device, config.tuning, config.timing, config.noise, config.with_internal_losses)
    print(f'{args.config}: valid')
    print(f'  eta_smpd    {budget.eta_smpd:.4f}')
    print(f'  alpha_total {budget.alpha_total:.4g} 1/s')
    print(f'  kappa_d     {from_internal(budget.kappa_d, "khz"):.4g} kHz')
    print(f'  sensitivity {budget.sensitivity:.4g} W/sqrt(Hz)')
    return EXIT_PASS


@log_exception(call_exit=True, code=EXIT_ERROR)
def main(argv: Optional[Sequence[str]] = None) -> None:
    """ Main entrypoint of the smpd runner. """
    init_logging()

    logging.info('\n===================\n'
                 'SMPD digital twin\n'
                 '===================\n')

    args = _parser().parse_args(argv)

    if args.command == 'run':
        code = _run(args)
    elif args.command == 'list-scenarios':
        code = _list_scenarios()
    else:
        code = _validate(args)

    sys.exit(code)


if __name__ == "__main__":
    main()

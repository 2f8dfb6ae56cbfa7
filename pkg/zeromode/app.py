"""
Main app class used to run the command-line application as a whole.
"""

from __future__ import annotations
from typing import Sequence
import argparse
import logging
import sys
import time
import warnings

from zeromode import __version__
from zeromode.scenarios import run_scenario
from zeromode.utils.config import PRESETS
from zeromode.utils.config import SCHEMAS
from zeromode.utils.config import Scenario
from zeromode.utils.config import build_config
from zeromode.utils.data_controller import RunController
from zeromode.utils.misc import DeepQuenchWarning
from zeromode.utils.misc import IncorrectFileFormatError
from zeromode.utils.misc import InputError
from zeromode.utils.misc import NumericalError
from zeromode.utils.misc import PrecisionWarning
from zeromode.utils.misc import TruncationWarning
from zeromode.utils.misc import format_date
from zeromode.utils.misc import format_duration
from zeromode.utils.sweeper import Sweeper

logger = logging.getLogger('zeromode')

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class ZeroMode:
    """Main app class meant to represent the command line and is instantiated once per invocation."""

    def __init__(self, argv: Sequence[str] | None = None):
        self.argv = list(sys.argv[1:] if argv is None else argv)
        self.args: argparse.Namespace | None = None

    def _parse_args(self) -> None:
        """Parse command-line arguments (subcommand, run options and scenario parameters)."""
        parser = argparse.ArgumentParser(
            prog='python -m zeromode',
            description='Post-quench entanglement dynamics of compact and non-compact bosonic models',
            allow_abbrev=False,
            )
        parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
        parser.add_argument('-v', '--verbose', action='store_true', help='Log solver details')
        parser.add_argument('-q', '--quiet', action='store_true', help='Only log warnings and errors')
        commands = parser.add_subparsers(dest='command', required=True)

        run = commands.add_parser('run', help='Run a scenario and write CSV / JSON artifacts',
                                  allow_abbrev=False)
        run.add_argument('scenario', nargs='?', choices=[s.value for s in Scenario],
                         help='Scenario to run (may come from --preset or --config)')
        run.add_argument('--preset', help='Named parameter preset (see the presets command)')
        run.add_argument('--config', help='INI config file with [run] and [parameters] sections')
        run.add_argument('--t', dest='time_grid', help='Time grid a:b:n or log:a:b:n')
        run.add_argument('--output', help='Output directory (default: out)')
        run.add_argument('--seed', type=int, help='Random seed (default: 0)')
        run.add_argument('--threads', type=int, help='Worker threads (default: number of cores)')
        parameters = run.add_argument_group('scenario parameters')
        seen = set()
        for scenario, entries in SCHEMAS.items():
            for entry in entries:
                if entry.name in seen:
                    continue
                seen.add(entry.name)
                parameters.add_argument(entry.flag, dest=f'param_{entry.name}', metavar='VALUE',
                                        help=f'{entry.help} [{entry.kind}]')

        commands.add_parser('presets', help='List the named presets')

        catalog = commands.add_parser('catalog', help='List the runs recorded in an output directory')
        catalog.add_argument('--output', default='out', help='Output directory (default: out)')

        self.args = parser.parse_args(self.argv)

    def _setup_logging(self) -> None:
        level = logging.DEBUG if self.args.verbose else logging.WARNING if self.args.quiet else logging.INFO
        logging.basicConfig(level=level, stream=sys.stderr,
                            format='%(asctime)s %(levelname)s %(name)s: %(message)s')
        # These conditions are logged where they arise
        for category in (TruncationWarning, DeepQuenchWarning, PrecisionWarning):
            warnings.simplefilter('ignore', category)

    def main(self) -> int:
        """Run the requested command and return the process exit code."""
        try:
            self._parse_args()
        except SystemExit as err:
            # argparse exits 0 for --help / --version and 2 for usage errors
            return EXIT_OK if not err.code else EXIT_INPUT
        self._setup_logging()

        try:
            if self.args.command == 'presets':
                return self.presets()
            if self.args.command == 'catalog':
                return self.catalog()
            return self.run()
        except (InputError, IncorrectFileFormatError) as err:
            print(f'error: {err}', file=sys.stderr)
            return EXIT_INPUT
        except NumericalError as err:
            print(f'numerical failure: {err}', file=sys.stderr)
            return EXIT_NUMERICAL

    def run(self) -> int:
        """Resolve the configuration, run the scenario and write artifacts and catalog entry."""
        overrides = {name[len('param_'):]: value for name, value in vars(self.args).items()
                     if name.startswith('param_') and value is not None}
        config = build_config(scenario=self.args.scenario, preset=self.args.preset, config_path=self.args.config,
                              overrides=overrides, t=self.args.time_grid, output=self.args.output,
                              seed=self.args.seed, threads=self.args.threads)

        with RunController(config.output) as controller, Sweeper(config.threads) as sweeper:
            record = controller.start_run(config, __version__)
            run_id = record.id_
            start = time.perf_counter()
            try:
                result = run_scenario(config, sweeper)
            except InputError as err:
                controller.finish_run(record, 'input-error', time.perf_counter() - start, message=str(err))
                raise
            except NumericalError as err:
                controller.finish_run(record, 'numerical-error', time.perf_counter() - start, message=str(err))
                raise
            except Exception as err:
                controller.finish_run(record, 'failed', time.perf_counter() - start,
                                      message=f'{type(err).__name__}: {err}')
                raise
            wall_time = time.perf_counter() - start

            name = config.scenario.value
            artifacts = {
                'table': controller.write_table(name, result.columns, result.rows),
                'schema': controller.write_schema(name, result.columns),
            }
            summary = {
                'run_id': run_id,
                'version': __version__,
                'config': config.to_dict(),
                'parameter_sources': config.sources,
                'wall_time': wall_time,
                'scalars': result.scalars,
                'details': result.details,
                'artifacts': artifacts,
            }
            artifacts['summary'] = controller.write_summary(name, summary)
            controller.finish_run(record, 'ok', wall_time, scalars=result.scalars)

        logger.info('Run %d (%s) finished in %s', run_id, name, format_duration(wall_time))
        return EXIT_OK

    def presets(self) -> int:
        """Print the named presets."""
        width = max(len(preset.name) for preset in PRESETS.values())
        for preset in PRESETS.values():
            values = ', '.join(f'{key}={value}' for key, value in preset.parameters.items())
            print(f'{preset.name:<{width}} {preset.scenario.value:<15} {values}')
            notes = [text for text in (preset.description, preset.alias and f'alias {preset.alias}') if text]
            if notes:
                print(f'{"":<{width}} {"":<15} {"; ".join(notes)}')
        return EXIT_OK

    def catalog(self) -> int:
        """Print the runs recorded in the output directory."""
        with RunController(self.args.output) as controller:
            for run in controller.runs():
                duration = format_duration(run.wall_time) if run.wall_time is not None else '-'
                print(f'{run.id_:>4}  {format_date(run.started)}  {run.scenario:<15} {run.status:<16} {duration}')
                if run.message:
                    print(f'      {run.message}')
        return EXIT_OK

"""
Run configuration: scenario schemas, time grids, named presets and the config-file reader.

Values are merged in the order schema default < preset < config file < command-line flag.
Config files are plain INI files with a [run] section (scenario, t, seed, threads, output)
and a [parameters] section holding schema keys.
"""

from __future__ import annotations
from dataclasses import dataclass
from dataclasses import field
from enum import Enum
from typing import Any
import configparser
import math
import os
import re

import numpy as np
import scipy.constants

from zeromode.utils.misc import ConfigError


class Scenario(str, Enum):
    CHO2 = 'cho2'
    ROTOR2 = 'rotor2'
    ENSEMBLES = 'ensembles'
    CHAIN_HARMONIC = 'chain-harmonic'
    CHAIN_ROTOR = 'chain-rotor'
    FIELDTHEORY = 'fieldtheory'


@dataclass(frozen=True)
class TimeGrid:
    """Sampling times: count points from start to stop, linear or log spaced."""

    start: float
    stop: float
    count: int
    spacing: str = 'linear'

    def __post_init__(self):
        if self.spacing not in ('linear', 'log'):
            raise ConfigError(f'Unknown time spacing {self.spacing!r}')
        if self.count < 1:
            raise ConfigError(f'Time grid needs at least one point, got {self.count}')
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or self.stop < self.start:
            raise ConfigError(f'Time grid needs finite start <= stop, got {self.start}:{self.stop}')
        if self.start < 0:
            raise ConfigError('Times must be non-negative')
        if self.spacing == 'log' and self.start <= 0:
            raise ConfigError('Log-spaced time grids need a positive start')

    @classmethod
    def parse(cls, text: str, path: str | None = None, line: int | None = None) -> TimeGrid:
        """Parse 'a:b:n' (linear) or 'log:a:b:n'."""
        parts = [part.strip() for part in str(text).split(':')]
        spacing = 'linear'
        if parts and parts[0] == 'log':
            spacing = 'log'
            parts = parts[1:]
        if len(parts) != 3:
            raise ConfigError(f'Time grid must be a:b:n or log:a:b:n, got {text!r}', path, line)
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f'Time grid must be a:b:n or log:a:b:n, got {text!r}', path, line) from None
        try:
            return cls(start, stop, count, spacing)
        except ConfigError as err:
            raise ConfigError(err.message, path, line) from None

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        if self.spacing == 'log':
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def __str__(self) -> str:
        prefix = 'log:' if self.spacing == 'log' else ''
        return f'{prefix}{self.start:g}:{self.stop:g}:{self.count}'


@dataclass(frozen=True)
class Parameter:
    """
    Schema entry of a scenario parameter. Kinds: float, int, floats and ints (comma-separated
    lists), cutoff (positive int or 'auto') and optional-float (float or 'none').
    """

    name: str
    kind: str
    default: Any
    minimum: float | None = None
    help: str = ''

    @property
    def flag(self) -> str:
        return '--' + self.name.replace('_', '-')

    def parse(self, raw: Any, path: str | None = None, line: int | None = None) -> Any:
        """Convert a raw (string or typed) value and check the lower bound."""
        try:
            value = self._convert(raw)
        except (TypeError, ValueError, OverflowError):
            raise ConfigError(f'Invalid value {raw!r} for {self.name} ({self.kind})', path, line) from None
        for item in value if isinstance(value, list) else [value]:
            if item is None or item == 'auto':
                continue
            if not math.isfinite(item):
                raise ConfigError(f'{self.name} must be finite, got {item}', path, line)
            if self.minimum is not None and item < self.minimum:
                raise ConfigError(f'{self.name} must be >= {self.minimum:g}, got {item}', path, line)
        return value

    def _convert(self, raw: Any) -> Any:
        text = raw.strip() if isinstance(raw, str) else raw
        if self.kind == 'float':
            return float(text)
        if self.kind == 'int':
            return _to_int(text)
        if self.kind in ('floats', 'ints'):
            items = text.split(',') if isinstance(text, str) else list(np.atleast_1d(text))
            convert = float if self.kind == 'floats' else _to_int
            values = [convert(item.strip() if isinstance(item, str) else item) for item in items]
            if not values:
                raise ValueError('empty list')
            return values
        if self.kind == 'cutoff':
            if isinstance(text, str) and text.lower() == 'auto':
                return 'auto'
            value = _to_int(text)
            if value < 1:
                raise ValueError('cutoff must be positive')
            return value
        if self.kind == 'optional-float':
            if text is None or (isinstance(text, str) and text.lower() in ('', 'none')):
                return None
            return float(text)
        raise ValueError(f'unknown parameter kind {self.kind}')


def _to_int(value: Any) -> int:
    number = float(value)
    if number != int(number):
        raise ValueError(f'{value!r} is not an integer')
    return int(number)


SCHEMAS: dict[Scenario, list[Parameter]] = {
    Scenario.CHO2: [
        Parameter('omega_sq', 'float', 10.0, 0.0, 'pre-quench on-site frequency squared'),
        Parameter('kappa', 'float', 100.0, 0.0, 'coupling strength'),
        Parameter('omega_f', 'float', 0.0, 0.0, 'post-quench on-site frequency'),
    ],
    Scenario.ROTOR2: [
        Parameter('omega_sq', 'float', 10.0, 0.0, 'pre-quench on-site strength'),
        Parameter('kappa', 'float', 100.0, 0.0, 'coupling strength'),
        Parameter('M', 'cutoff', 'auto', 1, 'angular-momentum cutoff or auto'),
        Parameter('boundary_tol', 'float', 1e-10, 0.0, 'truncation tolerance on the boundary weight'),
    ],
    Scenario.ENSEMBLES: [
        Parameter('omega_sq', 'floats', [5.0, 10.0, 100.0], 0.0, 'comma-separated on-site strengths'),
        Parameter('kappa', 'floats', [10.0, 50.0, 100.0], 0.0, 'comma-separated couplings'),
        Parameter('M', 'cutoff', 'auto', 1, 'angular-momentum cutoff or auto'),
        Parameter('deg_tol', 'float', 1e-9, 0.0, 'relative tolerance for degenerate levels'),
    ],
    Scenario.CHAIN_HARMONIC: [
        Parameter('N', 'int', 32, 2, 'number of sites'),
        Parameter('omega_sq', 'float', 1.5, 0.0, 'pre-quench on-site frequency squared'),
        Parameter('kappa', 'float', 0.5, 0.0, 'nearest-neighbour coupling'),
        Parameter('omega_f_sq', 'float', 0.0, 0.0, 'post-quench on-site frequency squared'),
        Parameter('fit_start', 'float', 100.0, 0.0, 'start of the c ln t + d fit window'),
    ],
    Scenario.CHAIN_ROTOR: [
        Parameter('N', 'ints', [4], 2, 'comma-separated chain lengths (at most 4)'),
        Parameter('M', 'int', 4, 1, 'angular-momentum cutoff'),
        Parameter('omega_sq', 'float', 1.5, 0.0, 'pre-quench on-site strength'),
        Parameter('kappa', 'float', 0.5, 0.0, 'nearest-neighbour coupling'),
        Parameter('tol', 'float', 1e-10, 0.0, 'Krylov propagation tolerance'),
    ],
    Scenario.FIELDTHEORY: [
        Parameter('L', 'float', 49e-6, 0.0, 'condensate length (m)'),
        Parameter('n1d', 'float', 70e6, 0.0, 'linear density (1/m)'),
        Parameter('g1d', 'float', 8.594e-39, 0.0, 'interaction strength (kg m^3 / s^2)'),
        Parameter('m_atom', 'float', 1.433e-25, 0.0, 'atom mass (kg)'),
        Parameter('J', 'float', 2 * math.pi * 0.76, 0.0, 'angular tunnel rate (1/s)'),
        Parameter('T', 'float', 49e-9, 0.0, 'temperature (K)'),
        Parameter('R0', 'optional-float', None, 0.0, 'compactification radius (default sqrt(L))'),
        Parameter('deep_quench_threshold', 'float', 0.1, 0.0, 'largest accepted sigma^2(0) / (pi^2 R0^2 / 3)'),
        Parameter('samples', 'int', 100000, 1, 'wrapped-phase Monte-Carlo samples per time'),
        Parameter('lattice_N', 'int', 64, 2, 'sites of the compactness-preserving lattice map'),
        Parameter('hbar', 'float', scipy.constants.hbar, 0.0, 'reduced Planck constant'),
        Parameter('k_B', 'float', scipy.constants.k, 0.0, 'Boltzmann constant'),
    ],
}

DEFAULT_GRIDS: dict[Scenario, str] = {
    Scenario.CHO2: 'log:1e-1:1e4:200',
    Scenario.ROTOR2: '0:30:601',
    Scenario.ENSEMBLES: '0:30:301',
    Scenario.CHAIN_HARMONIC: 'log:1:1e3:200',
    Scenario.CHAIN_ROTOR: '0:40:801',
    Scenario.FIELDTHEORY: '0:0.03:121',
}


@dataclass(frozen=True)
class Preset:
    name: str
    scenario: Scenario
    parameters: dict
    description: str = ''
    alias: str | None = None


PRESETS: dict[str, Preset] = {preset.name: preset for preset in [
    Preset('fig2', Scenario.ROTOR2, {'omega_sq': 5.0, 'kappa': 10.0},
           'momentum marginals in the near-harmonic regime', alias='rotor2-near-harmonic'),
    Preset('fig3', Scenario.ROTOR2, {'omega_sq': 10.0, 'kappa': 100.0},
           'compact vs non-compact entropy, quasi-revival at 4 pi', alias='rotor2-strong-coupling'),
    Preset('fig4a', Scenario.ROTOR2, {'omega_sq': 100.0, 'kappa': 10.0},
           'strong on-site pinning', alias='rotor2-strong-pinning'),
    Preset('fig4b', Scenario.ROTOR2, {'omega_sq': 1.5, 'kappa': 0.5},
           'weak coupling, strongly compact', alias='rotor2-weak-coupling'),
    Preset('fig4c', Scenario.ROTOR2, {'omega_sq': 0.1, 'kappa': 100.0},
           'nearly massless initial state', alias='rotor2-nearly-massless'),
    Preset('fig5', Scenario.CHAIN_ROTOR, {'omega_sq': 1.5, 'kappa': 0.5, 'N': [2, 3, 4]},
           'rotor-chain saturation', alias='chain-rotor-saturation'),
    Preset('paper-2024', Scenario.FIELDTHEORY,
           {'L': 49e-6, 'n1d': 70e6, 'g1d': 8.594e-39, 'm_atom': 1.433e-25,
            'J': 2 * math.pi * 0.76, 'T': 49e-9},
           'split-condensate parameters, compactness timescale', alias='split-condensate'),
]}

PRESET_ALIASES: dict[str, str] = {preset.alias: preset.name for preset in PRESETS.values() if preset.alias}


@dataclass
class RunConfig:
    """Fully resolved and validated configuration of one run."""

    scenario: Scenario
    parameters: dict
    time_grid: TimeGrid
    output: str = 'out'
    seed: int = 0
    threads: int | None = None
    preset: str | None = None
    config_path: str | None = None
    sources: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """JSON-safe echo of the configuration."""
        return {
            'scenario': self.scenario.value,
            'parameters': {key: _jsonable(value) for key, value in self.parameters.items()},
            'time_grid': {'start': self.time_grid.start, 'stop': self.time_grid.stop,
                          'count': self.time_grid.count, 'spacing': self.time_grid.spacing},
            'output': self.output,
            'seed': self.seed,
            'threads': self.threads,
            'preset': self.preset,
            'config_path': self.config_path,
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, list):
        return [_jsonable(item) for item in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value

def schema(scenario: Scenario) -> dict[str, Parameter]:
    return {parameter.name: parameter for parameter in SCHEMAS[scenario]}

def parse_scenario(name: str, path: str | None = None, line: int | None = None) -> Scenario:
    try:
        return Scenario(name.strip())
    except ValueError:
        choices = ', '.join(s.value for s in Scenario)
        raise ConfigError(f'Unknown scenario {name!r} (choose from {choices})', path, line) from None

def get_preset(name: str) -> Preset:
    """Look up a preset by name or by its descriptive alias."""
    try:
        return PRESETS[PRESET_ALIASES.get(name, name)]
    except KeyError:
        raise ConfigError(f'Unknown preset {name!r} (choose from {", ".join(PRESETS)})') from None

def _key_lines(path: str) -> dict[tuple[str, str], int]:
    """Line number of every key, by (section, key)."""
    lines = {}
    section = None
    with open(path, encoding='utf-8') as file:
        for number, text in enumerate(file, start=1):
            stripped = text.strip()
            header = re.match(r'^\[([^\]]+)\]', stripped)
            if header:
                section = header.group(1).strip()
                lines.setdefault((section, ''), number)
            elif section and stripped and not stripped.startswith(('#', ';')):
                key = re.split(r'[=:]', stripped, maxsplit=1)[0].strip()
                lines.setdefault((section, key), number)
    return lines

RUN_KEYS = ('scenario', 't', 'seed', 'threads', 'output', 'preset')

def read_config_file(path: str) -> tuple[dict, dict, dict]:
    """
    Read a config file. Returns the [run] entries, the [parameters] entries (raw strings) and
    the line number of every key for error reporting.
    """
    if not os.path.exists(path):
        raise ConfigError('Config file not found', path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as err:
        line = getattr(err, 'lineno', None)
        raise ConfigError(f'Malformed config file: {err.message.splitlines()[0]}', path, line) from None

    key_lines = _key_lines(path)
    for section in parser.sections():
        if section not in ('run', 'parameters'):
            raise ConfigError(f'Unknown section [{section}]', path, key_lines.get((section, '')))

    run = dict(parser['run']) if parser.has_section('run') else {}
    for key in run:
        if key not in RUN_KEYS:
            raise ConfigError(f'Unknown key {key!r} in [run]', path, key_lines.get(('run', key)))
    parameters = dict(parser['parameters']) if parser.has_section('parameters') else {}
    return run, parameters, key_lines

def build_config(scenario: str | None = None, preset: str | None = None, config_path: str | None = None,
                 overrides: dict | None = None, t: str | None = None, output: str | None = None,
                 seed: int | None = None, threads: int | None = None) -> RunConfig:
    """Merge defaults, preset, config file and flag overrides into a validated RunConfig."""
    run, file_parameters, key_lines = {}, {}, {}
    if config_path:
        run, file_parameters, key_lines = read_config_file(config_path)

    def where(section: str, key: str) -> int | None:
        return key_lines.get((section, key))

    preset = preset or run.get('preset')
    chosen = get_preset(preset) if preset else None

    names = []
    if scenario:
        names.append((parse_scenario(scenario), 'command line'))
    if 'scenario' in run:
        names.append((parse_scenario(run['scenario'], config_path, where('run', 'scenario')), 'config file'))
    if chosen:
        names.append((chosen.scenario, f'preset {chosen.name}'))
    if not names:
        raise ConfigError('No scenario given (pass one, a preset or a config file with [run] scenario)')
    resolved = names[0][0]
    for other, origin in names[1:]:
        if other != resolved:
            raise ConfigError(f'Scenario {resolved.value} conflicts with {other.value} from {origin}',
                              config_path if origin == 'config file' else None,
                              where('run', 'scenario') if origin == 'config file' else None)

    entries = schema(resolved)
    parameters = {name: entry.default for name, entry in entries.items()}
    sources = {name: 'default' for name in entries}
    if chosen:
        for name, value in chosen.parameters.items():
            parameters[name] = entries[name].parse(value)
            sources[name] = f'preset {chosen.name}'
    for name, raw in file_parameters.items():
        if name not in entries:
            raise ConfigError(f'Unknown parameter {name!r} for scenario {resolved.value}',
                              config_path, where('parameters', name))
        parameters[name] = entries[name].parse(raw, config_path, where('parameters', name))
        sources[name] = 'config file'
    for name, raw in (overrides or {}).items():
        if raw is None:
            continue
        if name not in entries:
            raise ConfigError(f'Parameter {name!r} does not apply to scenario {resolved.value}')
        parameters[name] = entries[name].parse(raw)
        sources[name] = 'command line'

    if t is not None:
        time_grid = TimeGrid.parse(t)
    elif 't' in run:
        time_grid = TimeGrid.parse(run['t'], config_path, where('run', 't'))
    else:
        time_grid = TimeGrid.parse(DEFAULT_GRIDS[resolved])

    if seed is None:
        seed = _run_int(run, 'seed', config_path, where('run', 'seed'), default=0)
    if threads is None:
        threads = _run_int(run, 'threads', config_path, where('run', 'threads'), default=None)
    if seed < 0:
        raise ConfigError(f'Seed must be non-negative, got {seed}')
    if threads is not None and threads < 1:
        raise ConfigError(f'Thread count must be positive, got {threads}')

    return RunConfig(scenario=resolved, parameters=parameters, time_grid=time_grid,
                     output=output or run.get('output', 'out'), seed=seed, threads=threads,
                     preset=chosen.name if chosen else None, config_path=config_path, sources=sources)

def _run_int(run: dict, key: str, path: str | None, line: int | None, default: int | None) -> int | None:
    if key not in run:
        return default
    try:
        return _to_int(run[key])
    except (ValueError, OverflowError):
        raise ConfigError(f'{key} must be an integer, got {run[key]!r}', path, line) from None

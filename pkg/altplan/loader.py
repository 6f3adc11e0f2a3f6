#
# altplan - Simulation-based accelerated life test planning.
#
"""
Functions to load lifetime data, test plans and configuration files.

Lifetime data are CSV files with a header and the columns::

    stress,time,status

where `status` is 1 for a failure and 0 for a right-censored unit. Lines
starting with `#` (e.g. the comment line written by :mod:`altplan.report`)
and blank lines are ignored.

Plan files (variants for `altplan compare`) are CSV files with one plan
per row and the columns `stresses` and `allocations` (space-separated
numbers), plus the optional columns `duration` and `design_stress`.

Configuration files are INI files (see :func:`read_config`). Vectors are
written as comma-separated numbers.

All the format errors raise :class:`DataFormatError`, carrying the 1-based
line number of the offending line when available.
"""

import configparser
import io
import numpy as np
import pandas as pd

from .fit.weibull_aft import AftParams, CensoredDataset
from .lifestress import make_model
from .planner import calibrated_scenario
from .simulator import Scenario, TestPlan

import logging
log = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """Malformed data or configuration file.

    Attributes:
        lineno (int or None): 1-based line number of the error.
    """
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        prefix = ''
        if path is not None:
            prefix += '%s:' % path
        if lineno is not None:
            prefix += '%d:' % lineno
        super().__init__((prefix + ' ' if prefix else '') + message)


##
# CSV files
#
# Placeholder of the rows with too many fields
_BAD_ROW = '\x00'

_CSV_OPTIONS = dict(header=None, comment='#', dtype=str, skip_blank_lines=True,
                    keep_default_na=False, skipinitialspace=True)


def _read_csv_rows(path):
    """Read a CSV file as a DataFrame of strings (header row included).

    Returns:
        3-tuple: the raw DataFrame (row 0 is the header), the 1-based line
        number of each row and the field count of each row with too many
        fields (in file order). Those rows are filled with `_BAD_ROW`.
    """
    with open(path, encoding='utf-8') as f:
        lines = f.readlines()
    # One record per line: comment-only and blank lines are dropped here so
    # that row i of the frame comes from line linenos[i]
    linenos = [i for i, line in enumerate(lines, start=1)
               if line.split('#', 1)[0].strip()]
    if not linenos:
        raise DataFormatError('empty file (no header).', lineno=1, path=path)
    text = ''.join(lines[i - 1] for i in linenos)

    width = pd.read_csv(io.StringIO(text), nrows=1, **_CSV_OPTIONS).shape[1]
    bad_counts = []

    def bad_line(fields):
        bad_counts.append(len(fields))
        return [_BAD_ROW] * width

    raw = pd.read_csv(io.StringIO(text), engine='python',
                      on_bad_lines=bad_line, **_CSV_OPTIONS)
    raw = raw.apply(lambda column: column.str.strip())
    return raw, linenos, bad_counts


def _rows_frame(path, required, optional=()):
    """Read a CSV file in a DataFrame of strings with a `lineno` column."""
    raw, linenos, bad_counts = _read_csv_rows(path)
    header = [str(v).lower() for v in raw.iloc[0]]
    header_line = linenos[0]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataFormatError('missing column(s) %s in header.'
                              % ', '.join(missing), header_line, path)
    extra = [c for c in header if c not in required + tuple(optional)]
    if extra:
        raise DataFormatError('unexpected column(s) %s in header.'
                              % ', '.join(extra), header_line, path)
    df = raw.iloc[1:].reset_index(drop=True)
    df.columns = header
    if df.empty:
        raise DataFormatError('no data rows.', header_line, path)
    df['lineno'] = linenos[1:len(df) + 1]
    for i, row in df.iterrows():
        values = row[header]
        if (values == _BAD_ROW).all():
            raise DataFormatError('expected %d fields, got %d.'
                                  % (len(header), bad_counts.pop(0)),
                                  int(row.lineno), path)
        if values.isna().any():
            raise DataFormatError('expected %d fields, got %d.'
                                  % (len(header), values.notna().sum()),
                                  int(row.lineno), path)
    return df


def _numeric_column(df, column, path):
    values = pd.to_numeric(df[column], errors='coerce')
    bad = values.isna()
    if bad.any():
        i = bad.values.argmax()
        raise DataFormatError("non-numeric %s '%s'." % (column,
                                                       df[column].iloc[i]),
                              int(df.lineno.iloc[i]), path)
    return values.values.astype(float)


def load_dataset(path):
    """Load a `stress,time,status` CSV file.

    Returns:
        A :class:`CensoredDataset`.

    Raises:
        DataFormatError: with the line number of the first invalid line.
    """
    df = _rows_frame(path, ('stress', 'time', 'status'))
    stress = _numeric_column(df, 'stress', path)
    time = _numeric_column(df, 'time', path)
    status = _numeric_column(df, 'status', path)
    for values, test, msg in [(time, time > 0, 'time must be > 0'),
                              (status, np.isin(status, (0, 1)),
                               'status must be 0 or 1')]:
        if not test.all():
            i = (~test).argmax()
            raise DataFormatError('%s (got %r).' % (msg, values[i]),
                                  int(df.lineno.iloc[i]), path)
    data = CensoredDataset(stress, time, status == 1)
    log.debug('Loaded %r from %s', data, path)
    return data


def _parse_numbers(text, sep=None):
    """Parse whitespace (default) or `sep` separated numbers."""
    if sep is not None:
        text = text.replace(sep, ' ')
    return [float(p) for p in text.split()]


def plans_from_csv(path, duration=np.inf, design_stress=0.):
    """Load one :class:`TestPlan` per row of a plan CSV file.

    Arguments:
        path (string): the CSV file, columns `stresses`, `allocations`
            (space-separated numbers) and optional `duration`,
            `design_stress`.
        duration, design_stress (floats): defaults for rows without
            those columns.
    """
    df = _rows_frame(path, ('stresses', 'allocations'),
                     optional=('duration', 'design_stress'))
    plans = []
    for _, row in df.iterrows():
        try:
            plans.append(TestPlan(
                _parse_numbers(row['stresses']),
                _parse_numbers(row['allocations']),
                duration=float(row.get('duration', duration)),
                design_stress=float(row.get('design_stress',
                                            design_stress))))
        except ValueError as e:
            raise DataFormatError(str(e), int(row['lineno']), path) from None
    return plans


##
# Configuration files
#
def read_config(path):
    """Read an INI configuration file.

    Returns:
        A `configparser.ConfigParser`.
    """
    config = configparser.ConfigParser()
    try:
        with open(path, encoding='utf-8') as f:
            config.read_file(f)
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise DataFormatError('invalid syntax.', lineno, path) from None
    except configparser.Error as e:
        raise DataFormatError(e.message, getattr(e, 'lineno', None),
                              path) from None
    log.debug('Read config %s: sections %s', path, config.sections())
    return config


def get_value(config, section, key, default=None, kind=float):
    """Return a config value converted with `kind` (or `default`).

    `kind` can be float, int, bool, str or 'vector' (comma-separated
    numbers, returned as a list of floats).
    """
    if not config.has_option(section, key):
        return default
    text = config.get(section, key)
    try:
        if kind == 'vector':
            return _parse_numbers(text, sep=',')
        if kind is bool:
            return config.getboolean(section, key)
        if kind is int:
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        return kind(text)
    except ValueError:
        raise DataFormatError("invalid value '%s' for key '%s' in section "
                              "[%s]." % (text, key, section)) from None


def _require(config, section, key, kind=float):
    value = get_value(config, section, key, kind=kind)
    if value is None:
        raise DataFormatError("missing key '%s' in section [%s]."
                              % (key, section))
    return value


def scenario_from_config(config, n_sim=1000):
    """Build the :class:`Scenario` of section `[scenario]`.

    Keys: `basis`, `beta`, `sigma`, `design_stress` and either `duration`
    (a number or `inf`) or `reference_stress` and `target_censoring`
    (duration calibrated with :func:`altplan.planner.calibrate_duration`).
    Optional `stress_min` and `stress_max` give the test stress bounds.

    Returns:
        2-tuple: the scenario and the stress bounds (None when not given).
    """
    if not config.has_section('scenario'):
        raise DataFormatError('missing section [scenario].')
    model = make_model(_require(config, 'scenario', 'basis', kind=str))
    params = AftParams(_require(config, 'scenario', 'beta', kind='vector'),
                       _require(config, 'scenario', 'sigma'))
    scenario = Scenario(model, params,
                        _require(config, 'scenario', 'design_stress'),
                        duration=get_value(config, 'scenario', 'duration',
                                           np.inf),
                        n_sim=n_sim)
    reference = get_value(config, 'scenario', 'reference_stress')
    target = get_value(config, 'scenario', 'target_censoring')
    if (reference is None) != (target is None):
        raise DataFormatError('reference_stress and target_censoring must be '
                              'given together.')
    if reference is not None:
        if config.has_option('scenario', 'duration'):
            raise DataFormatError('give either duration or reference_stress/'
                                  'target_censoring, not both.')
        scenario = calibrated_scenario(scenario, reference, target)
    bounds = None
    lower = get_value(config, 'scenario', 'stress_min')
    upper = get_value(config, 'scenario', 'stress_max')
    if lower is not None and upper is not None:
        bounds = (lower, upper)
    return scenario, bounds


def plan_from_config(config, scenario=None):
    """Build the :class:`TestPlan` of section `[plan]`.

    Keys: `stresses`, `allocations` and optional `duration`,
    `design_stress` (default from `scenario`, if given).
    """
    if not config.has_section('plan'):
        raise DataFormatError('missing section [plan].')
    duration = np.inf if scenario is None else scenario.duration
    design = 0. if scenario is None else scenario.design_stress
    return TestPlan(_require(config, 'plan', 'stresses', kind='vector'),
                    _require(config, 'plan', 'allocations', kind='vector'),
                    duration=get_value(config, 'plan', 'duration', duration),
                    design_stress=get_value(config, 'plan', 'design_stress',
                                            design))

#
# altplan - Simulation-based accelerated life test planning.
#
"""
The `altplan` command.

Sub-commands:

===========  ===============================================================
Command      Action
===========  ===============================================================
fit          fit candidate models to a `stress,time,status` CSV, select
             by AIC and write the selected model as a `[scenario]` stub
optimize     search optimal plans (fixed N and/or variable N)
compare      compare a plan with variants under common random numbers
simulate     simulate the dataset of a plan (or of a balanced preliminary
             test) and summarize the censoring
===========  ===============================================================

Parameters come from INI files (`--config` and the positional scenario/plan
files) and from flags, with precedence flag > file > built-in default.
Every run writes the effective parameters to `resolved-config.ini` in the
output directory: re-running with `--config resolved-config.ini` gives the
same CSV files.

Exit codes: 0 success, 2 input or configuration error, 3 statistical
failure (no convergent fit).
"""

import argparse
import configparser
import os
import sys
from concurrent.futures import ProcessPoolExecutor
import numpy as np
import pandas as pd

from . import __version__, init_logging
from .deopt import DeConfig
from .fit.weibull_aft import AftParams, FitError, median
from .lifestress import make_model
from .loader import (DataFormatError, get_value, load_dataset, plan_from_config,
                     plans_from_csv, read_config, scenario_from_config)
from .planner import (StudyConfig, StudyError, balanced_plan,
                      compare_neighborhood, fit_preliminary, rounded_variants,
                      run_fixed_n_study, run_variable_n_study)
from .report import (format_allocations, render_table, write_comparison,
                     write_dataset, write_frame, write_plan_reports,
                     write_trace)
from .simulator import expected_censoring, generate_dataset
from .streams import SIMULATE, Stream
from .utils.misc import available_workers, mkdir_p, parse_int_list

import logging
log = logging.getLogger(__name__)


RESOLVED_CONFIG = 'resolved-config.ini'

# Built-in defaults: section -> {key: value}
DEFAULTS = {
    'run': {'seed': '0'},
    'de': {'generations': '50', 'f': '0.8', 'cr': '0.9'},
    'study': {'granularity': '1e-05', 'search_n_sim': '200',
              'report_n_sim': '1000', 'report_replicates': '100',
              'crn': 'false'},
    'fit': {'candidates': 'identity, poly:2, log'},
    'compare': {'step': '5', 'n_steps': '3'},
    'simulate': {'units_per_stress': '20', 'n_preliminary': '9'},
}

# (argparse dest, section, key) of the flags stored in the config
FLAG_KEYS = [
    ('seed', 'run', 'seed'),
    ('generations', 'de', 'generations'),
    ('population', 'de', 'population'),
    ('de_f', 'de', 'f'),
    ('de_cr', 'de', 'cr'),
    ('granularity', 'study', 'granularity'),
    ('units', 'study', 'total_units'),
    ('search_n_sim', 'study', 'search_n_sim'),
    ('report_n_sim', 'study', 'report_n_sim'),
    ('replicates', 'study', 'report_replicates'),
    ('fixed_n', 'study', 'fixed_n'),
    ('variable_n', 'study', 'variable_n'),
    ('crn', 'study', 'crn'),
    ('candidates', 'fit', 'candidates'),
    ('design_stress', 'scenario', 'design_stress'),
    ('step', 'compare', 'step'),
    ('n_steps', 'compare', 'n_steps'),
    ('units_per_stress', 'simulate', 'units_per_stress'),
]


##
# Argument parsing
#
def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='INI configuration file.')
    common.add_argument('--seed', type=int, help='Master seed (default 0).')
    common.add_argument('--threads', type=int,
                        help='Max. parallel workers (default: all CPUs).')
    common.add_argument('--out-dir', default='.',
                        help='Output directory (default: current dir).')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true',
                           help='Print debug messages.')
    verbosity.add_argument('-q', '--quiet', action='store_true',
                           help='Print only warnings and errors.')
    return common


def _add_de_flags(parser):
    parser.add_argument('--generations', type=int,
                        help='DE generations (default 50).')
    parser.add_argument('--population', type=int,
                        help='DE population size (default 10 x genotype '
                             'size).')
    parser.add_argument('--de-f', type=float, help='DE weight F (0.8).')
    parser.add_argument('--de-cr', type=float,
                        help='DE crossover probability CR (0.9).')
    parser.add_argument('--granularity', type=float,
                        help='Min. gap between stresses (1e-5).')
    parser.add_argument('--units', type=int, help='Total number of units.')
    parser.add_argument('--search-n-sim', type=int,
                        help='Replicates per evaluation in the search (200).')
    parser.add_argument('--crn', action='store_const', const='true',
                        help='Common random numbers during the search.')


def _add_report_flags(parser):
    parser.add_argument('--report-n-sim', type=int,
                        help='Replicates per reported RMSE (1000).')
    parser.add_argument('--replicates', type=int,
                        help='Number of reported RMSE replicates (100).')


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog='altplan', description='Optimal accelerated life test plans.')
    parser.add_argument('--version', action='version',
                        version='altplan %s' % __version__)
    subparsers = parser.add_subparsers(dest='command', required=True)

    fit = subparsers.add_parser('fit', parents=[common],
                                help='Fit and select life-stress models.')
    fit.add_argument('data', help='CSV file with stress,time,status.')
    fit.add_argument('--candidates',
                     help="Comma-separated bases (default 'identity, "
                          "poly:2, log').")
    fit.add_argument('--design-stress', type=float,
                     help='Design stress for the predicted median.')

    opt = subparsers.add_parser('optimize', parents=[common],
                                help='Search optimal test plans.')
    opt.add_argument('scenario', nargs='?',
                     help='INI file with a [scenario] section.')
    opt.add_argument('--fixed-n',
                     help="Numbers of stresses, e.g. '2..6' or '2,3'.")
    opt.add_argument('--variable-n', type=int,
                     help='Max. number of stresses of the variable-N search.')
    _add_de_flags(opt)
    _add_report_flags(opt)

    cmp = subparsers.add_parser('compare', parents=[common],
                                help='Compare a plan with its variants.')
    cmp.add_argument('plan', help='INI file with [scenario] and [plan].')
    cmp.add_argument('variants', nargs='?',
                     help='CSV file of variants (default: rounded variants).')
    cmp.add_argument('--step', type=int,
                     help='Unit step of the rounded variants (5).')
    cmp.add_argument('--n-steps', type=int,
                     help='Number of steps of the rounded variants (3).')
    _add_report_flags(cmp)

    sim = subparsers.add_parser('simulate', parents=[common],
                                help='Simulate the dataset of a plan.')
    sim.add_argument('scenario', nargs='?',
                     help='INI file with [scenario] (and [plan]).')
    sim.add_argument('--plan', help='INI file with a [plan] section.')
    sim.add_argument('--preliminary', action='store_true',
                     help='Simulate a balanced preliminary test instead.')
    sim.add_argument('--units-per-stress', type=int,
                     help='Units per stress of the preliminary test (20).')
    return parser


##
# Configuration
#
def _format(value):
    return repr(value) if isinstance(value, float) else str(value)


def resolve_config(args, files=()):
    """Merge config files, flags and defaults in a ConfigParser."""
    config = configparser.ConfigParser()
    for path in [args.config] + list(files):
        if path is not None:
            config.read_dict(read_config(path))
    for dest, section, key in FLAG_KEYS:
        value = getattr(args, dest, None)
        if value is not None:
            if not config.has_section(section):
                config.add_section(section)
            config.set(section, key, _format(value))
    for section, values in DEFAULTS.items():
        if not config.has_section(section):
            config.add_section(section)
        for key, value in values.items():
            if not config.has_option(section, key):
                config.set(section, key, value)
    log.debug('Resolved config: %s',
              {s: dict(config.items(s)) for s in config.sections()})
    return config


def _write_config(config, out_dir):
    with open(os.path.join(out_dir, RESOLVED_CONFIG), 'w',
              encoding='utf-8') as f:
        config.write(f)


def _executor(args):
    workers = args.threads if args.threads else available_workers()
    if workers < 1:
        raise ValueError('--threads must be >= 1 (got %d).' % workers)
    return ProcessPoolExecutor(max_workers=workers) if workers > 1 else None


def _study_config(config, scenario, bounds, search=True):
    if bounds is None:
        raise DataFormatError('stress_min and stress_max are required in '
                              'section [scenario].')
    total_units = get_value(config, 'study', 'total_units', kind=int)
    if total_units is None:
        raise DataFormatError("missing key 'total_units' in section [study] "
                              "(or flag --units).")
    de_config = DeConfig(
        population_size=get_value(config, 'de', 'population', kind=int),
        F=get_value(config, 'de', 'f'), CR=get_value(config, 'de', 'cr'),
        generations=get_value(config, 'de', 'generations', kind=int))
    report_n_sim = get_value(config, 'study', 'report_n_sim', kind=int)
    search_n_sim = get_value(config, 'study', 'search_n_sim', kind=int)
    if not search:
        # comparisons do not search, only the report settings apply
        search_n_sim = report_n_sim
    fixed = get_value(config, 'study', 'fixed_n', '', kind=str)
    variable = get_value(config, 'study', 'variable_n', kind=int)
    return StudyConfig(
        scenario, bounds, total_units,
        n_values=parse_int_list(fixed) if fixed.strip() else (2,),
        n_max=variable if variable is not None else 6,
        granularity=get_value(config, 'study', 'granularity'),
        de_config=de_config,
        search_n_sim=search_n_sim, report_n_sim=report_n_sim,
        report_replicates=get_value(config, 'study', 'report_replicates',
                                    kind=int),
        master_seed=get_value(config, 'run', 'seed', kind=int),
        crn=get_value(config, 'study', 'crn', kind=bool))


##
# Commands
#
def cmd_fit(args):
    config = resolve_config(args)
    seed = get_value(config, 'run', 'seed', kind=int)
    data = load_dataset(args.data)
    names = get_value(config, 'fit', 'candidates', kind=str).split(',')
    candidates = [make_model(name) for name in names if name.strip()]
    design = get_value(config, 'scenario', 'design_stress')

    best, table = fit_preliminary(data, candidates)
    table['beta'] = table.beta.map(
        lambda b: '' if b is None else ' '.join(repr(v) for v in b))
    table['design_median'] = np.nan
    if design is not None:
        for i, model in enumerate(candidates):
            if table.converged[i]:
                beta = [float(v) for v in table.beta[i].split()]
                table.loc[i, 'design_median'] = median(
                    design, model, AftParams(beta, table.sigma[i]))
    table['selected'] = table.basis == str(best.model.basis)
    write_frame(table, os.path.join(args.out_dir, 'aic-table.csv'), seed)

    stub = configparser.ConfigParser()
    stub['scenario'] = {
        'basis': str(best.model.basis),
        'beta': ', '.join(repr(b) for b in best.params.beta),
        'sigma': repr(best.params.sigma),
        'stress_min': repr(float(data.stress.min())),
        'stress_max': repr(float(data.stress.max()))}
    if design is not None:
        stub['scenario']['design_stress'] = repr(design)
    if data.n_failures < data.n:
        # Censoring time of the preliminary test
        stub['scenario']['duration'] = repr(
            float(data.time[~data.observed].max()))
    with open(os.path.join(args.out_dir, 'selected-model.ini'), 'w',
              encoding='utf-8') as f:
        stub.write(f)
    _write_config(config, args.out_dir)
    print(table.to_string(index=False))
    return 0


def cmd_optimize(args):
    config = resolve_config(args, [args.scenario])
    scenario, bounds = scenario_from_config(config)
    study = _study_config(config, scenario, bounds)
    fixed = get_value(config, 'study', 'fixed_n', '', kind=str).strip()
    variable = get_value(config, 'study', 'variable_n', kind=int)
    if not fixed and variable is None:
        fixed = '2'
        config.set('study', 'fixed_n', fixed)
    _write_config(config, args.out_dir)

    executor = _executor(args)
    try:
        reports = []
        if fixed:
            reports += run_fixed_n_study(study, parse_int_list(fixed),
                                         executor=executor)
        if variable is not None:
            reports.append(run_variable_n_study(study, variable,
                                                executor=executor))
    finally:
        if executor is not None:
            executor.shutdown()

    seed = study.master_seed
    write_plan_reports(reports, os.path.join(args.out_dir,
                                             'plan-report.csv'), seed)
    write_trace(reports, os.path.join(args.out_dir, 'generation-trace.csv'),
                seed)
    table = render_table(reports, granularity=study.granularity)
    with open(os.path.join(args.out_dir, 'plan-table.txt'), 'w',
              encoding='utf-8') as f:
        f.write(table + '\n')
    print(table)
    return 0


def cmd_compare(args):
    config = resolve_config(args, [args.plan])
    scenario, bounds = scenario_from_config(config)
    plan = plan_from_config(config, scenario)
    if args.variants is not None:
        variants = plans_from_csv(args.variants, duration=plan.duration,
                                  design_stress=plan.design_stress)
    else:
        variants = rounded_variants(
            plan, step=get_value(config, 'compare', 'step', kind=int),
            n_steps=get_value(config, 'compare', 'n_steps', kind=int))
    if bounds is None:
        bounds = (plan.stresses[0], plan.stresses[-1])
    if not config.has_option('study', 'total_units'):
        config.set('study', 'total_units', str(plan.total_units))
    study = _study_config(config, scenario, bounds, search=False)
    _write_config(config, args.out_dir)

    executor = _executor(args)
    try:
        comparison = compare_neighborhood(plan, scenario, variants, study,
                                          executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    write_comparison(comparison, os.path.join(args.out_dir,
                                              'comparison.csv'),
                     study.master_seed)
    display = comparison.copy()
    display['allocations'] = display.allocations.map(format_allocations)
    print(display.drop(columns='stresses').to_string(index=False))
    return 0


def cmd_simulate(args):
    config = resolve_config(args, [args.scenario, args.plan])
    if args.preliminary:
        config.set('simulate', 'preliminary', 'true')
    seed = get_value(config, 'run', 'seed', kind=int)
    scenario, bounds = scenario_from_config(config)
    if get_value(config, 'simulate', 'preliminary', False, kind=bool):
        if bounds is None:
            raise DataFormatError('stress_min and stress_max are required '
                                  'for a preliminary test.')
        stresses = get_value(config, 'simulate', 'preliminary_stresses',
                             kind='vector')
        if stresses is None:
            n = get_value(config, 'simulate', 'n_preliminary', kind=int)
            stresses = np.linspace(bounds[0], bounds[1], n)
        plan = balanced_plan(
            stresses, get_value(config, 'simulate', 'units_per_stress',
                                kind=int),
            duration=scenario.duration, design_stress=scenario.design_stress)
    else:
        plan = plan_from_config(config, scenario)
    _write_config(config, args.out_dir)

    data = generate_dataset(plan, scenario, Stream(seed).child(SIMULATE))
    write_dataset(data, os.path.join(args.out_dir, 'dataset.csv'), seed)
    censored = data.censoring_fractions()
    summary = pd.DataFrame({
        'stress': plan.stresses, 'units': plan.allocations,
        'censored': censored.reindex(plan.stresses).values,
        'expected_censored': expected_censoring(plan, scenario)})
    write_frame(summary, os.path.join(args.out_dir, 'censoring-summary.csv'),
                seed)
    print(summary.to_string(index=False))
    return 0


COMMANDS = {'fit': cmd_fit, 'optimize': cmd_optimize, 'compare': cmd_compare,
            'simulate': cmd_simulate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        init_logging(logging.DEBUG)
    elif args.quiet:
        init_logging(logging.WARNING)
    else:
        init_logging(logging.INFO)
    try:
        mkdir_p(args.out_dir)
        return COMMANDS[args.command](args)
    except (FitError, StudyError) as e:
        print('altplan: %s' % e, file=sys.stderr)
        return 3
    except (ValueError, OSError) as e:
        print('altplan: error: %s' % e, file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())

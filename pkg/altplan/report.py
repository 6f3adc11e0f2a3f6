#
# altplan - Simulation-based accelerated life test planning.
#
"""
Writers of the study results.

All the CSV files start with a comment line recording the altplan version
and the master seed::

    # altplan 0.3.1 seed=42

followed by a header row. Numbers are written in full precision; vectors
(stresses, allocations) are written as space-separated numbers so that
plan files can be read back with :func:`altplan.loader.plans_from_csv`.
Rounding for display is applied only by :func:`render_table`.
"""

import pandas as pd

from . import __version__
from .planner import merge_close_stresses


def comment_line(seed):
    return '# altplan %s seed=%d' % (__version__, seed)


def format_stresses(stresses):
    return ' '.join(repr(float(s)) for s in stresses)


def format_allocations(allocations):
    return ' '.join(str(int(a)) for a in allocations)


def write_frame(df, path, seed):
    """Write `df` to `path` as CSV preceded by the comment line."""
    with open(path, 'w', newline='', encoding='utf-8') as f:
        f.write(comment_line(seed) + '\n')
        df.to_csv(f, index=False)


def plan_report_frame(reports):
    """Return a DataFrame with one row per :class:`PlanReport`."""
    rows = [dict(label=r.label, n_stresses=r.plan.n_stresses,
                 stresses=format_stresses(r.plan.stresses),
                 allocations=format_allocations(r.plan.allocations),
                 duration=r.plan.duration,
                 design_stress=r.plan.design_stress, min_rmse=r.min_rmse,
                 mean_rmse=r.mean_rmse, std_error=r.std_error,
                 n_fit_failures=r.n_fit_failures)
            for r in reports]
    return pd.DataFrame(rows, columns=[
        'label', 'n_stresses', 'stresses', 'allocations', 'duration',
        'design_stress', 'min_rmse', 'mean_rmse', 'std_error',
        'n_fit_failures'])


def write_plan_reports(reports, path, seed):
    write_frame(plan_report_frame(reports), path, seed)


def write_trace(reports, path, seed):
    """Write the generation traces of `reports` in a single CSV file."""
    frames = []
    for r in reports:
        trace = r.generation_trace.copy()
        trace.insert(0, 'label', r.label)
        frames.append(trace)
    write_frame(pd.concat(frames, ignore_index=True), path, seed)


def write_comparison(comparison, path, seed):
    """Write the table returned by :func:`altplan.planner.compare_neighborhood`.
    """
    df = comparison.copy()
    df['stresses'] = df.stresses.map(format_stresses)
    df['allocations'] = df.allocations.map(format_allocations)
    write_frame(df, path, seed)


def write_dataset(data, path, seed):
    """Write a :class:`CensoredDataset` as `stress,time,status` CSV."""
    write_frame(data.to_frame(), path, seed)


def render_table(reports, granularity=1e-5):
    """Human-readable table of plan reports.

    Close stresses are merged (see
    :func:`altplan.planner.merge_close_stresses`), stresses are printed with 2
    decimals, allocations in parentheses and RMSE values with thousands
    separators.
    """
    rows = []
    for r in reports:
        stresses, alloc = merge_close_stresses(r.plan, granularity)
        rows.append({
            'N': r.label,
            'Stresses': ', '.join('%.2f' % s for s in stresses),
            'Allocations': '(%s)' % ', '.join(str(a) for a in alloc),
            'Min. RMSE': '{:,.0f}'.format(r.min_rmse),
            'Mean RMSE': '{:,.0f}'.format(r.mean_rmse),
            'Std. Error': '{:,.0f}'.format(r.std_error),
        })
    return pd.DataFrame(rows).to_string(index=False)

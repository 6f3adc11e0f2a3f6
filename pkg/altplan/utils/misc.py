#
# altplan - Simulation-based accelerated life test planning.
#
"""
Misc utility functions
"""

import os


def mkdir_p(path):
    """Create the path if not existent, otherwise do nothing.
    If `path` exists, and is not a dir, raise an exception.
    """
    if os.path.exists(path) and not os.path.isdir(path):
        raise NotADirectoryError("'%s' exists and is not a directory." % path)
    os.makedirs(path, exist_ok=True)


def available_workers():
    """Number of CPUs usable by this process."""
    if hasattr(os, 'sched_getaffinity'):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def parse_int_list(text):
    """Parse integer lists like '2..6', '2,3,5' or '3'.

    Returns:
        List of ints. Ranges ('a..b') include both ends.
    """
    values = []
    for part in text.split(','):
        part = part.strip()
        start, sep, stop = part.partition('..')
        if sep:
            start, stop = int(start), int(stop)
            if stop < start:
                raise ValueError("Empty range '%s'." % part)
            values.extend(range(start, stop + 1))
        else:
            values.append(int(part))
    return values

"""Worker-count plumbing.

The worker knob only sets how many numba threads execute a kernel; all
kernels write per-sample slots and every reduction happens serially in
index order, so numerical output is independent of the setting.
"""

from __future__ import annotations

import numba

from .errors import ValidationError


def apply_workers(workers: int) -> None:
    if int(workers) < 1:
        raise ValidationError("workers must be >= 1")
    numba.set_num_threads(max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS)))

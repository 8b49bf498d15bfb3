"""Trial-level parallelism.

Work items are independent and keyed by an integer trial id; results come
back in trial-id order whatever the scheduling, so aggregates do not depend
on the thread count.  Kernels release the GIL, so threads give real
concurrency without pickling.
"""

from concurrent.futures import ThreadPoolExecutor


def map_trials(fn, trial_ids, threads=1):
    """``[fn(t) for t in sorted(trial_ids)]``, evaluated on ``threads`` workers."""
    ids = sorted(trial_ids)
    if threads <= 1 or len(ids) <= 1:
        return [fn(t) for t in ids]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, ids))

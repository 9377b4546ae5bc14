"""Ordered fan-out of independent jobs over a fork pool."""
import multiprocessing as mp


def run_jobs(fn, jobs, workers=1, progress=None):
    """``[fn(j) for j in jobs]`` in job order, optionally on ``workers`` processes."""
    out = []
    if workers > 1 and len(jobs) > 1:
        with mp.get_context("fork").Pool(min(workers, len(jobs))) as pool:
            for r in pool.imap(fn, jobs):
                out.append(r)
                if progress:
                    progress(len(out), len(jobs))
        return out
    for j in jobs:
        out.append(fn(j))
        if progress:
            progress(len(out), len(jobs))
    return out

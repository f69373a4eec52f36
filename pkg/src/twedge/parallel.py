"""Replicate-parallel Monte Carlo with replicate-indexed random streams."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

import numpy as np

from .sampler import RngStream


def _run_block(fn: Callable, master_seed: int, start: int, stop: int, args: tuple) -> list:
    return [fn(RngStream(master_seed, i), *args) for i in range(start, stop)]


def map_replicates(fn: Callable[..., Any], reps: int, master_seed: int, *args,
                   workers: int = 1, block: int | None = None) -> list:
    """Evaluate ``fn(RngStream(master_seed, i), *args)`` for i in range(reps).

    Results come back ordered by replicate index. Each replicate owns its
    stream, so the output does not depend on ``workers``. Any replicate
    exception propagates and aborts the whole run.
    """
    if reps < 0:
        raise ValueError(f"reps must be >= 0, got {reps}")
    workers = max(1, int(workers))
    if workers == 1 or reps < 2:
        return _run_block(fn, master_seed, 0, reps, args)
    if block is None:
        block = max(1, -(-reps // (4 * workers)))
    bounds = [(s, min(s + block, reps)) for s in range(0, reps, block)]
    out: list = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_block, fn, master_seed, s, e, args) for s, e in bounds]
        for fut in futures:
            out.extend(fut.result())
    return out


def map_replicates_array(fn, reps: int, master_seed: int, *args, workers: int = 1) -> np.ndarray:
    return np.asarray(map_replicates(fn, reps, master_seed, *args, workers=workers))

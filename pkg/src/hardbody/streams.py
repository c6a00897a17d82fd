"""Counter-based random streams and worker-count-independent parallel maps.

Every random quantity in the library is drawn from a Philox generator keyed
by (seed, label). Labels are strings; they hash to a stable 64-bit key, so a
stream is identified by content, not by creation order. Work that is split
across threads is split into fixed-size blocks with per-block labels and the
partial results are reduced in block order, which makes every estimate
byte-identical for any worker count.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

# Fixed block size for parallel sample generation. Part of the output
# contract: changing it changes streams, so it is a constant, not a knob.
BLOCK = 4096


def label_key(label: str) -> int:
    """Stable 64-bit key for a stream label."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, label: str) -> np.random.Generator:
    """Philox generator keyed by (seed, label)."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(label_key(label))],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def worker_count() -> int:
    """Worker cap from HARDBODY_THREADS (default 1)."""
    raw = os.environ.get("HARDBODY_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        count = 1
    return max(1, count)


def map_blocks(fn: Callable[[int, int, int], object], total: int,
               block: int = BLOCK) -> list:
    """Apply fn(block_index, start, stop) over fixed blocks of range(total).

    Results are returned in block order regardless of how many threads ran
    them, so any order-sensitive reduction downstream stays deterministic.
    numpy releases the GIL in its kernels, so threads give real parallelism
    for array-heavy fn.
    """
    if total <= 0:
        return []
    spans = [(bi, lo, min(lo + block, total))
             for bi, lo in enumerate(range(0, total, block))]
    workers = worker_count()
    if workers == 1 or len(spans) == 1:
        return [fn(*span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *span) for span in spans]
        return [f.result() for f in futures]


def reduce_sum(parts: Sequence[np.ndarray | float]) -> np.ndarray | float:
    """Sum partial results in the fixed block order (pairwise under the hood)."""
    if len(parts) == 0:
        return 0.0
    stacked = np.asarray(parts)
    return np.add.reduce(stacked, axis=0)


def gaussian_block(seed: int, label: str, block_index: int, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normal block with a per-block stream label."""
    return stream(seed, f"{label}/b{block_index}").standard_normal(shape)


def uniform_block(seed: int, label: str, block_index: int, shape: tuple[int, ...]) -> np.ndarray:
    """Uniform [0,1) block with a per-block stream label."""
    return stream(seed, f"{label}/b{block_index}").random(shape)

"""Vectorized diffusion kernels shared by the simulator, oracle, and maximizer.

All kernels operate on a batch axis (cascades, live-edge worlds, or
enumerated realizations) so that large batches reduce to a handful of
boolean/matmul operations.  Hit counts are accumulated in float32: they are
bounded by the edge count, far below the 2**24 exact-integer limit.
"""

from __future__ import annotations

import numpy as np


def dst_onehot(dst: np.ndarray, n: int) -> np.ndarray:
    """(m, n) indicator matrix mapping edge index to destination node."""
    onehot = np.zeros((dst.shape[0], n), dtype=np.float32)
    if dst.shape[0]:
        onehot[np.arange(dst.shape[0]), dst] = 1.0
    return onehot


def ic_reached(
    seeds: np.ndarray, live: np.ndarray, src: np.ndarray, onehot: np.ndarray
) -> np.ndarray:
    """Nodes reachable from the seeds through live edges, per batch row.

    seeds: (R, n) bool; live: (R, m) bool aligned with src/onehot rows.
    """
    active = seeds.copy()
    frontier = seeds
    while True:
        hit = live & frontier[:, src] if src.shape[0] else live
        newly = (hit.astype(np.float32) @ onehot > 0.0) & ~active
        if not newly.any():
            return active
        active |= newly
        frontier = newly


def ic_times(
    seeds: np.ndarray, live: np.ndarray, src: np.ndarray, onehot: np.ndarray, n: int
) -> np.ndarray:
    """Activation step per (row, node) under live-edge BFS; -1 = never active."""
    times = np.full(seeds.shape, -1, dtype=np.int16)
    times[seeds] = 0
    active = seeds.copy()
    frontier = seeds
    step = 0
    while True:
        step += 1
        hit = live & frontier[:, src] if src.shape[0] else live
        newly = (hit.astype(np.float32) @ onehot > 0.0) & ~active
        if not newly.any():
            return times
        times[newly] = step
        active |= newly
        frontier = newly
        if step >= n - 1:
            return times


def lt_times(seeds: np.ndarray, thresholds: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Activation step per (row, node) under threshold dynamics; -1 = never.

    A node activates once the summed weight of its active in-neighbors
    reaches its threshold; weights accumulate over all active in-neighbors,
    not only newly active ones.
    """
    n = params.shape[0]
    times = np.full(seeds.shape, -1, dtype=np.int16)
    times[seeds] = 0
    active = seeds.copy()
    for step in range(1, max(n, 1)):
        influence = active.astype(np.float64) @ params
        newly = ~active & (influence >= thresholds)
        if not newly.any():
            break
        times[newly] = step
        active |= newly
    return times


def lt_choice_reached(seeds: np.ndarray, choice_src: np.ndarray) -> np.ndarray:
    """Reachability in single-in-edge worlds: choice_src[r, v] = chosen source or -1."""
    active = seeds.copy()
    has_edge = choice_src >= 0
    gather_idx = np.where(has_edge, choice_src, 0)
    while True:
        newly = ~active & has_edge & np.take_along_axis(active, gather_idx, axis=1)
        if not newly.any():
            return active
        active |= newly

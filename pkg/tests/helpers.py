"""Independent oracles shared across the test suite.

Each function here recomputes a contract from first principles (loops and
definitions, no shortcuts shared with the implementation) so the tests
compare two genuinely different routes to the same answer.
"""

from __future__ import annotations

import numpy as np


def fd_param_error(loss_fn, store, analytic: dict[str, np.ndarray],
                   eps: float = 1e-5, max_coords: int = 40, seed: int = 0) -> float:
    """Worst relative error of analytic parameter gradients vs central FD.

    analytic maps parameter names to the gradients produced by backward();
    loss_fn() re-evaluates the scalar objective with the store's current
    values. Large tensors are subsampled at max_coords random coordinates.
    """
    worst = 0.0
    rs = np.random.default_rng(seed)
    for name, grad in analytic.items():
        flat = store.values[name].reshape(-1)
        g = np.asarray(grad).reshape(-1)
        if flat.size <= max_coords:
            idxs = np.arange(flat.size)
        else:
            idxs = rs.choice(flat.size, max_coords, replace=False)
        for i in idxs:
            old = flat[i]
            flat[i] = old + eps
            lp = loss_fn()
            flat[i] = old - eps
            lm = loss_fn()
            flat[i] = old
            fd = (lp - lm) / (2.0 * eps)
            denom = max(abs(fd), abs(g[i]), 1e-8)
            worst = max(worst, abs(fd - g[i]) / denom)
    return worst


def fd_array_error(loss_fn, array: np.ndarray, analytic: np.ndarray,
                   eps: float = 1e-5, max_coords: int = 40, seed: int = 0) -> float:
    """Worst relative error of an input-gradient tensor vs central FD."""
    worst = 0.0
    rs = np.random.default_rng(seed)
    flat = array.reshape(-1)
    g = np.asarray(analytic).reshape(-1)
    if flat.size <= max_coords:
        idxs = np.arange(flat.size)
    else:
        idxs = rs.choice(flat.size, max_coords, replace=False)
    for i in idxs:
        old = flat[i]
        flat[i] = old + eps
        lp = loss_fn()
        flat[i] = old - eps
        lm = loss_fn()
        flat[i] = old
        fd = (lp - lm) / (2.0 * eps)
        denom = max(abs(fd), abs(g[i]), 1e-8)
        worst = max(worst, abs(fd - g[i]) / denom)
    return worst


def direct_dft(x: np.ndarray, frame_len: int, hop: int, taper: np.ndarray) -> np.ndarray:
    """Literal triple-loop realization of the framed DFT definition."""
    n_frames = (len(x) - frame_len) // hop + 1
    n_bins = frame_len // 2 + 1
    out = np.zeros((n_bins, n_frames), dtype=np.complex128)
    for t in range(n_frames):
        for f in range(n_bins):
            acc = 0.0 + 0.0j
            for n in range(frame_len):
                acc += (x[t * hop + n] * taper[n]
                        * np.exp(-2j * np.pi * f * n / frame_len))
            out[f, t] = acc
    return out


def enumerate_windows(n: int, window_len: int, stride: int) -> tuple[list[int], int | None]:
    """Walk the stride lattice: full-window starts, plus the tail start.

    The tail exists when the full windows stop short of the signal end; it
    sits at the next lattice point. Returns (full_starts, tail_start).
    """
    full = []
    start = 0
    while start + window_len <= n:
        full.append(start)
        start += stride
    covered = full[-1] + window_len if full else 0
    tail = start if covered < n else None
    return full, tail


def exhaustive_nearest(vec: np.ndarray, entries: np.ndarray) -> int:
    """Scan every codebook row; strict < keeps the lowest index on ties."""
    best, best_d = 0, None
    for k in range(entries.shape[0]):
        d = 0.0
        for j in range(entries.shape[1]):
            diff = float(vec[j]) - float(entries[k, j])
            d += diff * diff
        if best_d is None or d < best_d:
            best, best_d = k, d
    return best


def auc_by_pairs(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Brute-force pairwise AUC: wins count 1, ties 0.5."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        return None
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def conv_macs_by_loop(cin: int, cout: int, k: int, h: int, w: int,
                      stride: int, padding: int) -> int:
    """Count multiplications of a direct convolution with six nested loops."""
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    count = 0
    for _ in range(cout):
        for _ in range(ho):
            for _ in range(wo):
                count += cin * k * k
    return count

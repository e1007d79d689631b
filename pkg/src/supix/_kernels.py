"""Compiled pixel loops for SLIC assignment and connectivity labelling."""
import os

import numba
import numpy as np
from numba import njit, prange

# The bundled TBB is too old for numba; workqueue is always available.
numba.config.THREADING_LAYER = "workqueue"


def configure_threads():
    """Apply the ``SUPIX_THREADS`` cap to numba's worker pool."""
    raw = os.environ.get("SUPIX_THREADS")
    if not raw:
        return numba.get_num_threads()
    n = max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@njit(cache=True, parallel=True)
def assign_pixels(lab, centers, labels, bin_start, bin_items, nbx, nby, S, inv_S2, inv_m2):
    # centers[k] = (y, x, L, a, b); bins of side S over center positions.
    # Candidates are centers with |dy| <= S and |dx| <= S, which always live
    # in the 3x3 block of bins around the pixel's own bin.
    H, W = labels.shape
    for i in prange(H):
        by = min(int(i / S), nby - 1)
        for j in range(W):
            bx = min(int(j / S), nbx - 1)
            best = np.inf
            best_k = -1
            L = lab[i, j, 0]
            A = lab[i, j, 1]
            B = lab[i, j, 2]
            for yy in range(max(by - 1, 0), min(by + 2, nby)):
                for xx in range(max(bx - 1, 0), min(bx + 2, nbx)):
                    b = yy * nbx + xx
                    for t in range(bin_start[b], bin_start[b + 1]):
                        k = bin_items[t]
                        dy = i - centers[k, 0]
                        dx = j - centers[k, 1]
                        if abs(dy) > S or abs(dx) > S:
                            continue
                        dl = L - centers[k, 2]
                        da = A - centers[k, 3]
                        db = B - centers[k, 4]
                        d = (dx * dx + dy * dy) * inv_S2 + (dl * dl + da * da + db * db) * inv_m2
                        if d < best or (d == best and k < best_k):
                            best = d
                            best_k = k
            if best_k >= 0:
                labels[i, j] = best_k


@njit(cache=True)
def update_centers(lab, labels, centers):
    # Sequential raster-order sums keep the reduction bit-reproducible.
    K = centers.shape[0]
    acc = np.zeros((K, 5))
    cnt = np.zeros(K, dtype=np.int64)
    H, W = labels.shape
    for i in range(H):
        for j in range(W):
            k = labels[i, j]
            acc[k, 0] += i
            acc[k, 1] += j
            acc[k, 2] += lab[i, j, 0]
            acc[k, 3] += lab[i, j, 1]
            acc[k, 4] += lab[i, j, 2]
            cnt[k] += 1
    for k in range(K):
        if cnt[k] > 0:
            for c in range(5):
                centers[k, c] = acc[k, c] / cnt[k]


@njit(cache=True)
def label_components(assign):
    """4-connected components of equal ids, numbered in raster order."""
    H, W = assign.shape
    comp = np.full((H, W), -1, dtype=np.int32)
    stack = np.empty(H * W, dtype=np.int64)
    n = 0
    for i0 in range(H):
        for j0 in range(W):
            if comp[i0, j0] >= 0:
                continue
            v = assign[i0, j0]
            comp[i0, j0] = n
            top = 0
            stack[top] = i0 * W + j0
            top += 1
            while top > 0:
                top -= 1
                p = stack[top]
                i = p // W
                j = p - i * W
                if i > 0 and comp[i - 1, j] < 0 and assign[i - 1, j] == v:
                    comp[i - 1, j] = n
                    stack[top] = p - W
                    top += 1
                if i < H - 1 and comp[i + 1, j] < 0 and assign[i + 1, j] == v:
                    comp[i + 1, j] = n
                    stack[top] = p + W
                    top += 1
                if j > 0 and comp[i, j - 1] < 0 and assign[i, j - 1] == v:
                    comp[i, j - 1] = n
                    stack[top] = p - 1
                    top += 1
                if j < W - 1 and comp[i, j + 1] < 0 and assign[i, j + 1] == v:
                    comp[i, j + 1] = n
                    stack[top] = p + 1
                    top += 1
            n += 1
    return comp, n


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def merge_small_components(comp, n, threshold):
    """Absorb components below ``threshold`` pixels into a neighbour.

    Components are visited in index (raster) order. A small component joins
    its largest 4-adjacent neighbour, ties going to the lower root id, and
    the union is re-examined until large enough or isolated. Returns the
    root id of every component.
    """
    H, W = comp.shape
    size = np.zeros(n, dtype=np.int64)
    for i in range(H):
        for j in range(W):
            size[comp[i, j]] += 1
    # Linked edge lists: each boundary pixel pair contributes an entry to both sides.
    cap = 4 * H * W + 1
    nb = np.empty(cap, dtype=np.int64)
    nxt = np.full(cap, -1, dtype=np.int64)
    head = np.full(n, -1, dtype=np.int64)
    tail = np.full(n, -1, dtype=np.int64)
    m = 0
    for i in range(H):
        for j in range(W):
            a = comp[i, j]
            for d in range(2):
                if d == 0:
                    if j + 1 >= W:
                        continue
                    b = comp[i, j + 1]
                else:
                    if i + 1 >= H:
                        continue
                    b = comp[i + 1, j]
                if a == b:
                    continue
                for src, dst in ((a, b), (b, a)):
                    nb[m] = dst
                    if head[src] < 0:
                        head[src] = m
                    else:
                        nxt[tail[src]] = m
                    tail[src] = m
                    m += 1
    parent = np.arange(n)
    for c in range(n):
        if parent[c] != c:
            continue
        r = c
        while size[r] < threshold:
            best = -1
            e = head[r]
            while e >= 0:
                t = _find(parent, nb[e])
                if t != r:
                    if best < 0 or size[t] > size[best] or (size[t] == size[best] and t < best):
                        best = t
                e = nxt[e]
            if best < 0:
                break
            parent[r] = best
            size[best] += size[r]
            if head[r] >= 0:
                if head[best] < 0:
                    head[best] = head[r]
                else:
                    nxt[tail[best]] = head[r]
                tail[best] = tail[r]
            head[r] = -1
            r = best
    roots = np.empty(n, dtype=np.int64)
    for c in range(n):
        roots[c] = _find(parent, c)
    return roots


@njit(cache=True)
def dense_relabel(labels):
    """Renumber ids 0..N-1 in raster order of first occurrence."""
    H, W = labels.shape
    mx = 0
    for i in range(H):
        for j in range(W):
            if labels[i, j] > mx:
                mx = labels[i, j]
    remap = np.full(mx + 1, -1, dtype=np.int64)
    out = np.empty((H, W), dtype=np.int32)
    n = 0
    for i in range(H):
        for j in range(W):
            v = labels[i, j]
            if remap[v] < 0:
                remap[v] = n
                n += 1
            out[i, j] = remap[v]
    return out, n

"""Pure-Python/numpy versions of the hot kernels.

These mirror ``_ckernels.pyx`` one to one and are used when the compiled
extension is unavailable (or when ``LUBRICAV_PURE_PYTHON=1``).
"""
import numpy as np


def _bary2(vx, vy, px, py):
    ax, bx, cx = vx
    ay, by, cy = vy
    det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
    l1 = ((px - ax) * (cy - ay) - (cx - ax) * (py - ay)) / det
    l2 = ((bx - ax) * (py - ay) - (px - ax) * (by - ay)) / det
    return 1.0 - l1 - l2, l1, l2


def _cell_bary(vertices, cells, k, px, py):
    a, b, c = cells[k]
    return _bary2(
        (vertices[a, 0], vertices[b, 0], vertices[c, 0]),
        (vertices[a, 1], vertices[b, 1], vertices[c, 1]),
        px,
        py,
    )


def locate_points_2d(vertices, cells, neighbors, vc_ptr, vc_idx, bbox, points, hints, eps):
    """Walk-based point location on a triangulation.

    Returns ``(cell, bary)``; ``cell[i] == -1`` marks a point outside the mesh.
    A point on a shared edge or vertex goes to the lowest-index cell
    containing it.
    """
    n = points.shape[0]
    ncell = cells.shape[0]
    out_cell = np.full(n, -1, dtype=np.int64)
    out_bary = np.zeros((n, 3))
    for i in range(n):
        px = float(points[i, 0])
        py = float(points[i, 1])
        if px < bbox[0] or px > bbox[1] or py < bbox[2] or py > bbox[3]:
            continue
        k = int(hints[i]) if 0 <= hints[i] < ncell else 0
        found = -1
        for _ in range(ncell):
            lam = _cell_bary(vertices, cells, k, px, py)
            j = min(range(3), key=lambda m: lam[m])
            if lam[j] >= -eps:
                found = k
                break
            nb = neighbors[k, j]
            if nb < 0:
                break
            k = int(nb)
        if found < 0:
            for k in range(ncell):
                lam = _cell_bary(vertices, cells, k, px, py)
                if min(lam) >= -eps:
                    found = k
                    break
        elif min(lam) <= eps:
            # point on a face: prefer the lowest-index containing cell
            best = found
            for v in cells[found]:
                for q in range(vc_ptr[v], vc_ptr[v + 1]):
                    c = int(vc_idx[q])
                    if c < best and min(_cell_bary(vertices, cells, c, px, py)) >= -eps:
                        best = c
            found = best
        if found < 0:
            continue
        lam = np.maximum(np.array(_cell_bary(vertices, cells, found, px, py)), 0.0)
        out_cell[i] = found
        out_bary[i] = lam / lam.sum()
    return out_cell, out_bary


def locate_points_1d(coords, points):
    """Locate points on a sorted 1D vertex array; ties go to the lower cell."""
    points = np.asarray(points, dtype=float)
    ncell = coords.shape[0] - 1
    cell = np.searchsorted(coords, points, side="left") - 1
    cell = np.where(points == coords[0], 0, cell)
    outside = (points < coords[0]) | (points > coords[-1])
    cell = np.clip(cell, 0, ncell - 1)
    x0 = coords[cell]
    x1 = coords[cell + 1]
    b1 = (points - x0) / (x1 - x0)
    b1 = np.clip(b1, 0.0, 1.0)
    bary = np.stack([1.0 - b1, b1], axis=1)
    cell = np.where(outside, -1, cell).astype(np.int64)
    bary[outside] = 0.0
    return cell, bary


def triplets_to_csr(nrows, ncols, rows, cols, vals):
    """Sum duplicate triplets into CSR arrays.

    Also returns ``slot`` with ``data[slot[t]]`` receiving triplet ``t``,
    so a fixed pattern can be refilled with ``np.bincount``.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    if rows.size and (rows.min() < 0 or rows.max() >= nrows or cols.min() < 0 or cols.max() >= ncols):
        raise IndexError("triplet index out of range")
    key = rows * ncols + cols
    uniq, slot = np.unique(key, return_inverse=True)
    data = np.bincount(slot, weights=vals, minlength=uniq.size)
    urows = uniq // ncols if ncols else uniq
    indices = (uniq - urows * ncols).astype(np.int64)
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.add.at(indptr, urows + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, indices, data, slot.astype(np.int64)


def csr_matvec(indptr, indices, data, x):
    nrows = indptr.shape[0] - 1
    row_of = np.repeat(np.arange(nrows), np.diff(indptr))
    return np.bincount(row_of, weights=data * x[indices], minlength=nrows)


def ruiz_scale(indptr, indices, data, n_minor, max_iter, tol):
    """Ruiz equilibration of a compressed matrix.

    Returns ``(major_scale, minor_scale, scaled_data)``; every line of the
    scaled matrix has an infinity norm within ``tol`` of one on exit (or
    after ``max_iter`` sweeps).
    """
    n_major = indptr.shape[0] - 1
    major_of = np.repeat(np.arange(n_major), np.diff(indptr))
    nonempty = np.flatnonzero(np.diff(indptr) > 0)
    a = np.array(data, dtype=float)
    s_major = np.ones(n_major)
    s_minor = np.ones(n_minor)
    for _ in range(max_iter):
        absd = np.abs(a)
        mx = np.zeros(n_major)
        if nonempty.size:
            mx[nonempty] = np.maximum.reduceat(absd, indptr[nonempty])
        mn = np.zeros(n_minor)
        np.maximum.at(mn, indices, absd)
        mx[mx == 0] = 1.0
        mn[mn == 0] = 1.0
        if max(np.abs(1 - mx).max(initial=0.0), np.abs(1 - mn).max(initial=0.0)) < tol:
            break
        dx = 1.0 / np.sqrt(mx)
        dn = 1.0 / np.sqrt(mn)
        a *= dx[major_of] * dn[indices]
        s_major *= dx
        s_minor *= dn
    return s_major, s_minor, a

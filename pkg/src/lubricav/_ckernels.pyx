# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_kernels_py`` for the reference)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


cdef inline void _bary(const double[:, ::1] V, const i64[:, ::1] C, Py_ssize_t k,
                       double px, double py, double* lam) noexcept nogil:
    cdef i64 a = C[k, 0], b = C[k, 1], c = C[k, 2]
    cdef double ax = V[a, 0], ay = V[a, 1]
    cdef double bx = V[b, 0], by = V[b, 1]
    cdef double cx = V[c, 0], cy = V[c, 1]
    cdef double det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
    lam[1] = ((px - ax) * (cy - ay) - (cx - ax) * (py - ay)) / det
    lam[2] = ((bx - ax) * (py - ay) - (px - ax) * (by - ay)) / det
    lam[0] = 1.0 - lam[1] - lam[2]


cdef inline double _min3(double* lam) noexcept nogil:
    cdef double m = lam[0]
    if lam[1] < m:
        m = lam[1]
    if lam[2] < m:
        m = lam[2]
    return m


def locate_points_2d(const double[:, ::1] vertices, const i64[:, ::1] cells,
                     const i64[:, ::1] neighbors, const i64[::1] vc_ptr,
                     const i64[::1] vc_idx, const double[::1] bbox,
                     const double[:, ::1] points, const i64[::1] hints, double eps):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t ncell = cells.shape[0]
    out_cell_arr = np.full(n, -1, dtype=np.int64)
    out_bary_arr = np.zeros((n, 3))
    cdef i64[::1] out_cell = out_cell_arr
    cdef double[:, ::1] out_bary = out_bary_arr
    cdef double lam[3]
    cdef double px, py, s, m
    cdef Py_ssize_t i, it, j, k, found, best, c, q, vi
    cdef i64 nb, v
    with nogil:
        for i in range(n):
            px = points[i, 0]
            py = points[i, 1]
            if px < bbox[0] or px > bbox[1] or py < bbox[2] or py > bbox[3]:
                continue
            k = hints[i]
            if k < 0 or k >= ncell:
                k = 0
            found = -1
            for it in range(ncell):
                _bary(vertices, cells, k, px, py, lam)
                j = 0
                if lam[1] < lam[j]:
                    j = 1
                if lam[2] < lam[j]:
                    j = 2
                if lam[j] >= -eps:
                    found = k
                    break
                nb = neighbors[k, j]
                if nb < 0:
                    break
                k = nb
            if found < 0:
                for k in range(ncell):
                    _bary(vertices, cells, k, px, py, lam)
                    if _min3(lam) >= -eps:
                        found = k
                        break
            elif _min3(lam) <= eps:
                best = found
                for vi in range(3):
                    v = cells[found, vi]
                    for q in range(vc_ptr[v], vc_ptr[v + 1]):
                        c = vc_idx[q]
                        if c < best:
                            _bary(vertices, cells, c, px, py, lam)
                            if _min3(lam) >= -eps:
                                best = c
                found = best
            if found < 0:
                continue
            _bary(vertices, cells, found, px, py, lam)
            s = 0.0
            for j in range(3):
                if lam[j] < 0.0:
                    lam[j] = 0.0
                s += lam[j]
            out_cell[i] = found
            for j in range(3):
                out_bary[i, j] = lam[j] / s
    return out_cell_arr, out_bary_arr


def locate_points_1d(const double[::1] coords, points_in):
    cdef const double[::1] points = np.ascontiguousarray(points_in, dtype=float)
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t ncell = coords.shape[0] - 1
    out_cell_arr = np.full(n, -1, dtype=np.int64)
    out_bary_arr = np.zeros((n, 2))
    cdef i64[::1] out_cell = out_cell_arr
    cdef double[:, ::1] out_bary = out_bary_arr
    cdef Py_ssize_t i, lo, hi, mid
    cdef double p, b1
    with nogil:
        for i in range(n):
            p = points[i]
            if p < coords[0] or p > coords[ncell]:
                continue
            # first vertex index >= p, minus one (lower cell wins ties)
            lo = 0
            hi = ncell + 1
            while lo < hi:
                mid = (lo + hi) // 2
                if coords[mid] < p:
                    lo = mid + 1
                else:
                    hi = mid
            lo -= 1
            if lo < 0:
                lo = 0
            if lo > ncell - 1:
                lo = ncell - 1
            b1 = (p - coords[lo]) / (coords[lo + 1] - coords[lo])
            if b1 < 0.0:
                b1 = 0.0
            if b1 > 1.0:
                b1 = 1.0
            out_cell[i] = lo
            out_bary[i, 0] = 1.0 - b1
            out_bary[i, 1] = b1
    return out_cell_arr, out_bary_arr


def triplets_to_csr(Py_ssize_t nrows, Py_ssize_t ncols, rows_in, cols_in, vals_in):
    cdef const i64[::1] rows = np.ascontiguousarray(rows_in, dtype=np.int64)
    cdef const i64[::1] cols = np.ascontiguousarray(cols_in, dtype=np.int64)
    cdef const double[::1] vals = np.ascontiguousarray(vals_in, dtype=float)
    cdef Py_ssize_t nt = rows.shape[0]
    cdef Py_ssize_t t, r, p, q, start, end, nnz, w
    for t in range(nt):
        if rows[t] < 0 or rows[t] >= nrows or cols[t] < 0 or cols[t] >= ncols:
            raise IndexError("triplet index out of range")
    # counting sort by row
    count_arr = np.zeros(nrows + 1, dtype=np.int64)
    cdef i64[::1] count = count_arr
    for t in range(nt):
        count[rows[t] + 1] += 1
    for r in range(nrows):
        count[r + 1] += count[r]
    order_arr = np.empty(nt, dtype=np.int64)
    cdef i64[::1] order = order_arr
    fill_arr = count_arr[:-1].copy()
    cdef i64[::1] fill = fill_arr
    for t in range(nt):
        r = rows[t]
        order[fill[r]] = t
        fill[r] += 1
    # within each row: insertion sort by column (rows are short)
    cdef i64 key, tmp
    for r in range(nrows):
        start = count[r]
        end = count[r + 1]
        for p in range(start + 1, end):
            tmp = order[p]
            key = cols[tmp]
            q = p - 1
            while q >= start and (cols[order[q]] > key or (cols[order[q]] == key and order[q] > tmp)):
                order[q + 1] = order[q]
                q -= 1
            order[q + 1] = tmp
    indptr_arr = np.zeros(nrows + 1, dtype=np.int64)
    indices_arr = np.empty(nt, dtype=np.int64)
    data_arr = np.zeros(nt)
    slot_arr = np.empty(nt, dtype=np.int64)
    cdef i64[::1] indptr = indptr_arr
    cdef i64[::1] indices = indices_arr
    cdef double[::1] data = data_arr
    cdef i64[::1] slot = slot_arr
    nnz = 0
    for r in range(nrows):
        start = count[r]
        end = count[r + 1]
        w = -1
        for p in range(start, end):
            t = order[p]
            if w < 0 or indices[w] != cols[t]:
                w = nnz
                indices[w] = cols[t]
                data[w] = 0.0
                nnz += 1
            # summation in triplet order keeps results identical to bincount
            data[w] += vals[t]
            slot[t] = w
        indptr[r + 1] = nnz
    return indptr_arr, indices_arr[:nnz].copy(), data_arr[:nnz].copy(), slot_arr


def csr_matvec(const i64[::1] indptr, const i64[::1] indices, const double[::1] data,
               const double[::1] x):
    cdef Py_ssize_t nrows = indptr.shape[0] - 1
    y_arr = np.zeros(nrows)
    cdef double[::1] y = y_arr
    cdef Py_ssize_t r, p
    cdef double s
    with nogil:
        for r in range(nrows):
            s = 0.0
            for p in range(indptr[r], indptr[r + 1]):
                s = s + data[p] * x[indices[p]]
            y[r] = s
    return y_arr


from libc.math cimport sqrt, fabs


def ruiz_scale(const i64[::1] indptr, const i64[::1] indices, data_in, Py_ssize_t n_minor,
               int max_iter, double tol):
    cdef Py_ssize_t n_major = indptr.shape[0] - 1
    a_arr = np.array(data_in, dtype=float)
    cdef double[::1] a = a_arr
    smaj_arr = np.ones(n_major)
    smin_arr = np.ones(n_minor)
    mx_arr = np.zeros(n_major)
    mn_arr = np.zeros(n_minor)
    cdef double[::1] smaj = smaj_arr
    cdef double[::1] smin = smin_arr
    cdef double[::1] mx = mx_arr
    cdef double[::1] mn = mn_arr
    cdef Py_ssize_t r, p, it
    cdef double v, dev
    with nogil:
        for it in range(max_iter):
            for r in range(n_major):
                mx[r] = 0.0
            for r in range(n_minor):
                mn[r] = 0.0
            for r in range(n_major):
                for p in range(indptr[r], indptr[r + 1]):
                    v = fabs(a[p])
                    if v > mx[r]:
                        mx[r] = v
                    if v > mn[indices[p]]:
                        mn[indices[p]] = v
            dev = 0.0
            for r in range(n_major):
                if mx[r] == 0.0:
                    mx[r] = 1.0
                if fabs(1.0 - mx[r]) > dev:
                    dev = fabs(1.0 - mx[r])
            for r in range(n_minor):
                if mn[r] == 0.0:
                    mn[r] = 1.0
                if fabs(1.0 - mn[r]) > dev:
                    dev = fabs(1.0 - mn[r])
            if dev < tol:
                break
            for r in range(n_major):
                mx[r] = 1.0 / sqrt(mx[r])
                smaj[r] *= mx[r]
            for r in range(n_minor):
                mn[r] = 1.0 / sqrt(mn[r])
                smin[r] *= mn[r]
            for r in range(n_major):
                for p in range(indptr[r], indptr[r + 1]):
                    a[p] *= mx[r] * mn[indices[p]]
    return smaj_arr, smin_arr, a_arr

"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs on inputs of the size met in the benchmark cases; the
table lists the best wall time per backend and the speed-up.  Outputs of
both backends are checked for bitwise equality first.
"""
import argparse
import timeit

import numpy as np
import scipy.sparse as sp

from lubricav import kernels
from lubricav.assembly import Assembler
from lubricav.fem import ElementFamily, build_mixed_space
from lubricav.laws import SinusoidalThickness
from lubricav.mesh import BARY_EPS, BoundaryTag, build_interval_mesh, build_structured_triangular_mesh


def workloads(rng):
    mesh2 = build_structured_triangular_mesh((0.0, 1.0, 0.0, 1.0), 150, 150)
    ptr, idx = mesh2._vertex_cells
    pts2 = np.ascontiguousarray(mesh2.vertices[mesh2.cells].mean(axis=1) + rng.normal(0, 2e-3, (mesh2.n_cells, 2)))
    hints = np.arange(mesh2.n_cells, dtype=np.int64)
    yield "locate_points_2d (45k pts)", "locate_points_2d", (
        mesh2.vertices, mesh2.cells, mesh2.neighbors, ptr, idx, mesh2.bbox, pts2, hints, BARY_EPS)

    coords = np.linspace(0.0, 1.0, 7201)
    yield "locate_points_1d (7200 pts)", "locate_points_1d", (coords, rng.uniform(0, 1, 7200))

    space = build_mixed_space(build_structured_triangular_mesh((0.0, 1.0, 0.0, 1.0), 100, 100), ElementFamily.RT0_P0)
    dofs = space.cell_flux_dofs
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    vals = rng.standard_normal(rows.size)
    yield "triplets_to_csr (180k triplets)", "triplets_to_csr", (space.n_u, space.n_u, rows, cols, vals)

    asm = Assembler(space, 0.015, {t: 1e6 for t in BoundaryTag})
    M = asm.velocity_mass(1e-4, SinusoidalThickness(2e-5, 5e-6, 1.0), 0.0)
    x = rng.standard_normal(M.shape[1])
    yield "csr_matvec (M, 100x100)", "csr_matvec", (M.indptr, M.indices, M.data, x)

    K = sp.bmat([[M.to_scipy(), asm.B.to_scipy()], [asm.B.to_scipy().T, None]], format="csc")
    yield "ruiz_scale (saddle, 100x100)", "ruiz_scale", (
        K.indptr.astype(np.int64), K.indices.astype(np.int64), K.data, K.shape[0], 30, 1e-2)

    mesh1 = build_interval_mesh(0, 1, 7200)
    space1 = build_mixed_space(mesh1, ElementFamily.RT0_P0)
    K1 = sp.csc_matrix(sp.diags(rng.uniform(1, 1e6, space1.n_u)))
    yield "ruiz_scale (diag, 7200)", "ruiz_scale", (
        K1.indptr.astype(np.int64), K1.indices.astype(np.int64), K1.data, K1.shape[0], 30, 1e-2)


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    mods = kernels.backends()
    if "cython" not in mods:
        print("compiled backend not built; only the pure-Python timings are shown")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python ms':>10s} {'cython ms':>10s} {'speed-up':>9s}  equal")
    for label, name, call_args in workloads(rng):
        times = {}
        outs = {}
        for key, mod in mods.items():
            fn = getattr(mod, name)
            outs[key] = fn(*call_args)
            n = max(1, args.repeat)
            times[key] = min(timeit.repeat(lambda: fn(*call_args), number=1, repeat=n)) * 1e3
        py = times["python"]
        cy = times.get("cython", float("nan"))
        eq = same(outs["python"], outs["cython"]) if "cython" in outs else True
        print(f"{label:34s} {py:10.3f} {cy:10.3f} {py / cy:8.1f}x  {'yes' if eq else 'NO'}")


if __name__ == "__main__":
    main()

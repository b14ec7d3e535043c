"""Primal-dual active-set solution of the saddle-point complementarity system.

Active set ``A = {i : Lam_i - c P_i > 0}``; on ``A`` the pressure vanishes,
on the inactive set ``I`` the multiplier does.  Each iteration solves

    [ M       B[:, I] ] [ U   ]   [ F_v  ]
    [ B[:, I]^T   0   ] [ P_I ] = [ F_qI ]

and recovers ``Lam_A = (F_qA - B[:, A]^T U) / D_A``.  The iteration stops
when the active set repeats.
"""
from __future__ import annotations

import itertools
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .assembly import SaddleLcpSystem
from .sparse import SingularMatrix, factorize

log = logging.getLogger(__name__)


class NoFeasibleSet(RuntimeError):
    """No active set yields a sign-feasible solution."""


class AmbiguousSolution(RuntimeError):
    """Two feasible active sets give materially different solutions."""


class MaxIterationsExceeded(RuntimeError):
    """Raised by callers that treat a non-converged solve as fatal."""


@dataclass
class PdasConfig:
    c: float = 1.0
    max_iter: int = 200
    warm_start: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass
class PdasSolution:
    U: np.ndarray
    P: np.ndarray
    Lam: np.ndarray
    active: np.ndarray  # boolean mask over pressure DOFs
    iterations: int
    converged: bool
    cycled: bool = False
    trace: list = field(default_factory=list, repr=False)

    @property
    def active_set(self):
        return np.flatnonzero(self.active)

    @property
    def inactive_set(self):
        return np.flatnonzero(~self.active)


def split_active(Lam, P, c):
    """Index sets ``(A, I)``; ties ``Lam_i == c P_i`` go to ``I``."""
    Lam = np.asarray(Lam, dtype=float)
    P = np.asarray(P, dtype=float)
    if Lam.shape != P.shape:
        raise ValueError("Lam and P must have equal length")
    mask = _active_mask(Lam, P, c)
    return np.flatnonzero(mask), np.flatnonzero(~mask)


def _active_mask(Lam, P, c):
    return (Lam - c * P) > 0


class ReducedSolver:
    """Solves reduced saddle systems, caching factorisations by ``(M, I)``.

    Keys hold a reference to ``M`` itself, so the cache only hits when the
    very same matrix object is reused (the assembler does that when the
    thickness does not change between steps).
    """

    def __init__(self, maxsize=8):
        self.maxsize = maxsize
        self._cache = OrderedDict()
        self.factorizations = 0

    def _factor(self, M, B, B_csc, inactive):
        key = (id(M), id(B), inactive.tobytes())
        hit = self._cache.get(key)
        if hit is not None and hit[0] is M and hit[1] is B:
            self._cache.move_to_end(key)
            return hit[2]
        Ms = M.to_scipy()
        idx = np.flatnonzero(inactive)
        if idx.size:
            BI = B_csc[:, idx]
            K = sp.bmat([[Ms, BI], [BI.T, None]], format="csc")
        else:
            K = Ms
        fac = factorize(K)
        self.factorizations += 1
        self._cache[key] = (M, B, fac)
        if len(self._cache) > self.maxsize:
            self._cache.popitem(last=False)
        return fac

    def solve(self, system: SaddleLcpSystem, inactive):
        """Reduced solve.  With ``M = a * M0`` the factors of ``M0`` are used:
        ``M0 y + B_I P = F_v``, ``B_I^T y = a F_qI`` and ``U = y / a``."""
        inactive = np.asarray(inactive, dtype=bool)
        if system.mass_base is not None and system.mass_base is not system.M:
            alpha = system.mass_scale
            fac = self._factor(system.mass_base, system.B, system.B_csc, inactive)
            x = fac.solve(np.concatenate([system.F_v, alpha * system.F_q[inactive]]))
            return x[: system.n_u] / alpha, x[system.n_u :]
        fac = self._factor(system.M, system.B, system.B_csc, inactive)
        x = fac.solve(np.concatenate([system.F_v, system.F_q[inactive]]))
        return x[: system.n_u], x[system.n_u :]


def _index_mask(n_p, S):
    """Boolean mask from an index array or a boolean mask."""
    S = np.asarray(S)
    if S.dtype == bool:
        if S.shape != (n_p,):
            raise ValueError("index mask has the wrong length")
        return S
    mask = np.zeros(n_p, dtype=bool)
    mask[S.astype(np.int64)] = True
    return mask


def solve_reduced(system: SaddleLcpSystem, I, solver: Optional[ReducedSolver] = None):
    """``(U, P_I)`` for the inactive set ``I`` (index array or boolean mask)."""
    solver = solver or ReducedSolver(maxsize=1)
    return solver.solve(system, _index_mask(system.n_p, I))


def recover_multiplier(system: SaddleLcpSystem, U, A):
    """Full multiplier vector: ``Lam_A`` from the second block row, zero on ``I``."""
    active = _index_mask(system.n_p, A)
    Lam = np.zeros(system.n_p)
    if active.any():
        BtU = system.B_csc.T @ U
        Lam[active] = (system.F_q[active] - BtU[active]) / system.D[active]
    return Lam


def _complementarity_defect(P, Lam):
    """Scale-free measure of sign violations of an iterate."""
    neg_p = float(np.max(-P, initial=0.0))
    neg_l = float(np.max(-Lam, initial=0.0))
    sp_ = max(float(np.max(np.abs(P), initial=0.0)), np.finfo(float).tiny)
    sl_ = max(float(np.max(np.abs(Lam), initial=0.0)), np.finfo(float).tiny)
    return neg_p / sp_ + neg_l / sl_


def pdas_solve(system: SaddleLcpSystem, config: Optional[PdasConfig] = None,
               solver: Optional[ReducedSolver] = None) -> PdasSolution:
    config = config or PdasConfig(c=system.c)
    solver = solver or ReducedSolver(maxsize=4)
    n_p = system.n_p
    c = config.c
    if config.warm_start is not None:
        P = np.asarray(config.warm_start[0], dtype=float).copy()
        Lam = np.asarray(config.warm_start[1], dtype=float).copy()
        if P.shape != (n_p,) or Lam.shape != (n_p,):
            raise ValueError("warm start has the wrong length")
    else:
        P = np.zeros(n_p)
        Lam = np.zeros(n_p)

    active = _active_mask(Lam, P, c)
    seen = {active.tobytes()}
    trace = []
    best = None
    for k in range(1, config.max_iter + 1):
        U, P_I = solver.solve(system, ~active)
        P = np.zeros(n_p)
        P[~active] = P_I
        Lam = recover_multiplier(system, U, active)
        new_active = _active_mask(Lam, P, c)
        defect = _complementarity_defect(P, Lam)
        record = {"k": k, "active": int(active.sum()), "changed": int(np.count_nonzero(new_active != active)),
                  "defect": defect}
        trace.append(record)
        log.debug("pdas iteration", extra={"pdas": record})
        if best is None or defect < best[0]:
            best = (defect, U, P, Lam, active, k)
        if np.array_equal(new_active, active):
            return PdasSolution(U, P, Lam, active, k, True, trace=trace)
        key = new_active.tobytes()
        if key in seen:
            log.warning("active set cycle detected after %d iterations", k)
            _, U, P, Lam, act, _ = best
            return PdasSolution(U, P, Lam, act, k, False, cycled=True, trace=trace)
        seen.add(key)
        active = new_active
    log.warning("active-set iteration did not converge in %d iterations", config.max_iter)
    _, U, P, Lam, act, _ = best
    return PdasSolution(U, P, Lam, act, config.max_iter, False, trace=trace)


def brute_force_lcp(system: SaddleLcpSystem, tol=1e-10, max_np=15) -> PdasSolution:
    """Enumerate every active set with dense solves (test oracle, small systems)."""
    n_p = system.n_p
    if n_p > max_np:
        raise ValueError(f"enumeration limited to {max_np} pressure unknowns, got {n_p}")
    M = system.M.toarray()
    B = system.B.toarray()
    n_u = system.n_u
    found = []
    for bits in itertools.product((False, True), repeat=n_p):
        active = np.array(bits, dtype=bool)
        inactive = np.flatnonzero(~active)
        m = inactive.size
        K = np.zeros((n_u + m, n_u + m))
        K[:n_u, :n_u] = M
        K[:n_u, n_u:] = B[:, inactive]
        K[n_u:, :n_u] = B[:, inactive].T
        rhs = np.concatenate([system.F_v, system.F_q[inactive]])
        try:
            x = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            continue
        U = x[:n_u]
        P = np.zeros(n_p)
        P[inactive] = x[n_u:]
        Lam = np.zeros(n_p)
        Lam[active] = (system.F_q[active] - B[:, active].T @ U) / system.D[active]
        scale = max(1.0, np.max(np.abs(P), initial=0.0), np.max(np.abs(Lam), initial=0.0))
        if np.all(P[~active] >= -tol * scale) and np.all(Lam[active] >= -tol * scale):
            found.append((int(active.sum()), active, U, P, Lam))
    if not found:
        raise NoFeasibleSet("no active set gives a sign-feasible solution")
    found.sort(key=lambda r: r[0])
    _, active, U, P, Lam = found[0]
    for _, a2, U2, P2, L2 in found[1:]:
        ref = max(1.0, np.max(np.abs(U)), np.max(np.abs(P), initial=0.0), np.max(np.abs(Lam), initial=0.0))
        diff = max(np.max(np.abs(U2 - U)), np.max(np.abs(P2 - P), initial=0.0), np.max(np.abs(L2 - Lam), initial=0.0))
        if diff > 1e-8 * ref:
            raise AmbiguousSolution(f"feasible sets with {active.sum()} and {a2.sum()} active DOFs disagree by {diff:.3e}")
    return PdasSolution(U, P, Lam, active, len(found), True)

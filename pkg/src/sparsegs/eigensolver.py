"""Lowest-eigenpair solvers: Lanczos with full reorthogonalization, plus a
dense LAPACK path for small blocks (which doubles as the oracle)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

DENSE_CAP = 4096
DEGENERACY_REL_TOL = 1e-10


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    converged: bool = True
    degenerate: bool = False


def _matvec(m):
    if isinstance(m, np.ndarray):
        return lambda v: m @ v, m.shape[0]
    if sp.issparse(m):
        return lambda v: m @ v, m.shape[0]
    # ProjectedMatrix and friends
    mat = m.rows
    return lambda v: mat @ v, m.dim


def dense_lowest(m) -> EigResult:
    """Exact lowest eigenpair by full Hermitian diagonalization."""
    if hasattr(m, "rows"):
        m = m.rows
    if sp.issparse(m):
        m = m.toarray()
    m = np.asarray(m)
    if m.shape[0] > DENSE_CAP:
        raise ValueError(f"dense path capped at {DENSE_CAP}, got dim {m.shape[0]}")
    vals, vecs = np.linalg.eigh(m)
    v = vecs[:, 0]
    resid = float(np.linalg.norm(m @ v - vals[0] * v))
    scale = max(1.0, float(np.abs(vals).max()))
    degen = m.shape[0] > 1 and (vals[1] - vals[0]) < DEGENERACY_REL_TOL * scale
    return EigResult(float(vals[0]), v, 1, resid, True, degen)


def lanczos_lowest(
    m,
    tol: float = 1e-10,
    max_iter: int = 300,
    seed: int = 0,
) -> EigResult:
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    The start vector is drawn from the seeded generator, so identical
    inputs and seed give identical iterates.  Every stored basis vector
    participates in reorthogonalization (two passes); basis sizes here
    stay small enough that robustness is worth more than speed.  On
    non-convergence the best Ritz pair so far is returned flagged.
    """
    mv, dim = _matvec(m)
    if dim == 0:
        raise ValueError("empty matrix")
    if dim == 1:
        e0 = complex(mv(np.ones(1, dtype=complex))[0])
        return EigResult(float(e0.real), np.ones(1, dtype=complex), 0, 0.0)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 0j
    v /= np.linalg.norm(v)

    max_iter = int(min(max_iter, dim))
    V = np.zeros((max_iter, dim), dtype=complex)
    alphas: list[float] = []
    betas: list[float] = []
    V[0] = v
    theta = None
    y = None

    for j in range(max_iter):
        w = mv(V[j])
        alpha = float(np.vdot(V[j], w).real)
        alphas.append(alpha)
        w = w - alpha * V[j]
        if j > 0:
            w = w - betas[-1] * V[j - 1]
        # full reorthogonalization, two passes
        for _ in range(2):
            w = w - V[: j + 1].T @ (V[: j + 1].conj() @ w)
        beta = float(np.linalg.norm(w))

        T = np.diag(alphas)
        if len(betas):
            off = np.array(betas)
            T += np.diag(off, 1) + np.diag(off, -1)
        tvals, tvecs = np.linalg.eigh(T)
        theta = float(tvals[0])
        y = tvecs[:, 0]
        resid_est = beta * abs(y[-1])

        if resid_est <= tol * (1.0 + abs(theta)) or beta <= 1e-14 or j == max_iter - 1:
            vec = (V[: j + 1].T @ y).astype(complex)
            nrm = np.linalg.norm(vec)
            if nrm > 0:
                vec /= nrm
            true_resid = float(np.linalg.norm(mv(vec) - theta * vec))
            converged = true_resid <= tol * (1.0 + abs(theta)) or beta <= 1e-14
            scale = max(1.0, float(np.abs(tvals).max()))
            degen = len(tvals) > 1 and (tvals[1] - tvals[0]) < DEGENERACY_REL_TOL * scale
            return EigResult(theta, vec, j + 1, true_resid, converged, degen)

        betas.append(beta)
        V[j + 1] = w / beta

    raise AssertionError("unreachable")


def lowest_eigenpair(m, tol: float = 1e-10, seed: int = 0) -> EigResult:
    """Dense path for small blocks, Lanczos beyond."""
    dim = m.dim if hasattr(m, "dim") else m.shape[0]
    if dim <= DENSE_CAP:
        return dense_lowest(m)
    return lanczos_lowest(m, tol=tol, seed=seed, max_iter=max(300, 2 * int(np.sqrt(dim))))

"""Dense linear algebra used by the projection fitters.

`symmetric_eig` and `generalized_eig` wrap library eigensolvers behind a
fixed contract (descending eigenvalues, checked symmetry, B-orthonormal
generalized eigenvectors). `nnls` is a hand-written Lawson-Hanson active-set
solver; `nnls_rows` adds a vectorized fast path for batches.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

#: Absolute scale for the symmetry check in symmetric_eig.
SYMMETRY_TOL = 1e-10

#: KKT tolerance for the active-set solver: a solution is accepted when every
#: inactive coordinate has gradient <= KKT_TOL * max(1, |A^T b|_inf).
KKT_TOL = 1e-8


def symmetric_eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    orthonormal, ordered to match the descending eigenvalues. Raises if the
    input is not square or not symmetric within SYMMETRY_TOL (relative to
    the largest entry magnitude, floored at 1).
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix must be finite")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    sym = (a + a.T) / 2.0
    evals, evecs = np.linalg.eigh(sym)
    return evals[::-1].copy(), evecs[:, ::-1].copy()


def generalized_eig(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve A v = w B v for symmetric A and symmetric positive-definite B.

    Returns (eigenvalues descending, eigenvectors in columns) with the
    eigenvectors B-orthonormal: V^T B V = I. Implemented by Cholesky
    whitening: with B = L L^T, the problem becomes the ordinary symmetric
    problem (L^-1 A L^-T) y = w y and v = L^-T y.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    try:
        chol = np.linalg.cholesky(b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("B must be symmetric positive definite") from exc
    # M = L^-1 A L^-T via two triangular solves.
    half = np.linalg.solve(chol, a)
    whitened = np.linalg.solve(chol, half.T).T
    evals, y = symmetric_eig(whitened)
    vecs = np.linalg.solve(chol.T, y)
    return evals, vecs


def nnls(
    basis: np.ndarray,
    target: np.ndarray,
    max_iter: Optional[int] = None,
) -> np.ndarray:
    """Non-negative least squares: argmin_{z >= 0} || target - z @ basis ||^2.

    `basis` is (k, d), `target` is (d,), the result z is (k,). Lawson-Hanson
    active-set iteration: grow the passive set by the most violated gradient
    coordinate, solve the unconstrained subproblem on it, and step back along
    the segment to the feasible region when the subproblem goes negative.
    Terminates when the KKT conditions hold to KKT_TOL.
    """
    v = np.asarray(basis, dtype=np.float64)
    c = np.asarray(target, dtype=np.float64)
    if v.ndim != 2 or c.ndim != 1 or v.shape[1] != c.shape[0]:
        raise ValueError(f"incompatible shapes {v.shape} and {c.shape}")
    k = v.shape[0]
    if max_iter is None:
        max_iter = 3 * k + 30
    atb = v @ c
    gram = v @ v.T
    tol = KKT_TOL * max(1.0, float(np.max(np.abs(atb))) if k else 1.0)

    z = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    # Anti-cycling: coordinates that entered the passive set but were clipped
    # straight back out stay blocked until z actually moves.
    blocked = np.zeros(k, dtype=bool)

    for _ in range(max_iter):
        grad = atb - gram @ z
        candidates = ~passive & ~blocked & (grad > tol)
        if not np.any(candidates):
            return z
        j = int(np.argmax(np.where(candidates, grad, -np.inf)))
        passive[j] = True
        changed = False
        # Inner loop: solve on the passive set, clip back while infeasible.
        while np.any(passive):
            idx = np.flatnonzero(passive)
            sub, *_ = np.linalg.lstsq(v[idx].T, c, rcond=None)
            if np.all(sub > 0):
                z = np.zeros(k)
                z[idx] = sub
                changed = True
                break
            cur = z[idx]
            bad = sub <= 0
            denom = cur - sub  # >= 0 wherever bad; == 0 only when cur == sub == 0
            with np.errstate(divide="ignore", invalid="ignore"):
                raw = cur / denom
            steps = np.where(bad, np.where(denom > 0, raw, 0.0), np.inf)
            alpha = float(np.min(steps))
            if alpha > 0:
                changed = True
            new_vals = cur + alpha * (sub - cur)
            new_vals[steps <= alpha] = 0.0  # binding coordinates hit zero exactly
            z = np.zeros(k)
            z[idx] = np.maximum(new_vals, 0.0)
            drop = idx[z[idx] <= 0]
            z[drop] = 0.0
            passive[drop] = False
        if changed:
            blocked[:] = False
        else:
            blocked[j] = True
    raise RuntimeError("nnls: iteration cap exceeded without reaching KKT conditions")


def nnls_rows(basis: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Row-wise NNLS: solve nnls(basis, row) for every row of `targets`.

    Fast path: the unconstrained normal-equations solution for all rows at
    once; any row whose solution is already non-negative is optimal as-is.
    Remaining rows fall back to the active-set solver.
    """
    v = np.asarray(basis, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim != 2 or v.ndim != 2 or t.shape[1] != v.shape[1]:
        raise ValueError(f"incompatible shapes {v.shape} and {t.shape}")
    n, k = t.shape[0], v.shape[0]
    out = np.empty((n, k))
    gram = v @ v.T
    rhs = t @ v.T
    solved = np.zeros(n, dtype=bool)
    try:
        candidate = np.linalg.solve(gram, rhs.T).T
    except np.linalg.LinAlgError:
        candidate = None
    if candidate is not None:
        ok = np.all(candidate >= 0, axis=1)
        out[ok] = candidate[ok]
        solved[ok] = True
    for i in np.flatnonzero(~solved):
        out[i] = nnls(v, t[i])
    return out

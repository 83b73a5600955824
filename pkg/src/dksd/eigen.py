"""Dense symmetric eigenvalues.

Two interchangeable backends sit behind :func:`symmetric_eigenvalues`: LAPACK
(``numpy.linalg.eigvalsh``, the default) and a cyclic Jacobi rotation solver
kept as a dependency-free reference.
"""

import numpy as np

from .errors import NotConverged

SYMMETRY_TOL = 1e-8


def _symmetrized(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if M.size and np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def jacobi_eigh(M, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Sweeps over all ``(p, q)`` pairs until the off-diagonal Frobenius norm
    drops below ``tol * ||M||_F``. Returns ``(eigenvalues, eigenvectors)``
    sorted by descending eigenvalue.
    """
    A = _symmetrized(M).copy()
    n = A.shape[0]
    V = np.eye(n)
    fro = np.linalg.norm(A)
    if n < 2 or fro == 0.0:
        w = np.diag(A).copy()
        order = np.argsort(-w, kind="stable")
        return w[order], V[:, order]
    threshold = tol * fro

    off_mask = ~np.eye(n, dtype=bool)

    def off_norm():
        return np.sqrt(np.sum(A[off_mask] ** 2))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q]
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :]
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        if off_norm() > threshold:
            raise NotConverged(f"Jacobi did not converge in {max_sweeps} sweeps")

    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    M = 0.5 * (np.asarray(M) + np.asarray(M).T)
    resid = np.linalg.norm(M @ V - V * w, axis=0) / fro
    if np.any(resid > 1e-8):
        raise NotConverged(f"Jacobi residual {resid.max():.3g} exceeds 1e-8")
    return w, V


def symmetric_eigenvalues(M, method="lapack"):
    """All eigenvalues of a symmetric matrix, in descending order.

    The input is symmetrized first; asymmetry above 1e-8 (relative to the
    largest entry) is an error.
    """
    if method == "jacobi":
        return jacobi_eigh(M)[0]
    if method != "lapack":
        raise ValueError(f"unknown eigen method {method!r}")
    return np.linalg.eigvalsh(_symmetrized(M))[::-1]

"""Dense linear-algebra helpers shared across the package.

Every subspace question (membership, rank, kernel, equality) is reduced to a
singular-value decision with a relative threshold, so verdicts do not depend
on the conditioning of whatever basis the caller happens to hold.
Orthonormalisation is modified Gram-Schmidt with one re-orthogonalisation
pass, which keeps witness vectors reproducible run to run.
"""

from __future__ import annotations

import numpy as np

# Relative singular-value threshold for all rank/kernel decisions.
RANK_RTOL = 1e-9
# Residual below which a span test counts as "inside".
SPAN_TOL = 1e-8
# Residual a negative verdict must reach before it is reported as robust.
WITNESS_FLOOR = 1e-6


class IndeterminateVerdict(RuntimeError):
    """A residual fell between rounding noise and a robust witness.

    The caller should re-run with adjusted tolerances instead of trusting
    either answer.
    """


def as_matrix(rows) -> np.ndarray:
    a = np.atleast_2d(np.asarray(rows, dtype=float))
    return a


def gram_dot(x: np.ndarray, y: np.ndarray, gram: np.ndarray | None = None) -> float:
    if gram is None:
        return float(np.dot(x, y))
    return float(x @ gram @ y)


def gram_norm(x: np.ndarray, gram: np.ndarray | None = None) -> float:
    return float(np.sqrt(max(gram_dot(x, x, gram), 0.0)))


def orthonormalize(rows, gram: np.ndarray | None = None, rtol: float = RANK_RTOL) -> np.ndarray:
    """Modified Gram-Schmidt with a re-orthogonalisation pass.

    Returns a (k, n) array of rows orthonormal with respect to ``gram``
    (standard dot product when omitted); near-dependent inputs are dropped
    at the relative threshold ``rtol``.
    """
    a = as_matrix(rows)
    if a.size == 0:
        return a.reshape(0, a.shape[1] if a.ndim == 2 else 0)
    scale = max(gram_norm(v, gram) for v in a)
    if scale == 0.0:
        return np.zeros((0, a.shape[1]))
    out: list[np.ndarray] = []
    for v in a:
        w = v.astype(float).copy()
        for _ in range(2):  # second pass controls cancellation drift
            for q in out:
                w = w - gram_dot(w, q, gram) * q
        nw = gram_norm(w, gram)
        if nw > rtol * scale:
            out.append(w / nw)
    if not out:
        return np.zeros((0, a.shape[1]))
    return np.array(out)


def svd_rank(a: np.ndarray, rtol: float = RANK_RTOL, atol: float = 1e-12) -> int:
    a = as_matrix(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] <= atol:
        return 0
    return int(np.sum(s > max(rtol * s[0], atol)))


def kernel(a: np.ndarray, rtol: float = RANK_RTOL, atol: float = 1e-12) -> np.ndarray:
    """Orthonormal rows spanning the null space of ``a`` (standard metric)."""
    a = as_matrix(a)
    n = a.shape[1]
    if n == 0:
        return np.zeros((0, 0))
    if a.size == 0 or not np.any(a):
        return np.eye(n)
    _, s, vh = np.linalg.svd(a)
    cut = max(rtol * s[0], atol) if s.size else 0.0
    r = int(np.sum(s > cut))
    return vh[r:].copy()


def complement(rows, ambient_dim: int, gram: np.ndarray | None = None,
               rtol: float = RANK_RTOL) -> np.ndarray:
    """Gram-orthonormal basis of the orthogonal complement of ``rows``."""
    base = orthonormalize(rows, gram, rtol) if np.size(rows) else np.zeros((0, ambient_dim))
    out: list[np.ndarray] = []
    for i in range(ambient_dim):
        v = np.zeros(ambient_dim)
        v[i] = 1.0
        w = v
        for _ in range(2):
            for q in base:
                w = w - gram_dot(w, q, gram) * q
            for q in out:
                w = w - gram_dot(w, q, gram) * q
        nw = gram_norm(w, gram)
        if nw > 1e-7:
            out.append(w / nw)
        if len(out) + base.shape[0] == ambient_dim:
            break
    return np.array(out) if out else np.zeros((0, ambient_dim))


def project_span(basis_rows: np.ndarray, x: np.ndarray,
                 gram: np.ndarray | None = None) -> np.ndarray:
    """Projection of ``x`` onto the span of gram-orthonormal ``basis_rows``."""
    b = as_matrix(basis_rows)
    if b.shape[0] == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    coeff = b @ (x if gram is None else gram @ x)
    return coeff @ b


def span_residual(basis_rows: np.ndarray, x: np.ndarray,
                  gram: np.ndarray | None = None) -> float:
    """Distance from ``x`` to the span of gram-orthonormal ``basis_rows``."""
    return gram_norm(np.asarray(x, float) - project_span(basis_rows, x, gram), gram)


def principal_angles(a_rows: np.ndarray, b_rows: np.ndarray,
                     gram: np.ndarray | None = None) -> np.ndarray:
    """Principal angles between two subspaces given by gram-orthonormal rows."""
    a = as_matrix(a_rows)
    b = as_matrix(b_rows)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros(0)
    m = a @ (b.T if gram is None else gram @ b.T)
    s = np.linalg.svd(m, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


def subspaces_equal(a_rows: np.ndarray, b_rows: np.ndarray,
                    gram: np.ndarray | None = None, tol: float = 1e-8) -> bool:
    a = as_matrix(a_rows)
    b = as_matrix(b_rows)
    if a.shape[0] != b.shape[0]:
        return False
    if a.shape[0] == 0:
        return True
    ang = principal_angles(a, b, gram)
    return bool(np.max(ang) < tol)


def robust_failure(residual: float, tol: float = SPAN_TOL,
                   floor: float = WITNESS_FLOOR, what: str = "span test") -> bool:
    """True when ``residual`` is a robust failure, False when it passes.

    Residuals between ``tol`` and ``floor`` are neither rounding noise nor a
    trustworthy witness; those raise IndeterminateVerdict.
    """
    if residual < tol:
        return False
    if residual >= floor:
        return True
    raise IndeterminateVerdict(
        f"{what}: residual {residual:.3e} lies between the pass tolerance "
        f"{tol:.1e} and the witness floor {floor:.1e}; adjust tolerances"
    )

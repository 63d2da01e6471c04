"""Maximising ``||Sigma^{-1/2} psi_f(s,a)||_2`` over functions ``f: S -> [0, c]``.

The objective is a convex function of ``f`` so its maximum over the box is
attained at a vertex ``{0, c}^S``.  Small state spaces are solved exactly by
enumerating vertices; larger ones use sign-vector ascent on the l1 surrogate,
whose value is within a factor ``sqrt(d)`` of the l2 optimum when it reaches
the l1 optimum.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ArgumentError

EXACT_CAP = 15
REFRESH_EVERY = 64


@dataclass(frozen=True, eq=False)
class MaximizerResult:
    f_star: np.ndarray
    objective_l2: float
    method_tag: str
    l1_trace: tuple = field(default=())


@lru_cache(maxsize=None)
def unit_vertices(S):
    """All vertices of [0,1]^S as rows; row ``v`` has bit ``j`` of ``v`` in column ``j``."""
    v = np.arange(2**S, dtype=np.int64)
    out = ((v[:, None] >> np.arange(S)) & 1).astype(np.float64)
    out.setflags(write=False)
    return out


def maximize_exact(M, inv_sqrt, box_hi, cap=EXACT_CAP):
    M = np.asarray(M, dtype=np.float64)
    S = M.shape[1]
    if S > cap:
        raise ArgumentError(
            f"S={S} exceeds the exact-enumeration cap {cap}; use maximize_l1_ascent instead"
        )
    if box_hi < 0:
        raise ArgumentError("box_hi must be >= 0")
    Y = np.asarray(inv_sqrt) @ M
    F = unit_vertices(S)
    norms = np.linalg.norm(F @ Y.T, axis=1)
    best = int(np.argmax(norms))
    return MaximizerResult(box_hi * F[best], box_hi * float(norms[best]), "exact_vertex")


def _ascent_from(Y, signs):
    """Alternate between the box maximiser of ``signs^T Y f`` and the signs of ``Y f``."""
    trace = []
    seen = set()
    while True:
        f = ((signs @ Y) > 0.0).astype(np.float64)
        y = Y @ f
        trace.append(float(np.abs(y).sum()))
        new = np.where(y >= 0.0, 1.0, -1.0)
        key = new.tobytes()
        if np.array_equal(new, signs) or key in seen:
            return f, trace
        seen.add(signs.tobytes())
        signs = new


def maximize_l1_ascent(M, inv_sqrt, box_hi, restarts, rng):
    if restarts < 1:
        raise ArgumentError("restarts must be >= 1")
    if box_hi < 0:
        raise ArgumentError("box_hi must be >= 0")
    Y = np.asarray(inv_sqrt) @ np.asarray(M, dtype=np.float64)
    d = Y.shape[0]
    # first start: signs of Y @ 1; the rest are uniform sign vectors
    starts = [np.where(Y.sum(axis=1) >= 0.0, 1.0, -1.0)]
    starts += list(np.where(rng.random((restarts - 1, d)) < 0.5, -1.0, 1.0))
    best_f, best_val, best_trace = None, -1.0, ()
    for signs in starts:
        f, trace = _ascent_from(Y, signs)
        val = float(np.linalg.norm(Y @ f))
        if val > best_val:
            best_f, best_val, best_trace = f, val, tuple(trace)
    return MaximizerResult(box_hi * best_f, box_hi * best_val, "l1_ascent", best_trace)


def max_uncertainty_all(psi_mats, inv_sqrt, method="auto", restarts=8, rng=None, cap=EXACT_CAP):
    """Unit-box maximiser for every (s, a) at once.

    ``psi_mats`` has shape (P, A, d, S) for any P pairs of rows.  Returns ``(m, f)`` where ``m[s, a] = max_{f in [0,1]^S} ||inv_sqrt psi_f(s,a)||`` and
    ``f[s, a]`` is the maximising vertex.  Scaling the box to ``[0, c]`` scales both by ``c``.
    """
    P, A, d, S = psi_mats.shape
    if method == "auto":
        method = "exact" if S <= cap else "l1"
    if method == "exact":
        if S > cap:
            raise ArgumentError(f"S={S} exceeds the exact-enumeration cap {cap}")
        Y = inv_sqrt @ psi_mats  # (P, A, d, S)
        F = unit_vertices(S)
        norms = np.linalg.norm(Y @ F.T, axis=2)  # (P, A, 2^S)
        best = np.argmax(norms, axis=2)
        m = np.take_along_axis(norms, best[..., None], axis=2)[..., 0]
        return m, F[best]
    if method != "l1":
        raise ArgumentError(f"unknown maximizer method {method!r}")
    if rng is None:
        raise ArgumentError("l1 ascent needs a random generator")
    m = np.empty((P, A))
    f = np.empty((P, A, S))
    for s in range(P):
        for a in range(A):
            res = maximize_l1_ascent(psi_mats[s, a], inv_sqrt, 1.0, restarts, rng)
            m[s, a] = res.objective_l2
            f[s, a] = res.f_star
    return m, f


class CovarianceView:
    """Running Gram matrix ``Sigma`` with a maintained inverse.

    The inverse follows the Sherman-Morrison identity and is recomputed from
    ``Sigma`` every ``REFRESH_EVERY`` updates to bound drift.  ``inv_sqrt`` is
    refreshed lazily by a symmetric eigendecomposition.
    """

    def __init__(self, sigma, sigma_inv=None):
        self.sigma = np.array(sigma, dtype=np.float64)
        self.sigma_inv = np.linalg.inv(self.sigma) if sigma_inv is None else np.array(sigma_inv, dtype=np.float64)
        self.update_count = 0
        self._inv_sqrt = None

    @classmethod
    def identity(cls, d, lam):
        return cls(lam * np.eye(d), np.eye(d) / lam)

    @property
    def dim(self):
        return self.sigma.shape[0]

    @property
    def inv_sqrt(self):
        if self._inv_sqrt is None:
            w, U = np.linalg.eigh(self.sigma)
            self._inv_sqrt = (U / np.sqrt(w)) @ U.T
        return self._inv_sqrt

    def update(self, x):
        """In-place rank-one update ``Sigma += x x^T``."""
        x = np.asarray(x, dtype=np.float64)
        if not np.any(x):
            return self
        self.sigma += np.outer(x, x)
        self.update_count += 1
        if self.update_count % REFRESH_EVERY == 0:
            self.sigma_inv = np.linalg.inv(self.sigma)
        else:
            z = self.sigma_inv @ x
            denom = 1.0 + x @ z
            assert denom > 0.0, "covariance update lost positive definiteness"
            self.sigma_inv -= np.outer(z, z) / denom
        self._inv_sqrt = None
        return self

    def norm(self, x):
        """``||x||_{Sigma^{-1}}``."""
        return float(np.sqrt(max(x @ self.sigma_inv @ x, 0.0)))

    def copy(self):
        out = CovarianceView(self.sigma, self.sigma_inv)
        out.update_count = self.update_count
        return out


def covariance_rank_one_update(view, x):
    """Functional form of :meth:`CovarianceView.update`; ``view`` is left untouched."""
    return view.copy().update(x)

"""The von Mises-Fisher kernel, the spherical Stein operator and the Stein kernel.

For the kernel ``k(x, y) = exp(kappa x.y)`` every angular derivative reduces,
through the chain rule, to inner products between points and tangent rows
``e_i = dx/dt_i``:

    d k / d t_i        = kappa (e_i . y) k
    d2 k / d t_i d s_i = [kappa (e_i . f_i) + kappa^2 (e_i . y)(x . f_i)] k

where ``f_i`` are the tangent rows at ``y`` (angles ``s``). The Stein kernel
combines these with the augmented score ``d/dt log(q J)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PoleSingularity
from .geometry import grad_log_jacobian, tangent_rows, to_cartesian, to_spherical
from .models import DirectionalModel

# Target number of float64 elements per temporary when building Gram blocks.
_BLOCK_ELEMENTS = 1 << 21


def _inner(a, b):
    # Explicit left-to-right accumulation over the last axis: every element
    # sees the same operation sequence whatever the batch shape, so batched
    # and single-pair evaluations agree bitwise.
    a, b = np.broadcast_arrays(a, b)
    acc = a[..., 0] * b[..., 0]
    for k in range(1, a.shape[-1]):
        acc = acc + a[..., k] * b[..., k]
    return acc


def kernel_eval(kappa, x, y):
    """``exp(kappa x.y)`` for broadcastable arrays of points."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError("points have different dimensions")
    return np.exp(kappa * _inner(x, y))


def kernel_grad_theta(kappa, theta, theta_t, side="first"):
    """Angular gradient of the kernel with respect to one of its arguments."""
    theta = np.asarray(theta, dtype=np.float64)
    theta_t = np.asarray(theta_t, dtype=np.float64)
    x, xt = to_cartesian(theta), to_cartesian(theta_t)
    k = kernel_eval(kappa, x, xt)
    if side == "first":
        proj = _inner(tangent_rows(theta), xt[..., None, :])
    elif side == "second":
        proj = _inner(tangent_rows(theta_t), x[..., None, :])
    else:
        raise ValueError(f"side must be 'first' or 'second', got {side!r}")
    return kappa * proj * k[..., None]


def kernel_cross_hessian_trace_terms(kappa, theta, theta_t):
    """Per-coordinate mixed derivatives ``d2 k / d t_i d s_i``, shape ``(..., d-1)``."""
    theta = np.asarray(theta, dtype=np.float64)
    theta_t = np.asarray(theta_t, dtype=np.float64)
    x, xt = to_cartesian(theta), to_cartesian(theta_t)
    ra, rb = tangent_rows(theta), tangent_rows(theta_t)
    k = kernel_eval(kappa, x, xt)
    ta = _inner(ra, xt[..., None, :])
    tb = _inner(rb, x[..., None, :])
    return (kappa * _inner(ra, rb) + kappa * kappa * ta * tb) * k[..., None]


def augmented_score(model, theta):
    """``d/dt log(q J)``: the model score plus the log-volume gradient."""
    return model.score_spherical(theta) + grad_log_jacobian(theta)


def stein_op_apply(model, f, theta):
    """Apply the spherical Stein operator to ``f`` at angles ``theta``.

    ``f(theta)`` must return ``(values, partials)``, both shaped
    ``(..., d-1)``, where ``partials[..., i]`` is ``d f_i / d t_i``. Returns
    ``sum_i partials_i + values_i * s_i`` with ``s`` the augmented score.
    """
    theta = np.asarray(theta, dtype=np.float64)
    values, partials = f(theta)
    s = augmented_score(model, theta)
    return np.sum(partials + values * s, axis=-1)


@dataclass(frozen=True)
class PreparedSamples:
    """Per-sample quantities reused by every Gram entry."""

    theta: np.ndarray
    x: np.ndarray
    rows: np.ndarray
    score: np.ndarray

    @property
    def n(self):
        return self.x.shape[0]


def _stein_parts(xa, ra, sa, xb, rb, sb):
    """Kernel-free pieces of the Stein kernel for broadcastable (point, rows, score) triples.

    Returns ``(x.y, s.s, cross, trace, curvature)``; :func:`_combine` weights
    them for a given concentration. Each piece is symmetric in the two
    arguments down to the last bit.
    """
    g = _inner(xa, xb)
    ss = _inner(sa, sb)
    ta = _inner(ra, xb[..., None, :])  # e_i(a) . x_b
    tb = _inner(rb, xa[..., None, :])  # x_a . e_i(b)
    cross = _inner(sa, tb) + _inner(sb, ta)
    ee = _inner(ra, rb).sum(axis=-1)
    cc = _inner(ta, tb)
    return g, ss, cross, ee, cc


def _combine(kappa, parts):
    g, ss, cross, ee, cc = parts
    return np.exp(kappa * g) * (ss + kappa * cross + kappa * ee + (kappa * kappa) * cc)


def _stein_pairs(kappa, xa, ra, sa, xb, rb, sb):
    return _combine(kappa, _stein_parts(xa, ra, sa, xb, rb, sb))


@dataclass(frozen=True)
class SteinKernel:
    """Stein kernel ``h_q`` for the null ``model`` and vMF kernel concentration ``kappa``."""

    kappa: float
    model: DirectionalModel

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kernel kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def d(self):
        return self.model.d

    def prepare_theta(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape[-1] != self.d - 1:
            raise DimensionError(f"expected {self.d - 1} angles, got shape {theta.shape}")
        x = to_cartesian(theta)
        rows = tangent_rows(theta)
        score = self.model.score_from_rows(x, rows) + grad_log_jacobian(theta)
        return PreparedSamples(theta, x, rows, score)

    def prepare(self, samples):
        """Convert unit vectors ``(n, d)`` to cached angles, tangent rows and scores."""
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != self.d:
            raise DimensionError(f"expected samples of shape (n, {self.d}), got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        theta = to_spherical(samples)
        try:
            return self.prepare_theta(theta)
        except PoleSingularity:
            bad = np.nonzero(np.any(np.abs(np.sin(theta[:, :-1])) < 1e-8, axis=1))[0]
            index = int(bad[0]) if bad.size else None
            raise PoleSingularity(f"sample {index} sits on a chart pole", index) from None

    def h(self, theta, theta_t):
        """``h_q`` at (broadcastable) angle arrays."""
        a = self.prepare_theta(theta)
        b = self.prepare_theta(theta_t)
        return _stein_pairs(self.kappa, a.x, a.rows, a.score, b.x, b.rows, b.score)

    def gram_prepared(self, p):
        """Gram matrix from :class:`PreparedSamples`; upper triangle, then mirrored."""
        return gram_path(p, [self.kappa])[0]

    def gram(self, samples):
        return self.gram_prepared(self.prepare(samples))


def gram_path(p, kappas):
    """Stein Gram matrices of :class:`PreparedSamples` ``p`` for several concentrations.

    The kernel-free pair terms are computed once and shared, which makes a
    grid search over concentrations cost little more than a single matrix.
    """
    n, d = p.n, p.x.shape[1]
    out = [np.empty((n, n)) for _ in kappas]
    block = max(1, _BLOCK_ELEMENTS // max(1, n * (d - 1) * d))
    for r0 in range(0, n, block):
        r1 = min(n, r0 + block)
        parts = _stein_parts(
            p.x[r0:r1, None, :],
            p.rows[r0:r1, None, :, :],
            p.score[r0:r1, None, :],
            p.x[None, r0:, :],
            p.rows[None, r0:, :, :],
            p.score[None, r0:, :],
        )
        for H, kappa in zip(out, kappas):
            H[r0:r1, r0:] = _combine(float(kappa), parts)
    lower = np.tril_indices(n, -1)
    for H in out:
        H[lower] = H.T[lower]
    return out


def h_q(kernel, theta, theta_t):
    return kernel.h(theta, theta_t)


def stein_gram(kernel, samples):
    """Stein Gram matrix ``H_ij = h_q(x_i, x_j)`` for unit vectors ``(n, d)``."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("stein_gram needs at least two samples")
    return kernel.gram(samples)

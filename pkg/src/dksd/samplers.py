"""Exact samplers for the uniform, von Mises-Fisher and Bingham-type laws."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import RejectionStall, TuningFailure, ValidationError
from .models import FisherBingham, Uniform, VonMisesFisher

MAX_CONSECUTIVE_REJECTIONS = 10**6


@dataclass(frozen=True)
class SamplerReport:
    n_requested: int
    n_accepted: int
    n_proposed: int

    @property
    def acceptance_rate(self):
        return self.n_accepted / self.n_proposed if self.n_proposed else 1.0


def sample_uniform_sphere(d, n, rng):
    """``n`` uniform points on S^(d-1): normalized standard Gaussian vectors."""
    if d < 2 or n < 1:
        raise ValueError("need d >= 2 and n >= 1")
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


class _Tally:
    """Bookkeeping shared by the batched rejection loops."""

    def __init__(self, n):
        self.n = n
        self.proposed = 0
        self.accepted = 0
        self.since_accept = 0

    def update(self, accept_mask):
        need = self.n - self.accepted
        hits = np.nonzero(accept_mask)[0]
        if hits.size > need:
            # proposals after the last needed acceptance were never required
            accept_mask = accept_mask[:hits[need - 1] + 1]
            hits = hits[:need]
        self.proposed += accept_mask.size
        if hits.size:
            self.since_accept = accept_mask.size - 1 - hits[-1]
        else:
            self.since_accept += accept_mask.size
        if self.since_accept >= MAX_CONSECUTIVE_REJECTIONS:
            raise RejectionStall(f"{self.since_accept} consecutive proposals rejected")
        self.accepted += hits.size
        return hits.size

    def report(self):
        return SamplerReport(self.n, self.accepted, self.proposed)


def _batch_size(remaining, rate_guess):
    return int(min(max(64, 1.2 * remaining / max(rate_guess, 1e-3) + 16), 200_000))


def householder_to(mu, x):
    """Reflect rows of ``x`` by the Householder map sending e_1 to ``mu``."""
    u = -np.asarray(mu, dtype=np.float64).copy()
    u[0] += 1.0
    uu = u @ u
    if uu < 1e-300:
        return x
    return x - np.outer(x @ u, (2.0 / uu) * u)


def _wood_cosines(kappa, d, n, rng):
    # Wood (1994): rejection sampling for w = mu.x
    m = d - 1.0
    b = m / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + m * m))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(1.0 - x0 * x0)
    tally = _Tally(n)
    out = np.empty(n)
    rate = 0.5
    while tally.accepted < n:
        size = _batch_size(n - tally.accepted, rate)
        z = rng.beta(m / 2.0, m / 2.0, size)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(size)
        ok = kappa * w + m * np.log1p(-x0 * w) - c >= np.log(u)
        start = tally.accepted
        take = tally.update(ok)
        out[start:start + take] = w[ok][:take]
        rate = max(tally.accepted / tally.proposed, 1e-3)
    return out, tally.report()


def sample_vmf(mu, kappa, n, rng):
    """Draw ``n`` points from vMF(mu, kappa) with Wood's algorithm.

    Returns ``(samples, SamplerReport)``.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
        raise ValidationError("mu must be a unit vector")
    if not kappa > 0:
        raise ValidationError("kappa must be positive")
    d = mu.size
    w, report = _wood_cosines(float(kappa), d, n, rng)
    v = rng.standard_normal((n, d - 1))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x = np.empty((n, d))
    x[:, 0] = w
    x[:, 1:] = np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * v
    x = householder_to(mu, x)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x, report


def acg_tuning(eigs, tol=1e-12):
    """Solve ``sum_i 1 / (b + 2 l_i) = 1`` for ``b`` by bisection.

    ``eigs`` are the non-negative eigenvalues of the shifted precision matrix.
    """
    eigs = np.asarray(eigs, dtype=np.float64)
    d = eigs.size

    def f(b):
        return np.sum(1.0 / (b + 2.0 * eigs)) - 1.0

    lo, hi = 1e-10, 2.0 * d * (1.0 + np.max(np.abs(eigs)))
    if not (f(lo) > 0 and f(hi) < 0):
        raise TuningFailure("ACG tuning equation has no root in the bisection bracket")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    b = 0.5 * (lo + hi)
    if not 0.0 < b <= d + 1e-9:
        raise TuningFailure(f"ACG tuning root {b} outside (0, d]")
    return b


def sample_fisher_bingham_quadratic(A, n, rng):
    """Draw ``n`` points from ``exp(x'Ax)`` on the sphere.

    Rejection sampling with an angular central Gaussian envelope. ``A`` is
    shifted so its largest eigenvalue is zero, giving ``exp(-x'Mx)`` with
    ``M`` positive semi-definite; the proposal is ACG with precision
    ``I + 2M/b`` and the acceptance probability is

        exp(-x'Mx) (x'Ωx)^(d/2) exp((d-b)/2) (b/d)^(d/2) <= 1.

    Returns ``(samples, SamplerReport)``.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("A must be square")
    if np.max(np.abs(A - A.T)) > 1e-12:
        raise ValidationError("A must be symmetric")
    d = A.shape[0]
    lam, V = np.linalg.eigh(0.5 * (A + A.T))
    M_eigs = np.clip(lam.max() - lam, 0.0, None)
    b = acg_tuning(M_eigs)
    omega = 1.0 + 2.0 * M_eigs / b
    scale = 1.0 / np.sqrt(omega)
    log_bound = 0.5 * (d - b) + 0.5 * d * math.log(b / d)

    tally = _Tally(n)
    out = np.empty((n, d))
    rate = 0.5
    while tally.accepted < n:
        size = _batch_size(n - tally.accepted, rate)
        y = rng.standard_normal((size, d)) * scale  # eigen-coordinates
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        y2 = y * y
        log_ratio = -(y2 @ M_eigs) + 0.5 * d * np.log(y2 @ omega) + log_bound
        ok = np.log(rng.random(size)) < log_ratio
        start = tally.accepted
        take = tally.update(ok)
        out[start:start + take] = y[ok][:take]
        rate = max(tally.accepted / tally.proposed, 1e-3)
    x = out @ V.T
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x, tally.report()


def sample_model(model, n, rng):
    """Draw from any supported model; returns ``(samples, SamplerReport)``."""
    if isinstance(model, Uniform):
        return sample_uniform_sphere(model.d, n, rng), SamplerReport(n, n, n)
    if isinstance(model, VonMisesFisher):
        return sample_vmf(model.mu, model.kappa, n, rng)
    if isinstance(model, FisherBingham):
        if np.any(model.b != 0):
            raise ValidationError("sampling Fisher-Bingham with b != 0 is not supported")
        return sample_fisher_bingham_quadratic(model.A, n, rng)
    raise TypeError(f"no sampler for {type(model).__name__}")

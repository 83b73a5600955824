"""Reference tests: Rayleigh and Kuiper uniformity tests on the circle, and
the kernel MMD two-sample test with a permutation null."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedAlpha
from .gof import DEFAULT_GRID, DEFAULT_LAMBDA, estimate_sigma_u, upper_quantile

#: Asymptotic upper quantiles of Kuiper's V_n under uniformity.
KUIPER_CRITICAL = {0.10: 1.620, 0.05: 1.747, 0.01: 2.001}


@dataclass
class UniformityOutcome:
    statistic: float
    critical_value: float
    reject: bool


@dataclass
class MMDOutcome(UniformityOutcome):
    kappa: float = None
    permutation_draws: np.ndarray = field(default=None, repr=False)


def circle_angles(x):
    """Polar angle in [0, 2 pi) of points on the unit circle."""
    x = np.asarray(x, dtype=np.float64)
    return np.mod(np.arctan2(x[:, 1], x[:, 0]), 2.0 * math.pi)


def rayleigh_test(angles, alpha=0.01):
    """Rayleigh test; ``R_n`` is asymptotically chi-square with 2 d.o.f."""
    angles = np.asarray(angles, dtype=np.float64)
    n = angles.size
    if n < 2:
        raise ValueError("Rayleigh test needs n >= 2")
    stat = (2.0 / n) * (np.sum(np.cos(angles)) ** 2 + np.sum(np.sin(angles)) ** 2)
    crit = -2.0 * math.log(alpha)
    return UniformityOutcome(float(stat), crit, bool(stat > crit))


def kuiper_statistic(angles):
    angles = np.sort(np.asarray(angles, dtype=np.float64))
    n = angles.size
    U = angles / (2.0 * math.pi)
    i = np.arange(1, n + 1)
    d_plus = math.sqrt(n) * np.max(i / n - U)
    d_minus = math.sqrt(n) * np.max(U - (i - 1) / n)
    return float(d_plus + d_minus)


def kuiper_test(angles, alpha=0.01):
    """Kuiper's test with ``V_n = D_n^+ + D_n^-`` measured from angle 0."""
    if alpha not in KUIPER_CRITICAL:
        raise UnsupportedAlpha(f"no Kuiper critical value for alpha={alpha}; "
                               f"available: {sorted(KUIPER_CRITICAL)}")
    if np.asarray(angles).size < 2:
        raise ValueError("Kuiper test needs n >= 2")
    stat = kuiper_statistic(angles)
    crit = KUIPER_CRITICAL[alpha]
    return UniformityOutcome(stat, crit, bool(stat > crit))


def kuiper_asymptotic_sf(v, terms=100):
    """Limiting tail ``P(V > v) = 2 sum_j (4 j^2 v^2 - 1) exp(-2 j^2 v^2)``."""
    j = np.arange(1, terms + 1)
    return float(2.0 * np.sum((4.0 * j**2 * v**2 - 1.0) * np.exp(-2.0 * j**2 * v**2)))


# --- MMD ----------------------------------------------------------------------


def _vmf_gram(kappa, a, b):
    return np.exp(kappa * (a @ b.T))


def mmd_u_statistic(x, y, kappa):
    """Unbiased MMD^2 with the kernel ``exp(kappa x.y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = x.shape[0], y.shape[0]
    kxx = _vmf_gram(kappa, x, x)
    kyy = _vmf_gram(kappa, y, y)
    kxy = _vmf_gram(kappa, x, y)
    return ((kxx.sum() - np.trace(kxx)) / (n * (n - 1))
            + (kyy.sum() - np.trace(kyy)) / (m * (m - 1))
            - 2.0 * kxy.mean())


def mmd_permutation_draws(x, y, kappa, B, rng):
    """MMD_u^2 under ``B`` random relabellings of the pooled sample."""
    z = np.vstack([x, y])
    n, N = x.shape[0], z.shape[0]
    m = N - n
    K = _vmf_gram(kappa, z, z)
    diag = np.diag(K)
    row = K.sum(axis=1)
    total = row.sum()
    labels = np.zeros((int(B), N))
    labels[:, :n] = 1.0
    P = rng.permuted(labels, axis=1)
    KP = P @ K
    aka = np.einsum("ti,ti->t", KP, P)
    ak1 = P @ row
    tra = P @ diag
    trb = diag.sum() - tra
    bkb = total - 2.0 * ak1 + aka
    akb = ak1 - aka
    return (aka - tra) / (n * (n - 1)) + (bkb - trb) / (m * (m - 1)) - 2.0 * akb / (n * m)


def mmd_two_sample_test(x, y, kappa, alpha=0.01, B=1000, rng=None):
    """MMD two-sample test with a label-permutation null."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] < 10 or y.shape[0] < 10:
        raise ValueError("MMD test needs at least 10 samples per group")
    if x.shape[1] != y.shape[1]:
        raise ValueError("samples have different dimensions")
    if rng is None:
        from .rng import make_rng

        rng = make_rng(0)
    stat = float(mmd_u_statistic(x, y, kappa))
    draws = mmd_permutation_draws(x, y, kappa, B, rng)
    thr = upper_quantile(draws, alpha)
    return MMDOutcome(stat, thr, bool(stat > thr), float(kappa), draws)


def mmd_pair_gram(x, y, kappa):
    """``H_ij = k(x_i,x_j) + k(y_i,y_j) - k(x_i,y_j) - k(x_j,y_i)`` on paired rows."""
    m = min(x.shape[0], y.shape[0])
    x, y = x[:m], y[:m]
    kxy = _vmf_gram(kappa, x, y)
    return _vmf_gram(kappa, x, x) + _vmf_gram(kappa, y, y) - kxy - kxy.T


def select_mmd_kappa(x, y, grid=DEFAULT_GRID, lam=DEFAULT_LAMBDA):
    """Grid value maximizing ``MMD_u^2 / (sigma + lam)`` on paired samples."""
    grid = sorted(set(float(k) for k in grid))
    best, best_value = grid[0], -np.inf
    if len(grid) == 1:
        return best
    for kappa in grid:
        H = mmd_pair_gram(x, y, kappa)
        n = H.shape[0]
        value = ((H.sum() - np.trace(H)) / (n * (n - 1))) / (estimate_sigma_u(H) + lam)
        if value > best_value:
            best, best_value = kappa, value
    return best

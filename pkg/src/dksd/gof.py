"""Goodness-of-fit tests built on the directional kernel Stein discrepancy.

Two procedures are provided:

* :func:`test_dksd_u` -- U-statistic ``n * dKSD_u^2`` calibrated by the
  eigen-spectrum approximation ``sum_j c_j (Z_j^2 - 1)`` of its null law.
* :func:`test_dksd_v` -- V-statistic ``dKSD_b^2`` calibrated by a wild
  bootstrap with Markov-chain sign weights.

Both accept a fixed kernel concentration or select one by maximizing
``dKSD_u^2 / (sigma_u + lambda)`` on a held-out split of the data.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import symmetric_eigenvalues
from .kernel import SteinKernel, gram_path
from .rng import make_rng

DEFAULT_GRID = tuple(2.0**k for k in range(-2, 7))
DEFAULT_SPLIT = 0.2
DEFAULT_LAMBDA = 0.01
IID_SIGN_CHANGE = 0.5
#: Random stream (see :func:`dksd.rng.make_rng`) used by the test procedures.
TEST_STREAM = 1


@dataclass(frozen=True)
class TestConfig:
    """Settings shared by both dKSD procedures.

    ``kappa`` is either a positive float (fixed kernel) or ``"auto"`` for
    grid selection on a ``split`` fraction of the data. ``wild_a`` is the
    sign-change probability of the wild bootstrap; ``None`` means the samples
    are i.i.d. and 0.5 is used.
    """

    __test__ = False  # not a pytest class

    alpha: float = 0.01
    bootstrap: int = 1000
    kappa: object = "auto"
    grid: tuple = DEFAULT_GRID
    split: float = DEFAULT_SPLIT
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    wild_a: float = None
    eigen_method: str = "lapack"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.bootstrap) != self.bootstrap or self.bootstrap < 100:
            raise ValueError(f"bootstrap size must be an integer >= 100, got {self.bootstrap}")
        if self.kappa != "auto":
            if not float(self.kappa) > 0:
                raise ValueError(f"kappa must be positive or 'auto', got {self.kappa}")
            object.__setattr__(self, "kappa", float(self.kappa))
        grid = tuple(float(k) for k in self.grid)
        if not grid or min(grid) <= 0:
            raise ValueError("kappa grid must be nonempty and strictly positive")
        object.__setattr__(self, "grid", grid)
        if not 0.0 < self.split < 1.0:
            raise ValueError(f"split fraction must lie in (0, 1), got {self.split}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.wild_a is not None and not 0.0 < self.wild_a < 1.0:
            raise ValueError(f"sign-change probability must lie in (0, 1), got {self.wild_a}")

    @property
    def sign_change(self):
        return IID_SIGN_CHANGE if self.wild_a is None else self.wild_a


@dataclass
class TestOutcome:
    __test__ = False

    statistic: float
    threshold: float
    reject: bool
    bootstrap_draws: np.ndarray = field(repr=False)
    selected_kappa: float
    n_used: int
    method: str


# --- statistics ---------------------------------------------------------------


def dksd_u_statistic(H):
    """Off-diagonal mean of the Stein Gram matrix (unbiased dKSD^2)."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if n < 2:
        raise ValueError("U-statistic needs n >= 2")
    return (H.sum() - np.trace(H)) / (n * (n - 1))


def dksd_v_statistic(H):
    """Full mean of the Stein Gram matrix (biased dKSD^2)."""
    H = np.asarray(H, dtype=np.float64)
    if H.shape[0] < 1:
        raise ValueError("V-statistic needs n >= 1")
    return H.mean()


def estimate_sigma_u(H):
    """Sample standard deviation of the leave-self-out row means of ``H``."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    if n < 3:
        raise ValueError("sigma_u estimate needs n >= 3")
    row_means = (H.sum(axis=1) - np.diag(H)) / (n - 1)
    return float(np.std(row_means, ddof=1))


def upper_quantile(draws, alpha):
    """The ``ceil((1 - alpha) B)``-th smallest of ``B`` draws."""
    draws = np.sort(np.asarray(draws, dtype=np.float64))
    B = draws.size
    # guard against (1 - alpha) * B landing a hair above an integer
    k = math.ceil((1.0 - alpha) * B - 1e-9)
    return float(draws[min(max(k, 1), B) - 1])


# --- null approximations --------------------------------------------------------


def spectrum_bootstrap_null(H, B, rng, eigen_method="lapack"):
    """Draws of ``sum_j c_j (Z_j^2 - 1)`` with ``c_j = eig(H) / n``."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    c = symmetric_eigenvalues(H, method=eigen_method) / n
    Z = rng.standard_normal((int(B), n))
    np.square(Z, out=Z)
    return Z @ c - c.sum()


def wild_bootstrap_weights(n, a, rng, size=None):
    """Sign weights ``W_1..W_n`` of a chain that flips with probability ``a``.

    ``W_0 = 1`` and ``W_i = -W_{i-1}`` exactly when ``U_i < a``. With ``size``
    given, returns ``size`` independent chains as rows.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"sign-change probability must lie in (0, 1), got {a}")
    shape = (n,) if size is None else (int(size), n)
    U = rng.random(shape)
    steps = np.where(U < a, -1.0, 1.0)
    return np.cumprod(steps, axis=-1)


def wild_bootstrap_null(H, B, a, rng):
    """Draws of ``W'HW / n^2`` over ``B`` weight chains."""
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    W = wild_bootstrap_weights(n, a, rng, size=B)
    return np.einsum("ti,ti->t", W @ H, W) / (n * n)


# --- kernel selection -------------------------------------------------------------


def split_indices(n, split_fraction, rng):
    """Random disjoint (selection, test) index sets."""
    n_sel = int(round(split_fraction * n))
    perm = rng.permutation(n)
    return np.sort(perm[:n_sel]), np.sort(perm[n_sel:])


def selection_criterion(H, lam):
    return dksd_u_statistic(H) / (estimate_sigma_u(H) + lam)


def select_kappa_on(samples, model, grid, lam):
    """Grid value maximizing ``dKSD_u^2 / (sigma_u + lam)``; ties go to the smaller kappa."""
    grid = sorted(set(float(k) for k in grid))
    if not grid:
        raise ValueError("kappa grid is empty")
    if len(grid) == 1:
        return grid[0]
    prepared = SteinKernel(grid[0], model).prepare(samples)
    best, best_value = grid[0], -np.inf
    for kappa, H in zip(grid, gram_path(prepared, grid)):
        value = selection_criterion(H, lam)
        if value > best_value:
            best, best_value = kappa, value
    return best


def select_kappa(samples, model, grid=DEFAULT_GRID, split_fraction=DEFAULT_SPLIT,
                 lam=DEFAULT_LAMBDA, rng=None):
    """Select the kernel concentration on a random ``split_fraction`` of the samples."""
    samples = np.asarray(samples, dtype=np.float64)
    rng = make_rng(0) if rng is None else rng
    sel, _ = split_indices(samples.shape[0], split_fraction, rng)
    if sel.size < 10:
        raise ValueError(f"selection split has {sel.size} samples; need at least 10")
    return select_kappa_on(samples[sel], model, grid, lam)


def _kernel_and_data(samples, model, config, rng):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != model.d:
        raise ValueError(f"samples must have shape (n, {model.d})")
    n = samples.shape[0]
    if n < 10:
        raise ValueError(f"dKSD tests need n >= 10, got {n}")
    if config.kappa == "auto":
        sel, rest = split_indices(n, config.split, rng)
        if sel.size < 10:
            raise ValueError(f"selection split has {sel.size} samples; need at least 10")
        kappa = select_kappa_on(samples[sel], model, config.grid, config.lam)
        samples = samples[rest]
    else:
        kappa = config.kappa
    return SteinKernel(kappa, model), samples


# --- tests ------------------------------------------------------------------------


def dksd_u_from_gram(H, alpha, B, rng, eigen_method="lapack"):
    """Return ``(n * dKSD_u^2, threshold, draws)`` for a precomputed Gram matrix."""
    n = H.shape[0]
    stat = n * dksd_u_statistic(H)
    draws = spectrum_bootstrap_null(H, B, rng, eigen_method)
    return stat, upper_quantile(draws, alpha), draws


def dksd_v_from_gram(H, alpha, B, a, rng):
    """Return ``(dKSD_b^2, threshold, draws)`` for a precomputed Gram matrix."""
    stat = dksd_v_statistic(H)
    draws = wild_bootstrap_null(H, B, a, rng)
    return stat, upper_quantile(draws, alpha), draws


def test_dksd_u(samples, model, config=TestConfig()):
    """dKSD test with the U-statistic and spectral null approximation."""
    rng = make_rng(config.seed, TEST_STREAM)
    kernel, data = _kernel_and_data(samples, model, config, rng)
    H = kernel.gram(data)
    stat, thr, draws = dksd_u_from_gram(H, config.alpha, config.bootstrap, rng, config.eigen_method)
    return TestOutcome(float(stat), thr, bool(stat > thr), draws, kernel.kappa, data.shape[0], "dKSDu")


def test_dksd_v(samples, model, config=TestConfig()):
    """dKSD test with the V-statistic and wild bootstrap."""
    rng = make_rng(config.seed, TEST_STREAM)
    kernel, data = _kernel_and_data(samples, model, config, rng)
    H = kernel.gram(data)
    stat, thr, draws = dksd_v_from_gram(H, config.alpha, config.bootstrap, config.sign_change, rng)
    return TestOutcome(float(stat), thr, bool(stat > thr), draws, kernel.kappa, data.shape[0], "dKSDv")


test_dksd_u.__test__ = False
test_dksd_v.__test__ = False

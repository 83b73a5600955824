"""Deterministic quadrature on S^1 and S^2.

Used as an independent check on Monte-Carlo quantities: population dKSD^2
on the circle, normalizing constants and low-order moments.
"""

import math

import numpy as np

from .errors import DimensionError
from .geometry import jacobian, to_cartesian
from .kernel import SteinKernel


def circle_grid(grid_points):
    """Periodic trapezoid nodes ``2 pi i / N`` and spacing on the circle."""
    theta = 2.0 * math.pi * np.arange(grid_points) / grid_points
    return theta[:, None], 2.0 * math.pi / grid_points


def sphere_grid(d, grid_points):
    """Angles and weights ``J dtheta`` of a trapezoid product rule, d in {2, 3}.

    The weights integrate against surface measure (their sum is the sphere
    area, up to quadrature error).
    """
    if d == 2:
        theta, step = circle_grid(grid_points)
        return theta, np.full(grid_points, step)
    if d == 3:
        polar = np.linspace(0.0, math.pi, grid_points + 1)
        wp = np.full(polar.size, math.pi / grid_points)
        wp[[0, -1]] *= 0.5
        az, step = circle_grid(2 * grid_points)
        P, Z = np.meshgrid(polar, az[:, 0], indexing="ij")
        theta = np.stack([P.ravel(), Z.ravel()], axis=-1)
        w = (wp[:, None] * step * np.ones_like(Z)).ravel() * jacobian(theta)
        return theta, w
    raise DimensionError("quadrature grids exist for d = 2 and d = 3 only")


def model_expectation(model, fn, grid_points=256):
    """``E_q[fn(x)]`` by quadrature; ``fn`` maps points ``(m, d)`` to ``(m, ...)``."""
    theta, w = sphere_grid(model.d, grid_points)
    x = to_cartesian(theta)
    logq = model.log_density_unnormalized(x)
    p = w * np.exp(logq - logq.max())
    p /= p.sum()
    vals = np.asarray(fn(x))
    return np.tensordot(p, vals, axes=(0, 0))


def log_partition_uniform(model, grid_points=256):
    """``log (1/S) int exp(log q) dS`` -- the normalizer against the uniform law."""
    theta, w = sphere_grid(model.d, grid_points)
    logq = model.log_density_unnormalized(to_cartesian(theta))
    top = logq.max()
    area = 2.0 * math.pi ** (model.d / 2.0) / math.gamma(model.d / 2.0)
    return top + math.log(np.sum(w * np.exp(logq - top)) / area)


def dksd_quadrature_oracle(p, q, kappa, grid_points=512):
    """Population dKSD^2(p, q) on the circle by a periodic trapezoid rule.

    ``(1/Z_p^2) sum_ij h_q(t_i, t_j) p(t_i) p(t_j) dt^2`` with
    ``Z_p = sum_i p(t_i) dt``; invariant to rescaling ``p``.
    """
    if p.d != 2 or q.d != 2:
        raise DimensionError("the quadrature oracle works on the circle (d = 2) only")
    if grid_points < 128:
        raise ValueError("use at least 128 grid points")
    theta, step = circle_grid(grid_points)
    logp = p.log_density_unnormalized(to_cartesian(theta))
    w = np.exp(logp - logp.max()) * step
    w /= w.sum()
    kernel = SteinKernel(kappa, q)
    H = kernel.gram_prepared(kernel.prepare_theta(theta))
    return float(w @ H @ w)


def sigma_u_quadrature(p, q, kappa, grid_points=512):
    """``sqrt(Var_p[E_p h_q(x, .)])`` on the circle by quadrature."""
    theta, step = circle_grid(grid_points)
    logp = p.log_density_unnormalized(to_cartesian(theta))
    w = np.exp(logp - logp.max()) * step
    w /= w.sum()
    kernel = SteinKernel(kappa, q)
    H = kernel.gram_prepared(kernel.prepare_theta(theta))
    g = H @ w
    mean = w @ g
    return float(math.sqrt(max(0.0, w @ (g - mean) ** 2)))

"""Hyperspherical coordinates on S^(d-1).

Points are stored as arrays whose last axis holds Cartesian components
(length ``d``); spherical coordinates have last axis of length ``d - 1``.
Every function accepts arbitrary leading batch dimensions. The chart is

    x_k = cos(t_k) * prod_{j<k} sin(t_j)    for k < d - 1
    x_{d-1} = prod_{j<d-1} sin(t_j)

with ``t_0 .. t_{d-3}`` polar angles in [0, pi) and ``t_{d-2}`` the azimuth in
[0, 2 pi). Computations are elementwise with reductions only over the last,
contiguous axis, so a batched call and a loop of single-point calls produce
identical bits.
"""

import math

import numpy as np

from .errors import DimensionError, PoleSingularity

#: Polar angles are clamped into [EPS_POLE, pi - EPS_POLE] on conversion.
EPS_POLE = 1e-8


def sphere_area(d):
    """Surface area of S^(d-1), ``2 pi^(d/2) / Gamma(d/2)``."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _check_theta(theta):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim == 0 or theta.shape[-1] < 1:
        raise DimensionError("spherical coordinates need at least one angle")
    return theta


def _embed(s, c):
    # x_k = c_k prod_{j<k} s_j, last component prod_j s_j
    lead = np.cumprod(s, axis=-1)
    out = np.empty(s.shape[:-1] + (s.shape[-1] + 1,))
    out[..., 0] = c[..., 0]
    out[..., 1:-1] = c[..., 1:] * lead[..., :-1]
    out[..., -1] = lead[..., -1]
    return out


def to_cartesian(theta):
    """Map spherical coordinates ``(..., d-1)`` to unit vectors ``(..., d)``."""
    theta = _check_theta(theta)
    return _embed(np.sin(theta), np.cos(theta))


def clamp_poles(theta, eps=EPS_POLE):
    """Clamp the polar angles (all but the last) away from 0 and pi."""
    theta = np.array(theta, dtype=np.float64)
    if theta.shape[-1] > 1:
        theta[..., :-1] = np.clip(theta[..., :-1], eps, math.pi - eps)
    return theta


def to_spherical(x, clamp=True):
    """Inverse chart: unit vectors ``(..., d)`` to angles ``(..., d-1)``.

    Polar angles are ``atan2(|x_{i+1:}|, x_i)`` and the azimuth is
    ``atan2(x_{d-1}, x_{d-2})`` wrapped into [0, 2 pi). With ``clamp`` the
    polar angles are pushed at most ``EPS_POLE`` away from the poles.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] < 2:
        raise DimensionError("points must have at least two components")
    d = x.shape[-1]
    theta = np.empty(x.shape[:-1] + (d - 1,))
    if d > 2:
        sq = x[..., 1:] ** 2
        # tail[i] = sum_{k > i} x_k^2
        tail = np.cumsum(sq[..., ::-1], axis=-1)[..., ::-1]
        theta[..., :-1] = np.arctan2(np.sqrt(tail[..., : d - 2]), x[..., : d - 2])
    az = np.arctan2(x[..., -1], x[..., -2])
    theta[..., -1] = np.where(az < 0.0, az + 2.0 * math.pi, az)
    if clamp:
        theta = clamp_poles(theta)
    return theta


def jacobian(theta):
    """Volume element ``prod_i sin^(d-2-i)(t_i)``; identically 1 on the circle."""
    theta = _check_theta(theta)
    m = theta.shape[-1]
    powers = np.arange(m - 1, -1, -1, dtype=np.float64)  # d-2, ..., 1, 0
    return np.prod(np.sin(theta) ** powers, axis=-1)


def grad_log_jacobian(theta):
    """Gradient of ``log J`` in the angles: ``(d-2-i) cot(t_i)``, last entry 0.

    Raises ``PoleSingularity`` when a polar angle lies within half the
    clamping margin of a pole.
    """
    theta = _check_theta(theta)
    m = theta.shape[-1]
    out = np.zeros(theta.shape)
    if m > 1:
        polar = theta[..., :-1]
        s = np.sin(polar)
        if np.any(np.abs(s) < 0.5 * EPS_POLE):
            raise PoleSingularity("polar angle on a chart pole; clamp before use")
        powers = np.arange(m - 1, 0, -1, dtype=np.float64)
        out[..., :-1] = powers * np.cos(polar) / s
    return out


def tangent_rows(theta):
    """Partial derivatives of the chart, shape ``(..., d-1, d)``.

    Row ``i`` is ``dx/dt_i``. This is the transposed, contiguous form of
    :func:`tangent_basis` used by the kernel code.
    """
    theta = _check_theta(theta)
    m = theta.shape[-1]
    s = np.sin(theta)
    c = np.cos(theta)
    rows = np.empty(theta.shape + (m + 1,))
    for i in range(m):
        si = s.copy()
        ci = c.copy()
        si[..., i] = c[..., i]
        ci[..., i] = -s[..., i]
        row = _embed(si, ci)
        row[..., :i] = 0.0
        rows[..., i, :] = row
    return rows


def tangent_basis(theta):
    """Matrix ``(..., d, d-1)`` whose column ``i`` is ``dx/dt_i``.

    Columns are orthogonal to the point and to each other; column ``i`` has
    norm ``prod_{j<i} |sin t_j|``.
    """
    return np.swapaxes(tangent_rows(theta), -1, -2)

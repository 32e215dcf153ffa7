"""Closed-form references the test suite checks numerics against.

Everything here is derived by hand from Gaussian integrals and kept free of
the package's FFT machinery, so agreement is evidence rather than tautology.
Natural units throughout: hbar = 1, sigma_x * sigma_p = 1/2 for a pure
Gaussian of coherence length l (sigma_x = l, sigma_p = 1 / (2 l)).
"""
from __future__ import annotations

import numpy as np


def gaussian_chi(u, v, l_coh=1.0, x_center=0.0, p_center=0.0):
    """Symmetrized characteristic function of a Gaussian packet.

    chi(u, v) = exp(i(u x0 + v p0) - (u^2 sx^2 + v^2 sp^2) / 2).
    """
    sx2 = l_coh**2
    sp2 = 1.0 / (4.0 * l_coh**2)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.exp(
        1j * (u * x_center + v * p_center) - 0.5 * (u**2 * sx2 + v**2 * sp2)
    )


def gaussian_gamma(u, v, l_coh=1.0, x_center=0.0, p_center=0.0):
    """Ordered-displacement coherence: gamma = chi * exp(-i u v / 2)."""
    return gaussian_chi(u, v, l_coh, x_center, p_center) * np.exp(
        -0.5j * np.asarray(u, dtype=float) * np.asarray(v, dtype=float)
    )


def gaussian_wigner(x, p, l_coh=1.0, x_center=0.0, p_center=0.0):
    """Unit-integral Gaussian Wigner function, peak value 1/pi."""
    sx2 = l_coh**2
    sp2 = 1.0 / (4.0 * l_coh**2)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return (
        np.exp(-((x - x_center) ** 2) / (2 * sx2) - (p - p_center) ** 2 / (2 * sp2))
        / np.pi
    )


def evolved_wigner(x, p, tau, l_coh=1.0, x_center=0.0, p_center=0.0):
    """Free evolution shears phase space: W_tau(x, p) = W_0(x - tau p, p)."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return gaussian_wigner(x - tau * p, p, l_coh, x_center, p_center)


def evolved_sigma_x(tau, l_coh=1.0):
    """Packet spread after free flight: sx^2(tau) = l^2 + tau^2 / (4 l^2)."""
    return np.sqrt(l_coh**2 + tau**2 / (4.0 * l_coh**2))


def cat_norm_sq(separation, l_coh=1.0):
    """Normalization 1 / (2 (1 + overlap)) of a two-hump superposition."""
    return 1.0 / (2.0 * (1.0 + np.exp(-(separation**2) / (8.0 * l_coh**2))))


def cat_wigner(x, p, separation, l_coh=1.0, x_center=0.0):
    """Wigner function of psi(x) + psi(x + separation), humps at x0, x0 - sep.

    Two Gaussian lobes plus an interference ridge midway, fringing in p at
    wavevector equal to the separation.
    """
    x = np.asarray(x, dtype=float) - x_center
    p = np.asarray(p, dtype=float)
    l2 = l_coh**2
    d = separation
    n2 = cat_norm_sq(d, l_coh)
    lobes = np.exp(-(x**2) / (2 * l2)) + np.exp(-((x + d) ** 2) / (2 * l2))
    ridge = 2.0 * np.exp(-((x + d / 2.0) ** 2) / (2 * l2)) * np.cos(p * d)
    return n2 / np.pi * (lobes + ridge) * np.exp(-2.0 * l2 * p**2)


def cat_negativity(separation, l_coh=1.0, n_grid=600):
    """Negative-part volume of the analytic cat Wigner, by fine quadrature."""
    xs = np.linspace(-1.5 * separation, 0.5 * separation, n_grid)
    ps = np.linspace(-4.0 / l_coh, 4.0 / l_coh, n_grid)
    w = cat_wigner(xs[:, None], ps[None, :], separation, l_coh)
    return float(
        np.sum(np.clip(-w, 0.0, None)) * (xs[1] - xs[0]) * (ps[1] - ps[0])
    )


def gaussian_ray_density(t, theta, l_coh=1.0, x_center=0.0, p_center=0.0):
    """Quadrature density of a Gaussian along direction theta.

    X_theta = x cos(theta) + p sin(theta) is Gaussian with mean
    x0 cos + p0 sin and variance sx^2 cos^2 + sp^2 sin^2.
    """
    sx2 = l_coh**2
    sp2 = 1.0 / (4.0 * l_coh**2)
    mean = x_center * np.cos(theta) + p_center * np.sin(theta)
    var = sx2 * np.cos(theta) ** 2 + sp2 * np.sin(theta) ** 2
    t = np.asarray(t, dtype=float)
    return np.exp(-((t - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)


def gamma_by_quadrature(u, v, l_coh=1.0, x_center=0.0, p_center=0.0, span=12.0, n=4001):
    """Overlap integral for gamma, on a dense independent trapezoid lattice.

    Direct evaluation of integral psi*(x) e^{iux} psi(x + v) dx with the
    Gaussian amplitude written out, no FFT anywhere.
    """
    xs = np.linspace(x_center - span, x_center + span, n)

    def amp(x):
        return np.exp(
            -((x - x_center) ** 2) / (4 * l_coh**2) + 1j * p_center * (x - x_center)
        )

    f = amp(xs)
    norm = np.trapezoid(np.abs(f) ** 2, xs)
    integrand = np.conj(f) * np.exp(1j * u * xs) * amp(xs + v)
    return np.trapezoid(integrand, xs) / norm

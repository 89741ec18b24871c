"""Independent reference computations shared by several test modules."""

import math

import numpy as np
from scipy import integrate, stats


def quad_log_marginal(r, sigma2, sigma_mu2):
    """log of the integral over mu, by adaptive quadrature around the mode."""
    r = np.asarray(r, dtype=float)
    k = r.size
    s1, s2 = float(r.sum()), float(r @ r)
    v = 1.0 / (k / sigma2 + 1.0 / sigma_mu2)
    mode = v * s1 / sigma2
    const = -0.5 * k * math.log(2 * math.pi * sigma2) - 0.5 * math.log(2 * math.pi * sigma_mu2)

    def logf(mu):
        # sum of N(r_i; mu, sigma2) log densities plus the N(mu; 0, sigma_mu2) prior
        return const - (s2 - 2 * mu * s1 + k * mu * mu) / (2 * sigma2) - mu * mu / (2 * sigma_mu2)

    peak = logf(mode)
    half = 40 * math.sqrt(v)
    val, _ = integrate.quad(lambda m: math.exp(logf(m) - peak), mode - half, mode + half,
                            points=[mode], epsabs=0, epsrel=1e-13, limit=200)
    return peak + math.log(val)


def intercept_regression_posterior(y, x, m, k=2.0, nu0=3.0, q=0.9, sigma2_psi=16.0):
    """Posterior mean and sd of the slope in y = b0 + x psi + e, on the original scale.

    This is the model the sampler reduces to when trees cannot split: the
    outcome is rescaled to [-0.5, 0.5], the m root-leaf means sum to an
    intercept with prior N(0, m sigma_mu^2), psi ~ N(0, sigma2_psi) and
    sigma2 has a scaled inverse chi-square prior.  sigma2 is integrated out
    by adaptive quadrature over log sigma2.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    lo, hi = y.min(), y.max()
    scale = hi - lo
    yt = (y - 0.5 * (lo + hi)) / scale
    lam0 = np.var(yt) * stats.chi2.ppf(1.0 - q, nu0) / nu0
    sigma_mu2 = (0.5 / (k * math.sqrt(m))) ** 2
    X = np.column_stack([np.ones_like(x), x])
    D = np.array([m * sigma_mu2, sigma2_psi])
    n = y.size

    def conditional(s2):
        P = X.T @ X / s2 + np.diag(1.0 / D)
        C = np.linalg.inv(P)
        mean = C @ (X.T @ yt) / s2
        logdet = np.linalg.slogdet(P)[1]
        loglik = (-0.5 * n * math.log(2 * math.pi * s2) - 0.5 * np.log(D).sum() - 0.5 * logdet
                  - 0.5 * (yt @ yt / s2 - mean @ P @ mean))
        logprior = stats.invgamma.logpdf(s2, nu0 / 2, scale=nu0 * lam0 / 2)
        return mean[1], C[1, 1], loglik + logprior

    grid = np.linspace(math.log(1e-8), math.log(10.0), 4001)
    logw = np.array([conditional(math.exp(t))[2] + t for t in grid])
    t0, c0 = grid[np.argmax(logw)], logw.max()

    def weighted(f):
        def g(t):
            mu, var, lp = conditional(math.exp(t))
            return math.exp(lp + t - c0) * f(mu, var)
        return integrate.quad(g, t0 - 4.0, t0 + 4.0, epsabs=0, epsrel=1e-11, limit=200)[0]

    z = weighted(lambda mu, var: 1.0)
    m1 = weighted(lambda mu, var: mu) / z
    m2 = weighted(lambda mu, var: var + mu * mu) / z
    return scale * m1, scale * math.sqrt(m2 - m1 * m1)


def batch_means_se(x, n_batches=40):
    """Monte Carlo standard errors of the mean and the sd of a chain."""
    x = np.asarray(x, dtype=float)
    x = x[: x.size - x.size % n_batches]
    b1 = x.reshape(n_batches, -1).mean(axis=1)
    b2 = (x * x).reshape(n_batches, -1).mean(axis=1)
    se_mean = b1.std(ddof=1) / math.sqrt(n_batches)
    sd = x.std()
    grad = np.array([-x.mean() / sd, 0.5 / sd])
    cov = np.cov(np.vstack([b1, b2])) / n_batches
    return se_mean, math.sqrt(grad @ cov @ grad)

"""Standard normal CDF/quantile and truncated-normal sampling.

The quantile function is Wichura's AS 241 (PPND16) rational approximation,
accurate to about 1e-16 relative over (0, 1).  The CDF uses the C library
``erfc``.  Both have scalar forms usable inside compiled kernels and array
forms for vectorized callers.
"""

import math

import numpy as np

from ._accel import dispatch, jit

SQRT2 = math.sqrt(2.0)

# below this truncation point the inverse-CDF draw is used, above it
# exponential rejection (inverse CDF loses all precision far in the tail)
TAIL_SWITCH = 2.0

_A = np.array([
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
])
_B = np.array([
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
])
_C = np.array([
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
])
_D = np.array([
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
    5.47593808499534494600e-4, 1.05075007164441684324e-9,
])
_E = np.array([
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
])
_F = np.array([
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
    1.42151175831644588870e-7, 2.04426310338993978564e-15,
])


@jit
def _poly(coef, x):
    acc = 0.0
    for i in range(coef.size - 1, -1, -1):
        acc = acc * x + coef[i]
    return acc


@jit
def norm_cdf(x):
    """Standard normal CDF."""
    return 0.5 * math.erfc(-x / SQRT2)


@jit
def norm_ppf(p):
    """Standard normal quantile (AS 241).  Returns +-inf at 1 and 0."""
    if p <= 0.0:
        return -np.inf
    if p >= 1.0:
        return np.inf
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        x = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        x = _poly(_E, r) / _poly(_F, r)
    return -x if q < 0.0 else x


def norm_cdf_array(x):
    """Vectorized :func:`norm_cdf`."""
    from scipy.special import erfc

    return 0.5 * erfc(-np.asarray(x, dtype=float) / SQRT2)


def norm_ppf_array(p):
    """Vectorized :func:`norm_ppf` (same AS 241 coefficients)."""
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    q = p - 0.5
    central = np.abs(q) <= 0.425
    with np.errstate(divide="ignore", invalid="ignore"):
        r = 0.180625 - q * q
        out = np.where(central, q * _poly_np(_A, r) / _poly_np(_B, r), out)
        t = np.where(q < 0.0, p, 1.0 - p)
        t = np.sqrt(-np.log(np.clip(t, 1e-300, 1.0)))
        mid = np.where(t <= 5.0, _poly_np(_C, t - 1.6) / _poly_np(_D, t - 1.6),
                       _poly_np(_E, t - 5.0) / _poly_np(_F, t - 5.0))
    mid = np.where(q < 0.0, -mid, mid)
    out = np.where(central, out, mid)
    out = np.where(p <= 0.0, -np.inf, out)
    return np.where(p >= 1.0, np.inf, out)


def _poly_np(coef, x):
    acc = np.zeros_like(x)
    for c in coef[::-1]:
        acc = acc * x + c
    return acc


@jit
def truncated_tail_draw(a, rng):
    """One draw of Z ~ N(0, 1) conditioned on Z > a."""
    if a < TAIL_SWITCH:
        upper = norm_cdf(-a)
        while True:
            u = 1.0 - rng.random()
            x = -norm_ppf(u * upper)
            if x > a:
                return x
    # Robert (1995) translated-exponential proposal with the optimal rate
    rate = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        x = a + rng.standard_exponential() / rate
        if rng.random() <= math.exp(-0.5 * (x - rate) ** 2):
            return x


def _latent_loop(mean, y, rng):
    n = mean.size
    out = np.empty(n)
    for i in range(n):
        m = mean[i]
        if y[i] > 0.5:
            z = m + truncated_tail_draw(-m, rng)
            while z <= 0.0:
                z = m + truncated_tail_draw(-m, rng)
        else:
            z = m - truncated_tail_draw(m, rng)
            while z > 0.0:
                z = m - truncated_tail_draw(m, rng)
        out[i] = z
    return out


def _tail_draws_np(a, rng):
    x = np.empty_like(a)
    idx = np.nonzero(a < TAIL_SWITCH)[0]
    while idx.size:
        u = 1.0 - rng.random(idx.size)
        x[idx] = -norm_ppf_array(u * norm_cdf_array(-a[idx]))
        idx = idx[x[idx] <= a[idx]]
    idx = np.nonzero(a >= TAIL_SWITCH)[0]
    while idx.size:
        ai = a[idx]
        rate = 0.5 * (ai + np.sqrt(ai * ai + 4.0))
        cand = ai + rng.standard_exponential(idx.size) / rate
        ok = rng.random(idx.size) <= np.exp(-0.5 * (cand - rate) ** 2)
        x[idx[ok]] = cand[ok]
        idx = idx[~ok]
    return x


def _latent_numpy(mean, y, rng):
    pos = y > 0.5
    # reflect y = 0 rows so every row is a lower-tail truncation
    a = np.where(pos, -mean, mean)
    x = _tail_draws_np(a, rng)
    z = np.where(pos, mean + x, mean - x)
    bad = np.nonzero(np.where(pos, z <= 0.0, z > 0.0))[0]
    while bad.size:
        x = _tail_draws_np(a[bad], rng)
        z[bad] = np.where(pos[bad], mean[bad] + x, mean[bad] - x)
        zb = z[bad]
        bad = bad[np.where(pos[bad], zb <= 0.0, zb > 0.0)]
    return z


sample_latent = dispatch(_latent_loop, _latent_numpy)
sample_latent.__doc__ = """Draw z_i ~ N(mean_i, 1) truncated to z > 0 if y_i = 1, z <= 0 otherwise."""

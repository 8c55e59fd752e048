"""
Special functions and the fluctuating two-ray (FTR) fading law
"""
import math
import logging
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import integrate, special, stats

from models.coverage_models import FtrParams, FtrSeries, SeriesControl
from models.exceptions import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# power series controls for 2F1, separate from the j-series controls
HYP2F1_CONTROL = SeriesControl(rel_tol=1e-15, j_min=0, j_max=5000)
HYP2F1_MAX_ARG = 0.999
# largest tolerated ratio sum|terms| / |r_j| before the double sum is distrusted
CANCELLATION_LIMIT = 1e6


def pochhammer(a: float, n: int) -> float:
    """Rising factorial a (a+1) ... (a+n-1)"""
    if n < 0 or int(n) != n:
        raise DomainError(f"pochhammer order must be a nonnegative integer, got {n}")
    return float(math.prod(a + i for i in range(int(n))))


def upper_incomplete_gamma(a: float, x: float) -> float:
    """Non-normalized upper incomplete gamma Gamma(a, x)"""
    if a <= 0:
        raise DomainError(f"upper incomplete gamma needs a > 0, got a={a}")
    if x < 0:
        raise DomainError(f"upper incomplete gamma needs x >= 0, got x={x}")
    return float(special.gammaincc(a, x) * special.gamma(a))


def hyp2f1_series(a: ArrayLike, b: ArrayLike, c: ArrayLike, x: ArrayLike,
                  ctl: SeriesControl = HYP2F1_CONTROL) -> np.ndarray:
    """Vectorized Gauss 2F1 by its power series.

    Each element stops once three consecutive terms fall below
    ``ctl.rel_tol`` times its running sum, or when the series terminates.
    """
    a, b, c, x = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, x)))
    if np.any(np.abs(x) >= HYP2F1_MAX_ARG):
        raise DomainError(f"2F1 power series needs |x| < {HYP2F1_MAX_ARG}")

    term = np.ones(x.shape)
    total = np.ones(x.shape)
    quiet = np.zeros(x.shape, dtype=int)
    done = np.zeros(x.shape, dtype=bool)

    for n in range(ctl.j_max):
        numer = term * (a + n) * (b + n) * x
        denom = (c + n) * (n + 1)
        live = ~done & (numer != 0.0)
        if np.any(live & (denom == 0.0)):
            raise DomainError("2F1 with non-positive integer c and a non-terminating series")
        term = np.where(live, numer / np.where(denom == 0.0, 1.0, denom), 0.0)
        done |= ~live
        total = total + term
        small = np.abs(term) <= ctl.rel_tol * np.abs(total)
        quiet = np.where(small, quiet + 1, 0)
        done |= (quiet >= 3) & (n + 1 >= ctl.j_min)
        if done.all():
            return total

    raise ConvergenceError(f"2F1 series did not converge within {ctl.j_max} terms")


def gauss_2f1(a: float, b: float, c: float, x: float,
              ctl: SeriesControl = HYP2F1_CONTROL) -> float:
    """Scalar Gauss hypergeometric function for |x| < 1"""
    if abs(x) >= 1.0:
        raise DomainError(f"2F1 power series needs |x| < 1, got {x}")
    return float(hyp2f1_series(a, b, c, x, ctl))


def omega(mu: float, upsilon: float, x: float) -> float:
    """Two-branch Omega function built on 2F1.

    Positive integer mu takes the Pochhammer-weighted branch, every other
    mu the branch divided by Gamma(1 - mu).
    """
    if not 0.0 <= x < 1.0:
        raise DomainError(f"omega needs 0 <= x < 1, got {x}")
    if mu > 0 and float(mu).is_integer():
        n = int(mu)
        weight = (pochhammer((upsilon - mu) / 2, n)
                  * pochhammer((upsilon - mu + 1) / 2, n)
                  * x ** n / math.factorial(n))
        if weight == 0.0:
            return 0.0
        return weight * gauss_2f1((upsilon + mu) / 2, (upsilon + mu + 1) / 2, 1 + mu, x)
    value = gauss_2f1((upsilon - mu) / 2, (upsilon - mu + 1) / 2, 1 - mu, x)
    return float(value * special.rgamma(1 - mu))


def _log_pochhammer(a: np.ndarray, n: np.ndarray) -> np.ndarray:
    return special.gammaln(a + n) - special.gammaln(a)


def _rj_double_sum(j: int, m: float, big_k: float, delta: float):
    """Log of r_j from the binomial double sum, plus its cancellation ratio.

    The Omega subscript is j + m for every (k, l); the argument is
    x = (K delta / (m + K))^2.
    """
    k, l = np.nonzero(np.tri(j + 1, j + 1, dtype=bool))
    k = k.astype(float)
    l = l.astype(float)
    mu = k - 2.0 * l
    upsilon = float(j + m)
    base = m + big_k
    x = (big_k * delta / base) ** 2

    # C(j, k) C(k, l) = j! / ((j - k)! l! (k - l)!)
    log_mag = (special.gammaln(j + 1.0) - special.gammaln(j - k + 1.0)
               - special.gammaln(l + 1.0) - special.gammaln(k - l + 1.0)
               + special.gammaln(upsilon - mu) - (upsilon - mu) * math.log(base)
               + special.xlogy(2.0 * l, delta / 2.0))

    pos = mu > 0
    abs_mu = np.abs(mu)
    # K^(2l-k) folded with x^mu so that K = 0 stays finite
    with np.errstate(divide='ignore'):
        log_mag = np.where(
            pos,
            log_mag
            + special.xlogy(mu, big_k) + special.xlogy(2.0 * mu, delta) - 2.0 * mu * math.log(base)
            + _log_pochhammer((upsilon - mu) / 2.0, np.where(pos, mu, 0.0))
            + _log_pochhammer((upsilon - mu + 1.0) / 2.0, np.where(pos, mu, 0.0))
            - special.gammaln(np.where(pos, mu, 0.0) + 1.0),
            log_mag + special.xlogy(-mu, big_k) - special.gammaln(1.0 - mu),
        )

    live = np.isfinite(log_mag)
    if not live.any():
        return -math.inf, 1.0
    hyp = hyp2f1_series((upsilon + abs_mu[live]) / 2.0, (upsilon + abs_mu[live] + 1.0) / 2.0,
                        1.0 + abs_mu[live], x)
    log_terms = log_mag[live] + np.log(hyp)
    signs = np.where(k[live] % 2 == 0, 1.0, -1.0)

    peak = float(np.max(log_terms))
    scaled = np.exp(log_terms - peak)
    value = math.fsum(signs * scaled)
    magnitude = math.fsum(scaled)
    if value <= 0.0:
        return math.nan, math.inf
    return peak + math.log(value), magnitude / value


def _rj_phase_average_log(j: int, m: float, big_k: float, delta: float) -> float:
    """Log of r_j as the phase average of the conditional noncentral law"""
    base = m + big_k

    def log_kernel(alpha):
        c = np.cos(alpha)
        return special.xlog1py(j, delta * c) - (j + m) * np.log(base + big_k * delta * c)

    peak = float(np.max(log_kernel(np.linspace(0.0, math.pi, 257))))
    value, _ = integrate.quad(lambda t: math.exp(log_kernel(t) - peak), 0.0, math.pi,
                              epsabs=0.0, epsrel=1e-13, limit=200)
    return float(special.gammaln(j + m) + peak + math.log(value / math.pi))


@lru_cache(maxsize=4096)
def _log_rj(j: int, m: float, big_k: float, delta: float) -> float:
    x = (big_k * delta / (m + big_k)) ** 2
    if x < HYP2F1_MAX_ARG:
        log_r, ratio = _rj_double_sum(j, m, big_k, delta)
        if math.isfinite(log_r) and ratio <= CANCELLATION_LIMIT:
            return log_r
        logger.debug(f"r_{j}: double sum lost precision (ratio={ratio:.3g}), using phase average")
    else:
        logger.debug(f"r_{j}: Omega argument {x:.4f} outside the series domain, using phase average")
    return _rj_phase_average_log(j, m, big_k, delta)


def ftr_rj(j: int, p: FtrParams) -> float:
    """Coefficient r_j of the FTR series"""
    if j < 0:
        raise DomainError(f"r_j needs j >= 0, got {j}")
    return math.exp(_log_rj(int(j), float(p.m), float(p.big_k), float(p.delta)))


def ftr_rj_phase_average(j: int, p: FtrParams) -> float:
    """Independent evaluation of r_j by numerical phase averaging"""
    if j < 0:
        raise DomainError(f"r_j needs j >= 0, got {j}")
    return math.exp(_rj_phase_average_log(int(j), float(p.m), float(p.big_k), float(p.delta)))


def _log_weight(j: int, p: FtrParams) -> float:
    return (p.m * math.log(p.m) - math.lgamma(p.m)
            + float(special.xlogy(j, p.big_k))
            + _log_rj(j, float(p.m), float(p.big_k), float(p.delta))
            - math.lgamma(j + 1))


@lru_cache(maxsize=64)
def ftr_weights(p: FtrParams, ctl: SeriesControl = SeriesControl()) -> FtrSeries:
    """Mixture weights w_j = m^m / Gamma(m) K^j r_j / j!.

    The j-series stops after three consecutive weights below
    ``ctl.rel_tol`` times the running sum once j >= ``ctl.j_min``.
    The retained weights are renormalized; ``trunc_err`` is the mass
    that was missing before renormalization.
    """
    weights = []
    running = 0.0
    quiet = 0
    for j in range(ctl.j_max + 1):
        w = math.exp(_log_weight(j, p))
        weights.append(w)
        running += w
        quiet = quiet + 1 if w < ctl.rel_tol * running else 0
        if quiet >= 3 and j >= ctl.j_min:
            total = math.fsum(weights)
            trunc_err = abs(1.0 - total)
            logger.debug(f"FTR series truncated at j={j}, deviation {trunc_err:.3g}")
            return FtrSeries(weights=tuple(v / total for v in weights), trunc_err=trunc_err)

    raise ConvergenceError(f"FTR series did not converge within j_max={ctl.j_max}")


def ftr_pdf(h: ArrayLike, p: FtrParams, ctl: SeriesControl = SeriesControl()) -> ArrayLike:
    """FTR power density, a Poisson mixture of Gamma(j+1) laws"""
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise DomainError("ftr_pdf needs h >= 0")
    w = ftr_weights(p, ctl).as_array()
    scale = 2.0 * p.sigma_sq
    j = np.arange(w.size)
    dens = stats.poisson.pmf(j, h_arr[..., None] / scale) @ w / scale
    return float(dens) if np.ndim(h) == 0 else dens


def ftr_cdf(h: ArrayLike, p: FtrParams, ctl: SeriesControl = SeriesControl()) -> ArrayLike:
    """FTR power CDF"""
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise DomainError("ftr_cdf needs h >= 0")
    w = ftr_weights(p, ctl).as_array()
    j = np.arange(w.size)
    # sum_j w_j P(j+1, x) equals 1 - sum_j w_j Q(j+1, x) for normalized weights
    prob = np.clip(special.gammainc(j + 1.0, h_arr[..., None] / (2.0 * p.sigma_sq)) @ w, 0.0, 1.0)
    return float(prob) if np.ndim(h) == 0 else prob


def ftr_laplace(s: ArrayLike, c: float, p: FtrParams,
                ctl: SeriesControl = SeriesControl()) -> ArrayLike:
    """E[exp(-s c H)] for FTR distributed H"""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or c < 0:
        raise DomainError("ftr_laplace needs s >= 0 and c >= 0")
    w = ftr_weights(p, ctl).as_array()
    j = np.arange(w.size)
    z = 2.0 * s_arr[..., None] * p.sigma_sq * c
    value = np.exp(-(j + 1.0) * np.log1p(z)) @ w
    return float(value) if np.ndim(s) == 0 else value

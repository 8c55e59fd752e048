"""
Coverage Analysis Service
"""
import math
import time
import logging
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np
from scipy import integrate, special

from config.settings import Settings
from models.coverage_models import (
    AntennaParams, CoverageResult, FtrParams, GainDistribution, RoomGeometry,
    Scenario, SeriesControl, SystemParams,
)
from models.exceptions import ConvergenceError, DomainError
from services import channel_service, geometry_service
from services.specfun_service import ftr_weights

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# inner d-integrals tolerate this relative error on top of the absolute one
INNER_QUAD_EPSREL = 1e-9
# rescale the exponential-series coefficients once they pass this size
RESCALE_LIMIT = 1e200


# ---------------------------------------------------------------------------
# Distance law of the nearest LoS AP
# ---------------------------------------------------------------------------

def ap_intensity(room: RoomGeometry, sys: SystemParams, d: ArrayLike) -> ArrayLike:
    """Lambda_A(d) = lambda_A L(d)"""
    _, length = geometry_service.arc_angle_and_length(room, d)
    return sys.lambda_a * length


def los_intensity(room: RoomGeometry, sys: SystemParams, d: ArrayLike) -> ArrayLike:
    return ap_intensity(room, sys, d) * channel_service.los_probability(d, sys)


def _inner_points(room: RoomGeometry, lo: float, hi: float, extra=()) -> List[float]:
    return sorted({p for p in list(geometry_service.geometric_breakpoints(room)) + list(extra)
                   if lo < p < hi})


def los_mass(room: RoomGeometry, sys: SystemParams, d0: float) -> float:
    """rho(d0): mean number of LoS APs within horizontal distance d0"""
    upper = min(d0, geometry_service.max_corner_distance(room))
    if upper <= 0.0 or sys.lambda_a == 0.0:
        return 0.0
    value, _ = integrate.quad(
        lambda d: los_intensity(room, sys, d), 0.0, upper,
        points=_inner_points(room, 0.0, upper) or None,
        epsabs=1e-12, epsrel=1e-11, limit=Settings.QUAD_LIMIT,
    )
    return value


def void_probability(room: RoomGeometry, sys: SystemParams) -> float:
    """Probability that the room holds no LoS AP"""
    return math.exp(-los_mass(room, sys, geometry_service.max_corner_distance(room)))


def nearest_los_pdf(room: RoomGeometry, sys: SystemParams, d0: float) -> float:
    if d0 < 0:
        raise DomainError(f"distance must be nonnegative, got {d0}")
    return los_intensity(room, sys, d0) * math.exp(-los_mass(room, sys, d0))


def nearest_los_cdf(room: RoomGeometry, sys: SystemParams, d0: float) -> float:
    if d0 < 0:
        raise DomainError(f"distance must be nonnegative, got {d0}")
    return -math.expm1(-los_mass(room, sys, d0))


# ---------------------------------------------------------------------------
# Hitting probabilities and the gain law
# ---------------------------------------------------------------------------

def ap_hit_prob(ap: AntennaParams, sys: SystemParams) -> float:
    """Probability that an interfering AP's beam covers the typical UE"""
    phi_ap = channel_service.ap_depression_limit(ap, sys)
    vertical = min(ap.phi_v / (math.pi / 2 - phi_ap), 1.0)
    horizontal = min(ap.phi_h / (2 * math.pi), 1.0)
    return vertical * horizontal


def segment_hit_prob(theta: float, phi: float) -> float:
    """Chance that two uniform points on an arc of angle theta lie within phi / 2"""
    if theta <= phi / 2:
        return 1.0
    if theta <= 2 * math.pi - phi / 2:
        return phi / theta - (phi / (2 * theta)) ** 2
    return phi / theta + (theta - 2 * math.pi) * (theta - 2 * math.pi + phi) / theta ** 2


def ue_horizontal_hit_prob(room: RoomGeometry, ue: AntennaParams, d0: float) -> float:
    """p_U,H(d0) weighted over the in-room arc segments"""
    segments = geometry_service.segment_angles(room, d0)
    if segments.count == 0:
        return 0.0
    total = segments.total
    return math.fsum((t / total) ** 2 * segment_hit_prob(t, ue.phi_h) for t in segments.angles)


def ue_hit_prob(room: RoomGeometry, ue: AntennaParams, sys: SystemParams,
                d0: float, d_i: float) -> float:
    """Probability that an interferer at distance d_i is inside the UE beam"""
    if d_i < d0 - 1e-12:
        raise DomainError(f"interferer distance {d_i} is closer than the serving AP at {d0}")
    if d_i > channel_service.ue_max_horizontal_distance(ue, sys, d0):
        return 0.0
    return ue_horizontal_hit_prob(room, ue, d0)


def gain_distribution(p_a: float, p_u: float, ap: AntennaParams, ue: AntennaParams) -> GainDistribution:
    if not (0.0 <= p_a <= 1.0 and 0.0 <= p_u <= 1.0):
        raise DomainError(f"hit probabilities must lie in [0, 1], got {p_a}, {p_u}")
    ap_main, ap_side = channel_service.lobe_gains(ap)
    ue_main, ue_side = channel_service.lobe_gains(ue)
    return GainDistribution(
        gains=(ap_main * ue_main, ap_main * ue_side, ap_side * ue_main, ap_side * ue_side),
        probs=(p_a * p_u, p_a * (1 - p_u), (1 - p_a) * p_u, (1 - p_a) * (1 - p_u)),
    )


# ---------------------------------------------------------------------------
# Laplace transform and coverage
# ---------------------------------------------------------------------------

def exp_series(c: np.ndarray) -> np.ndarray:
    """Coefficients a_l of exp(sum_n c_n t^n) = sum_l a_l t^l"""
    n = len(c)
    b = np.zeros(n)
    b[0] = 1.0
    log_scale = float(c[0])
    k = np.arange(1, n, dtype=float)
    for l in range(1, n):
        b[l] = np.dot(k[:l] * c[1:l + 1], b[l - 1::-1]) / l
        if b[l] > RESCALE_LIMIT:
            peak = b[l]
            b[:l + 1] /= peak
            log_scale += math.log(peak)
    with np.errstate(divide='ignore', under='ignore', over='ignore'):
        return np.exp(np.log(b) + log_scale)


class CoverageAnalysisService:
    def __init__(self, scenario: Scenario, inner_epsabs: float = None, outer_epsabs: float = None,
                 quad_limit: int = None, inner_epsrel: float = INNER_QUAD_EPSREL):
        self.scenario = scenario
        self.room = scenario.room
        self.system = scenario.system
        self.ftr = scenario.ftr
        self.inner_epsabs = Settings.INNER_QUAD_EPSABS if inner_epsabs is None else inner_epsabs
        self.inner_epsrel = inner_epsrel
        self.outer_epsabs = Settings.OUTER_QUAD_EPSABS if outer_epsabs is None else outer_epsabs
        self.quad_limit = quad_limit or Settings.QUAD_LIMIT

        self.series = ftr_weights(scenario.ftr, scenario.series)
        self.weights = self.series.as_array()
        # tail[l] = sum_{j >= l} w_j
        self.tail = np.cumsum(self.weights[::-1])[::-1]

        self.ap_main, self.ap_side = channel_service.lobe_gains(scenario.ap)
        self.ue_main, self.ue_side = channel_service.lobe_gains(scenario.ue)
        self.p_a = ap_hit_prob(scenario.ap, self.system)
        self.d_max = geometry_service.max_corner_distance(self.room)
        self.g0 = channel_service.link_constant(self.ap_main, self.ue_main, self.system)
        # c_G = link_scale * G
        self.link_scale = channel_service.link_constant(1.0, 1.0, self.system)
        self.gain_products = np.array([
            self.ap_main * self.ue_main, self.ap_main * self.ue_side,
            self.ap_side * self.ue_main, self.ap_side * self.ue_side,
        ])

        j = np.arange(self.weights.size, dtype=float)
        self._j = j
        with np.errstate(divide='ignore'):
            self._log_w = np.log(self.weights)
        self._log_binom = np.zeros((j.size, 0))
        self._log_binomials(self.weights.size - 1)

        logger.info(f"Coverage analysis ready: {self.weights.size} FTR terms, "
                    f"p_A={self.p_a:.5f}, d_max={self.d_max:.3f} m, "
                    f"trunc_err={self.series.trunc_err:.2e}")

    # distance law -----------------------------------------------------------

    def void_probability(self) -> float:
        return void_probability(self.room, self.system)

    def nearest_los_pdf(self, d0: float) -> float:
        return nearest_los_pdf(self.room, self.system, d0)

    def nearest_los_cdf(self, d0: float) -> float:
        return nearest_los_cdf(self.room, self.system, d0)

    def nearest_los_mean_distance(self) -> float:
        """Mean serving distance given that a LoS AP exists"""
        mass = 1.0 - self.void_probability()
        if mass <= 0.0:
            return math.nan
        value, _ = integrate.quad(
            lambda d: d * self.nearest_los_pdf(d), 0.0, self.d_max,
            points=_inner_points(self.room, 0.0, self.d_max) or None,
            epsabs=1e-10, limit=self.quad_limit,
        )
        return value / mass

    # gains --------------------------------------------------------------------

    def ue_horizontal_hit_prob(self, d0: float) -> float:
        return ue_horizontal_hit_prob(self.room, self.scenario.ue, d0)

    def gain_distribution_at(self, d0: float, d: float) -> GainDistribution:
        p_u = ue_hit_prob(self.room, self.scenario.ue, self.system, d0, d)
        return gain_distribution(self.p_a, p_u, self.scenario.ap, self.scenario.ue)

    def _gain_probs(self, p_u: float) -> np.ndarray:
        p_a = self.p_a
        return np.array([p_a * p_u, p_a * (1 - p_u), (1 - p_a) * p_u, (1 - p_a) * (1 - p_u)])

    # Laplace transform ----------------------------------------------------------

    def _log_binomials(self, l_max: int) -> np.ndarray:
        """log C(j + n, n) for every retained j and n = 1..l_max"""
        if self._log_binom.shape[1] >= l_max:
            return self._log_binom[:, :l_max]
        n = np.arange(1, l_max + 1, dtype=float)
        j = self._j[:, None]
        table = special.gammaln(j + n[None, :] + 1.0) - special.gammaln(j + 1.0) - special.gammaln(n[None, :] + 1.0)
        self._log_binom = table
        return table

    def exponent_coefficients(self, s: float, d0: float, l_max: int,
                              scale: float = 1.0) -> Tuple[np.ndarray, float]:
        """Taylor coefficients c_n of t -> g(s - scale t) at t = 0, n = 0..l_max.

        g is the log-Laplace transform of interference plus noise. Every
        c_n with n >= 1 is nonnegative.
        """
        if s < 0 or d0 < 0 or l_max < 0 or scale <= 0:
            raise DomainError(f"invalid Laplace evaluation point s={s}, d0={d0}, l_max={l_max}, scale={scale}")

        sigma_sq = self.ftr.sigma_sq
        p_uh = self.ue_horizontal_hit_prob(d0)
        r_max = channel_service.ue_max_horizontal_distance(self.scenario.ue, self.system, d0)
        log_binom = self._log_binomials(l_max)
        n = np.arange(1, l_max + 1, dtype=float)
        j = self._j

        def integrand(d: float) -> np.ndarray:
            out = np.zeros(l_max + 1)
            lam = los_intensity(self.room, self.system, d)
            if lam == 0.0:
                return out
            probs = self._gain_probs(p_uh if d <= r_max else 0.0)
            mean_power = self.link_scale * self.gain_products * channel_service.path_gain(d, self.system)
            for pr, cw in zip(probs, mean_power):
                if pr == 0.0:
                    continue
                z = 2.0 * s * sigma_sq * cw
                log1pz = math.log1p(z)
                # 1 - E[exp(-s c H)] without cancellation
                out[0] += pr * float(np.dot(self.weights, -np.expm1(-(j + 1.0) * log1pz)))
                if l_max:
                    log_q = math.log(2.0 * sigma_sq * cw * scale)
                    log_terms = (self._log_w[:, None] + log_binom + n[None, :] * log_q
                                 - (j[:, None] + 1.0 + n[None, :]) * log1pz)
                    out[1:] += pr * np.exp(special.logsumexp(log_terms, axis=0))
            return lam * out

        err = 0.0
        total = np.zeros(l_max + 1)
        if d0 < self.d_max and self.system.lambda_a > 0.0:
            points = _inner_points(self.room, d0, self.d_max, extra=(r_max,) if math.isfinite(r_max) else ())
            with np.errstate(divide='ignore', under='ignore'):
                total, err = integrate.quad_vec(
                    integrand, d0, self.d_max, epsabs=self.inner_epsabs, epsrel=self.inner_epsrel,
                    norm='max', limit=self.quad_limit, points=points or None,
                )
            total = np.asarray(total, dtype=float)

        coeffs = total.copy()
        coeffs[0] = -s * self.system.n0 - total[0]
        if l_max:
            coeffs[1] += scale * self.system.n0
        return coeffs, float(err)

    def laplace_taylor(self, s: float, d0: float, l_max: int, scale: float) -> Tuple[np.ndarray, float]:
        """a_l = (-scale)^l L^(l)(s) / l!, all nonnegative"""
        coeffs, err = self.exponent_coefficients(s, d0, l_max, scale)
        return exp_series(coeffs), err

    def laplace_in_derivatives(self, s: float, d0: float, l_max: int, scale: float = 1.0) -> np.ndarray:
        """scale^l times the l-th derivative of L(s | d0), for l = 0..l_max"""
        a, _ = self.laplace_taylor(s, d0, l_max, scale)
        l = np.arange(l_max + 1, dtype=float)
        signs = np.where(l % 2 == 0, 1.0, -1.0)
        with np.errstate(divide='ignore', over='ignore'):
            return signs * np.exp(special.gammaln(l + 1.0) + np.log(a))

    # coverage ---------------------------------------------------------------------

    def laplace_argument(self, beta: float, d0: float) -> float:
        """s = beta / (2 g0 W(d0) sigma^2)"""
        return beta / (2.0 * self.g0 * channel_service.path_gain(d0, self.system) * self.ftr.sigma_sq)

    def conditional_coverage(self, beta: float, d0: float) -> Tuple[float, float]:
        """Pr(SINR > beta | d0) and the clamp applied to reach [0, 1]"""
        if beta <= 0:
            raise DomainError(f"SINR threshold must be positive, got {beta}")
        s = self.laplace_argument(beta, d0)
        a, _ = self.laplace_taylor(s, d0, self.weights.size - 1, scale=s)
        raw = math.fsum(a * self.tail)
        value = min(max(raw, 0.0), 1.0)
        return value, abs(raw - value)

    def coverage_probability(self, beta: float) -> CoverageResult:
        """Coverage over the nearest-LoS distance law; an empty room is an outage"""
        if beta <= 0:
            raise DomainError(f"SINR threshold must be positive, got {beta}")
        start_time = time.time()
        void = self.void_probability()
        if self.system.lambda_a == 0.0 or void >= 1.0:
            return CoverageResult(coverage=0.0, void_prob=1.0, trunc_err=self.series.trunc_err,
                                  quad_err=0.0, beta=beta)

        clamps = [0.0]

        def integrand(d0: float) -> float:
            density = self.nearest_los_pdf(d0)
            if density == 0.0:
                return 0.0
            value, clamp = self.conditional_coverage(beta, d0)
            clamps.append(clamp)
            return value * density

        value, err, info = integrate.quad(
            integrand, 0.0, self.d_max, points=_inner_points(self.room, 0.0, self.d_max) or None,
            epsabs=self.outer_epsabs, limit=self.quad_limit, full_output=1,
        )[:3]
        if not math.isfinite(value):
            raise ConvergenceError(f"coverage quadrature returned {value} at beta={beta}")
        if err > 100 * self.outer_epsabs:
            logger.warning(f"coverage quadrature error {err:.2e} exceeds tolerance at beta={beta:.4g}")

        coverage = min(max(value, 0.0), 1.0 - void)
        logger.info(f"Coverage {coverage:.6f} at beta={beta:.4g} "
                    f"({info['neval']} outer evaluations, {time.time() - start_time:.2f}s)")
        return CoverageResult(
            coverage=coverage,
            void_prob=void,
            trunc_err=self.series.trunc_err,
            quad_err=float(err),
            clamp_err=max(max(clamps), abs(value - coverage)),
            beta=beta,
        )


@lru_cache(maxsize=16)
def analysis_for(scenario: Scenario) -> CoverageAnalysisService:
    return CoverageAnalysisService(scenario)


def _scenario(room, sys, ap, ue, ftr, ctl) -> Scenario:
    return Scenario(room=room, system=sys, ap=ap, ue=ue, ftr=ftr, series=ctl or SeriesControl())


def laplace_in_derivatives(s: float, d0: float, l_max: int, room: RoomGeometry, sys: SystemParams,
                           ap: AntennaParams, ue: AntennaParams, ftr: FtrParams,
                           ctl: SeriesControl = None, scale: float = 1.0) -> List[float]:
    service = analysis_for(_scenario(room, sys, ap, ue, ftr, ctl))
    return list(service.laplace_in_derivatives(s, d0, l_max, scale))


def conditional_coverage(beta: float, d0: float, room: RoomGeometry, sys: SystemParams,
                         ap: AntennaParams, ue: AntennaParams, ftr: FtrParams,
                         ctl: SeriesControl = None) -> float:
    service = analysis_for(_scenario(room, sys, ap, ue, ftr, ctl))
    return service.conditional_coverage(beta, d0)[0]


def coverage_probability(beta: float, room: RoomGeometry, sys: SystemParams, ap: AntennaParams,
                         ue: AntennaParams, ftr: FtrParams, ctl: SeriesControl = None) -> CoverageResult:
    return analysis_for(_scenario(room, sys, ap, ue, ftr, ctl)).coverage_probability(beta)

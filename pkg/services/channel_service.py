"""
Large-scale THz channel: antenna gains, spreading with molecular absorption,
human blockage and link constants
"""
import math
import logging
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import constants

from models.coverage_models import AntennaParams, SystemParams
from models.exceptions import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SPEED_OF_LIGHT = 3e8
# slack on the beam-width constraint tan(phi_h/2) tan(phi_v/2) <= 1
BEAM_SLACK = 1e-12
# configured and computed lobe gains may differ by this much before we warn
GAIN_TOLERANCE_DB = 1.0


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def dbm_to_watt(value_dbm: float) -> float:
    return db_to_linear(value_dbm) * constants.milli


def _beam_solid_fraction(ant: AntennaParams) -> float:
    arg = math.tan(ant.phi_h / 2) * math.tan(ant.phi_v / 2)
    if arg > 1.0 + BEAM_SLACK:
        raise DomainError(
            f"beam widths {math.degrees(ant.phi_h):.2f}/{math.degrees(ant.phi_v):.2f} deg "
            f"exceed the sectored model (tan product {arg:.6f} > 1)"
        )
    return math.asin(min(arg, 1.0))


def lobe_gains(ant: AntennaParams) -> Tuple[float, float]:
    """Main and side lobe gains of the sectored pattern"""
    spread = _beam_solid_fraction(ant)
    k = ant.k_ratio
    main = math.pi / ((1.0 + k) * spread)
    side = math.pi * k / ((1.0 + k) * (math.pi - spread))
    return main, side


def gain_consistency(ant: AntennaParams, main_dbi: Optional[float] = None,
                     side_dbi: Optional[float] = None, label: str = 'antenna') -> List[str]:
    """Warnings for configured gains that disagree with the beam-width model"""
    main, side = lobe_gains(ant)
    warnings = []
    for name, configured, computed in (('main', main_dbi, main), ('side', side_dbi, side)):
        if configured is None:
            continue
        computed_db = linear_to_db(computed)
        if abs(configured - computed_db) > GAIN_TOLERANCE_DB:
            warnings.append(
                f"{label} {name} lobe: configured {configured:.2f} dBi, "
                f"beam widths give {computed_db:.2f} dBi"
            )
    for message in warnings:
        logger.warning(message)
    return warnings


def path_gain(d: ArrayLike, sys: SystemParams) -> ArrayLike:
    """Spreading and absorption gain W(d) at horizontal distance d"""
    sq = np.asarray(d, dtype=float) ** 2 + sys.delta_h ** 2
    value = np.exp(-sys.absorption * np.sqrt(sq)) / sq
    return float(value) if np.ndim(d) == 0 else value


def blockage_coefficient(sys: SystemParams) -> float:
    """alpha = 2 lambda_B R_B (h_B - h_U) / (h_A - h_U)"""
    return 2.0 * sys.lambda_b * sys.r_b * (sys.h_b - sys.h_u) / (sys.h_a - sys.h_u)


def los_probability(d: ArrayLike, sys: SystemParams) -> ArrayLike:
    """Probability that no human body blocks a link of horizontal length d"""
    value = np.exp(-blockage_coefficient(sys) * np.asarray(d, dtype=float))
    return float(value) if np.ndim(d) == 0 else value


def link_constant(g_tx: float, g_rx: float, sys: SystemParams) -> float:
    return sys.p_t * g_tx * g_rx * SPEED_OF_LIGHT ** 2 / (4.0 * math.pi * sys.freq) ** 2


def ue_max_horizontal_distance(ue: AntennaParams, sys: SystemParams, d0: float) -> float:
    """Farthest interferer still inside the UE's vertical beam when it points at d0"""
    if d0 <= 0.0:
        elevation = math.pi / 2
    else:
        elevation = math.atan(sys.delta_h / d0)
    lower_edge = elevation - ue.phi_v / 2
    if lower_edge <= 0.0:
        return math.inf
    return sys.delta_h / math.tan(lower_edge)


def ap_depression_limit(ap: AntennaParams, sys: SystemParams) -> float:
    """phi_AP = arctan((h_A - h_U) / R_A)"""
    return math.atan(sys.delta_h / ap.r_cov) if math.isfinite(ap.r_cov) else 0.0

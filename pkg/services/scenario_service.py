"""
Scenario Service - flat parameter maps to typed scenarios
"""
import math
import logging
from typing import Any, Dict, List, Optional, Tuple

from config.settings import PLACEMENTS, Settings, DEPLOYMENT_DEFAULTS
from models.coverage_models import (
    AntennaParams, FtrParams, RoomGeometry, Scenario, SeriesControl, SystemParams,
)
from models.exceptions import ConfigError, DomainError
from services import channel_service
from services.validation_service import ValidationService

logger = logging.getLogger(__name__)

UNIT_SUFFIXES = {
    '_dbm': channel_service.dbm_to_watt,
    '_dbi': channel_service.db_to_linear,
    '_db': channel_service.db_to_linear,
    '_deg': math.radians,
}

SCENARIO_KEYS = {
    'r_x', 'r_y', 'delta_x', 'delta_y',
    'lambda_a', 'lambda_b', 'r_b', 'h_a', 'h_u', 'h_b', 'freq', 'bandwidth', 'absorption',
    'p_t', 'n0', 'beta',
    'm', 'big_k', 'delta', 'sigma_sq',
    'ap_main', 'ap_side', 'ap_k_ratio', 'ap_phi_h', 'ap_phi_v', 'ap_r_cov',
    'ue_main', 'ue_side', 'ue_k_ratio', 'ue_phi_h', 'ue_phi_v',
    'series_rel_tol', 'series_j_min', 'series_j_max',
}
# evaluation settings that ride along with the scenario parameters
EXTRA_KEYS = {'d0', 'bin_width', 'ry_ratio', 'placement'}


def split_unit(key: str) -> Tuple[str, Optional[str]]:
    for suffix in UNIT_SUFFIXES:
        if key.endswith(suffix):
            return key[:-len(suffix)], suffix
    return key, None


class ScenarioService:
    def __init__(self):
        self.validation_service = ValidationService()

    def default_parameters(self) -> Dict[str, Any]:
        params = dict(DEPLOYMENT_DEFAULTS)
        params.setdefault('series_rel_tol', Settings.SERIES_REL_TOL)
        params.setdefault('series_j_min', Settings.SERIES_J_MIN)
        params.setdefault('series_j_max', Settings.SERIES_J_MAX)
        return params

    def merge(self, base: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
        """Overlay overrides on base; a key replaces its other-unit spelling"""
        merged = dict(base)
        for key, value in (overrides or {}).items():
            stem, _ = split_unit(key)
            for existing in list(merged):
                if existing != key and split_unit(existing)[0] == stem:
                    del merged[existing]
            merged[key] = value
        return merged

    def to_linear(self, params: Dict[str, Any]) -> Dict[str, Any]:
        """Convert suffixed keys (_db, _dbm, _dbi, _deg) to linear SI values"""
        errors = []
        linear: Dict[str, Any] = {}
        for key, value in params.items():
            stem, suffix = split_unit(key)
            if stem in linear:
                errors.append(f"Parameter '{stem}' given more than once")
                continue
            if stem not in SCENARIO_KEYS and stem not in EXTRA_KEYS:
                errors.append(f"Unknown parameter '{key}'")
                continue
            if stem == 'placement':
                if value not in PLACEMENTS:
                    errors.append(f"Unknown placement '{value}'. Must be one of: {list(PLACEMENTS)}")
                linear[stem] = value
                continue
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                errors.append(f"Parameter '{key}' must be a finite number, got {value!r}")
                continue
            linear[stem] = UNIT_SUFFIXES[suffix](value) if suffix else value
        if errors:
            raise ConfigError("Invalid parameters", errors)
        return linear

    def build(self, params: Dict[str, Any]) -> Scenario:
        """Typed scenario from a flat parameter map, validated"""
        p = self.to_linear(params)
        placement = PLACEMENTS.get(p.get('placement'), {})
        r_x = p.get('r_x')
        r_y = p['ry_ratio'] * r_x if 'ry_ratio' in p and r_x is not None else p.get('r_y')
        try:
            scenario = Scenario(
                room=RoomGeometry(
                    r_x=r_x, r_y=r_y,
                    delta_x=placement.get('delta_x', p.get('delta_x', 0.5)),
                    delta_y=placement.get('delta_y', p.get('delta_y', 0.5)),
                ),
                system=SystemParams(
                    lambda_a=p['lambda_a'], lambda_b=p['lambda_b'], r_b=p['r_b'],
                    h_a=p['h_a'], h_u=p['h_u'], h_b=p['h_b'],
                    freq=p['freq'], absorption=p['absorption'],
                    p_t=p['p_t'], n0=p['n0'], beta=p['beta'],
                    bandwidth=p.get('bandwidth', 0.0),
                ),
                ap=AntennaParams(phi_h=p['ap_phi_h'], phi_v=p['ap_phi_v'],
                                 k_ratio=p['ap_k_ratio'], r_cov=p['ap_r_cov']),
                ue=AntennaParams(phi_h=p['ue_phi_h'], phi_v=p['ue_phi_v'], k_ratio=p['ue_k_ratio']),
                ftr=FtrParams(m=p['m'], big_k=p['big_k'], delta=p['delta'], sigma_sq=p['sigma_sq']),
                series=SeriesControl(
                    rel_tol=p.get('series_rel_tol', Settings.SERIES_REL_TOL),
                    j_min=int(p.get('series_j_min', Settings.SERIES_J_MIN)),
                    j_max=int(p.get('series_j_max', Settings.SERIES_J_MAX)),
                ),
            )
        except KeyError as e:
            raise ConfigError("Missing parameter", [f"'{e.args[0]}' is required"]) from e

        errors = self.validation_service.validate_scenario(scenario)
        if errors:
            raise ConfigError("Scenario validation failed", errors)
        self.gain_warnings(scenario, p)
        return scenario

    def gain_warnings(self, scenario: Scenario, linear: Dict[str, Any]) -> List[str]:
        """Compare configured lobe gains with the beam-width model"""
        warnings = []
        for label, ant in (('ap', scenario.ap), ('ue', scenario.ue)):
            configured = [linear.get(f'{label}_{lobe}') for lobe in ('main', 'side')]
            try:
                warnings.extend(channel_service.gain_consistency(
                    ant,
                    *(channel_service.linear_to_db(g) if g is not None else None for g in configured),
                    label=label.upper(),
                ))
            except DomainError as e:
                raise ConfigError("Antenna model rejected", [str(e)]) from e
        return warnings

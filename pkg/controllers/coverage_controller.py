"""
Coverage Controller
"""
import math
import time
import logging
from datetime import datetime
from typing import Any, Dict, List

from flask_restx import fields

from models.exceptions import ConfigError, CoverageError
from services import analysis_service, channel_service, geometry_service
from services.analysis_service import CoverageAnalysisService
from services.scenario_service import ScenarioService

logger = logging.getLogger(__name__)


class CoverageController:
    def __init__(self, api):
        self.scenario_service = ScenarioService()
        self.api = api

        # Swagger models
        self._define_models()

        # Request metrics
        self.request_stats = {
            'total_requests': 0,
            'successful_requests': 0,
            'failed_requests': 0,
            'average_compute_time': 0.0,
            'total_compute_time': 0.0
        }

    def _define_models(self):
        """Define Swagger models"""
        params_description = ('Flat parameter map; keys ending in _db, _dbm, _dbi or _deg are '
                              'converted to linear SI values. Missing keys take the default deployment.')
        self.coverage_request_model = self.api.model('CoverageRequest', {
            'params': fields.Raw(description=params_description),
            'beta_db': fields.Float(description='SINR threshold in dB (overrides params)')
        })

        self.distance_request_model = self.api.model('DistanceRequest', {
            'params': fields.Raw(description=params_description),
            'd0': fields.List(fields.Float, required=True, description='Horizontal distances in meters')
        })

    # endpoints ------------------------------------------------------------------

    def get_defaults(self) -> Dict[str, Any]:
        return {'success': True, 'data': self.scenario_service.default_parameters()}

    def get_stats(self) -> Dict[str, Any]:
        return {'success': True, 'data': dict(self.request_stats)}

    def compute_coverage(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Coverage probability of the typical UE"""
        def work(params: Dict[str, Any]) -> Dict[str, Any]:
            scenario = self.scenario_service.build(params)
            analysis = CoverageAnalysisService(scenario)
            result = analysis.coverage_probability(scenario.system.beta)
            return {
                **result.to_dict(),
                'meanServingDistance': analysis.nearest_los_mean_distance(),
                'apHitProb': analysis.p_a,
                'lobeGainsDbi': {
                    'apMain': channel_service.linear_to_db(analysis.ap_main),
                    'apSide': channel_service.linear_to_db(analysis.ap_side),
                    'ueMain': channel_service.linear_to_db(analysis.ue_main),
                    'ueSide': channel_service.linear_to_db(analysis.ue_side),
                },
            }

        overrides = {}
        if isinstance(data, dict) and data.get('beta_db') is not None:
            overrides = {'beta_db': data['beta_db']}
        return self._handle('coverage', data, work, overrides)

    def distance_pdf(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Nearest LoS AP distance law at the requested distances"""
        def work(params: Dict[str, Any]) -> Dict[str, Any]:
            scenario = self.scenario_service.build(params)
            room, sys = scenario.room, scenario.system
            d0 = self._distances(data)
            return {
                'd0': d0,
                'pdf': [analysis_service.nearest_los_pdf(room, sys, d) for d in d0],
                'cdf': [analysis_service.nearest_los_cdf(room, sys, d) for d in d0],
                'voidProb': analysis_service.void_probability(room, sys),
                'maxDistance': geometry_service.max_corner_distance(room),
            }

        return self._handle('distance-pdf', data, work)

    def hitting(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """UE horizontal hitting probability and arc segments"""
        def work(params: Dict[str, Any]) -> Dict[str, Any]:
            scenario = self.scenario_service.build(params)
            d0 = self._distances(data)
            return {
                'd0': d0,
                'apHitProb': analysis_service.ap_hit_prob(scenario.ap, scenario.system),
                'ueHorizontalHitProb': [
                    analysis_service.ue_horizontal_hit_prob(scenario.room, scenario.ue, d) for d in d0
                ],
                'segments': [list(geometry_service.segment_angles(scenario.room, d).angles) for d in d0],
                'maxHorizontalDistance': [
                    channel_service.ue_max_horizontal_distance(scenario.ue, scenario.system, d) for d in d0
                ],
            }

        return self._handle('hitting', data, work)

    # helpers --------------------------------------------------------------------

    def _distances(self, data: Dict[str, Any]) -> List[float]:
        d0 = data.get('d0') if isinstance(data, dict) else None
        if not isinstance(d0, list) or not d0:
            raise ConfigError("Invalid request", ["d0 must be a non-empty list of distances"])
        if any(isinstance(d, bool) or not isinstance(d, (int, float)) or not math.isfinite(d) or d < 0
               for d in d0):
            raise ConfigError("Invalid request", ["d0 entries must be finite nonnegative numbers"])
        return [float(d) for d in d0]

    def _handle(self, name: str, data: Dict[str, Any], work, overrides: Dict[str, Any] = None) -> Dict[str, Any]:
        self.request_stats['total_requests'] += 1
        start_time = time.time()
        try:
            if data is not None and not isinstance(data, dict):
                raise ConfigError("Invalid request", ["request body must be a JSON object"])
            supplied = (data or {}).get('params') or {}
            if not isinstance(supplied, dict):
                raise ConfigError("Invalid request", ["params must be an object of parameter values"])
            params = self.scenario_service.merge(self.scenario_service.default_parameters(), supplied)
            params = self.scenario_service.merge(params, overrides)
            logger.info(f"{name} request with {len(supplied)} parameter override(s)")
            result = work(params)
            compute_time = time.time() - start_time

            self.request_stats['successful_requests'] += 1
            self.request_stats['total_compute_time'] += compute_time
            self.request_stats['average_compute_time'] = (
                self.request_stats['total_compute_time'] / self.request_stats['successful_requests']
            )
            return {
                'success': True,
                'data': result,
                'metadata': {
                    'requestTime': datetime.now().isoformat(),
                    'computeTime': compute_time
                }
            }

        except ConfigError as e:
            self.request_stats['failed_requests'] += 1
            logger.warning(f"{name} validation errors: {e.details}")
            return {
                'success': False,
                'error': 'Input validation failed',
                'details': e.details or [str(e)],
                'metadata': {'requestTime': datetime.now().isoformat()}
            }
        except CoverageError as e:
            self.request_stats['failed_requests'] += 1
            logger.error(f"{name} failed: {str(e)}")
            return {
                'success': False,
                'error': str(e),
                'metadata': {
                    'requestTime': datetime.now().isoformat(),
                    'computeTime': time.time() - start_time
                }
            }
        except Exception as e:
            self.request_stats['failed_requests'] += 1
            logger.error(f"{name} request error: {str(e)}")
            return {
                'success': False,
                'error': str(e),
                'metadata': {
                    'requestTime': datetime.now().isoformat(),
                    'computeTime': time.time() - start_time
                }
            }

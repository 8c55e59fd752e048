"""
Validation Service
"""
import math
from typing import Any, Dict, List

from models.coverage_models import (
    AntennaParams, BeamMode, BlockageMode, ExperimentSpec, FtrParams, RoomGeometry, Scenario, SeriesControl,
    SimConfig, SystemParams,
)

EXPERIMENT_NAMES = (
    'dist_pdf', 'hitting', 'coverage_vs_beta', 'coverage_vs_room', 'coverage_vs_density', 'single_point',
)


def _finite(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


class ValidationService:
    def __init__(self):
        pass

    def validate_scenario(self, scenario: Scenario) -> List[str]:
        """Validate every parameter group of a scenario"""
        errors = []
        errors.extend(self.validate_room(scenario.room))
        errors.extend(self.validate_system(scenario.system))
        errors.extend(self.validate_antenna(scenario.ap, 'AP', needs_coverage_radius=True))
        errors.extend(self.validate_antenna(scenario.ue, 'UE'))
        errors.extend(self.validate_ftr(scenario.ftr))
        errors.extend(self.validate_series(scenario.series))
        return errors

    def validate_room(self, room: RoomGeometry) -> List[str]:
        """Validate room dimensions and UE placement"""
        errors = []
        if not _finite(room.r_x) or room.r_x <= 0:
            errors.append("Room length r_x must be positive")
        if not _finite(room.r_y) or room.r_y <= 0:
            errors.append("Room width r_y must be positive")
        for name, value in (('delta_x', room.delta_x), ('delta_y', room.delta_y)):
            if not _finite(value) or not 0.0 < value < 1.0:
                errors.append(f"UE placement {name} must lie strictly between 0 and 1")
        return errors

    def validate_system(self, sys: SystemParams) -> List[str]:
        """Validate densities, heights, carrier and powers"""
        errors = []
        for name in ('lambda_a', 'lambda_b', 'r_b', 'absorption', 'p_t', 'n0', 'bandwidth'):
            value = getattr(sys, name)
            if not _finite(value) or value < 0:
                errors.append(f"{name} must be a nonnegative number")
        if not _finite(sys.freq) or sys.freq <= 0:
            errors.append("Carrier frequency must be positive")
        if not _finite(sys.beta) or sys.beta <= 0:
            errors.append("SINR threshold beta must be positive")
        if not (_finite(sys.h_a) and _finite(sys.h_b) and _finite(sys.h_u)):
            errors.append("Heights must be finite numbers")
        elif not sys.h_a > sys.h_b > sys.h_u > 0:
            errors.append(f"Heights must satisfy h_a > h_b > h_u > 0, got {sys.h_a}, {sys.h_b}, {sys.h_u}")
        return errors

    def validate_antenna(self, ant: AntennaParams, label: str, needs_coverage_radius: bool = False) -> List[str]:
        """Validate a sectored antenna"""
        errors = []
        for name in ('phi_h', 'phi_v'):
            value = getattr(ant, name)
            if not _finite(value) or not 0.0 < value < math.pi:
                errors.append(f"{label} {name} must lie in (0, 180) degrees")
        if not _finite(ant.k_ratio) or ant.k_ratio <= 0:
            errors.append(f"{label} side-lobe ratio k must be positive")
        if needs_coverage_radius and not ant.r_cov > 0:
            errors.append(f"{label} coverage radius must be positive")
        if not errors and math.tan(ant.phi_h / 2) * math.tan(ant.phi_v / 2) > 1.0:
            errors.append(f"{label} beam widths are too wide for the sectored gain model")
        return errors

    def validate_ftr(self, ftr: FtrParams) -> List[str]:
        """Validate fading parameters"""
        errors = []
        if not _finite(ftr.m) or ftr.m <= 0:
            errors.append("FTR m must be positive")
        if not _finite(ftr.big_k) or ftr.big_k < 0:
            errors.append("FTR K must be nonnegative")
        if not _finite(ftr.delta) or not 0.0 <= ftr.delta <= 1.0:
            errors.append("FTR delta must lie in [0, 1]")
        if not _finite(ftr.sigma_sq) or ftr.sigma_sq <= 0:
            errors.append("FTR sigma_sq must be positive")
        return errors

    def validate_series(self, ctl: SeriesControl) -> List[str]:
        errors = []
        if not 0.0 < ctl.rel_tol < 1.0:
            errors.append("Series rel_tol must lie in (0, 1)")
        if not 0 <= ctl.j_min <= ctl.j_max:
            errors.append("Series controls must satisfy 0 <= j_min <= j_max")
        return errors

    def validate_sim_config(self, cfg: SimConfig) -> List[str]:
        errors = []
        if cfg.trials < 1:
            errors.append("Simulation needs at least one trial")
        if not 0 <= cfg.seed < 2 ** 64:
            errors.append("Seed must be a 64-bit nonnegative integer")
        if cfg.workers < 1:
            errors.append("Worker count must be at least 1")
        return errors

    def validate_experiment(self, spec: ExperimentSpec, index: int) -> List[str]:
        """Validate one experiment entry of a run configuration"""
        errors = []
        if spec.name not in EXPERIMENT_NAMES:
            errors.append(f"Experiment {index}: unknown name '{spec.name}'. Must be one of: {list(EXPERIMENT_NAMES)}")
        if spec.sweep_target is not None and not isinstance(spec.sweep_target, str):
            errors.append(f"Experiment {index}: sweep target must be a parameter name")
        for value in spec.sweep_values:
            if not _finite(value):
                errors.append(f"Experiment {index}: sweep value {value!r} is not a finite number")
        if spec.name in ('dist_pdf', 'hitting'):
            for value in spec.sweep_values:
                if _finite(value) and value < 0:
                    errors.append(f"Experiment {index}: distance {value} must be nonnegative")
        if not spec.output_path:
            errors.append(f"Experiment {index}: output path is required")
        errors.extend(f"Experiment {index}: {e}" for e in self.validate_modes(spec.blockage_mode, spec.beam_mode))
        return errors

    def validate_modes(self, blockage_mode: Any, beam_mode: Any) -> List[str]:
        """Validate the simulator's blockage and beam modes"""
        errors = []
        blockage = [m.value for m in BlockageMode]
        beams = [m.value for m in BeamMode]
        if blockage_mode not in blockage:
            errors.append(f"Invalid blockage_mode '{blockage_mode}'. Must be one of: {blockage}")
        if beam_mode not in beams:
            errors.append(f"Invalid beam_mode '{beam_mode}'. Must be one of: {beams}")
        return errors

    def validate_run_config(self, config: Dict[str, Any]) -> List[str]:
        """Validate the top level of a run configuration document"""
        errors = []
        if not isinstance(config, dict):
            return ["Configuration must be a JSON object"]
        seed = config.get('seed', 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
            errors.append("seed must be a nonnegative 64-bit integer")
        trials = config.get('trials', 1)
        if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
            errors.append("trials must be a positive integer")
        if not isinstance(config.get('defaults', {}), dict):
            errors.append("defaults must be an object")
        experiments = config.get('experiments', [])
        if not isinstance(experiments, list):
            errors.append("experiments must be a list")
        elif not all(isinstance(e, dict) for e in experiments):
            errors.append("every experiment must be an object")
        return errors

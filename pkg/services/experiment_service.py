"""
Experiment Service - sweeps of the analysis with optional Monte Carlo points
"""
import os
import json
import math
import time
import logging
import subprocess
from datetime import datetime
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from config.settings import Settings
from models.coverage_models import BeamMode, BlockageMode, ExperimentSpec, Scenario, SimConfig, SimEstimate
from models.exceptions import ConfigError
from services import analysis_service, montecarlo_service
from services.analysis_service import CoverageAnalysisService
from services.scenario_service import ScenarioService
from services.validation_service import ValidationService

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['sweep_value', 'analytic', 'sim_mean', 'sim_stderr', 'void_prob', 'trunc_err']

DEFAULT_SWEEPS: Dict[str, Dict[str, Any]] = {
    'dist_pdf': {'target': 'd0', 'values': [round(0.5 * i, 2) for i in range(1, 25)]},
    'hitting': {'target': 'd0', 'values': [round(0.5 * i, 2) for i in range(1, 25)]},
    'coverage_vs_beta': {'target': 'beta_db', 'values': list(range(-10, 35, 5))},
    'coverage_vs_room': {'target': 'r_x', 'values': list(range(5, 45, 5))},
    'coverage_vs_density': {'target': 'lambda_a', 'values': [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5]},
    'single_point': {'target': None, 'values': []},
}
DEFAULT_OVERRIDES: Dict[str, Dict[str, Any]] = {
    'coverage_vs_room': {'ry_ratio': 0.75, 'beta_db': 20.0},
    'coverage_vs_density': {'beta_db': 10.0},
}
DEFAULT_BIN_WIDTH = 0.25
VERSION_FALLBACK = '1.0.0'


def version_string() -> str:
    """git describe of the working tree, or the release number"""
    try:
        result = subprocess.run(['git', 'describe', '--always', '--dirty', '--tags'],
                                capture_output=True, text=True, timeout=5,
                                cwd=os.path.dirname(os.path.abspath(__file__)))
        if result.returncode == 0 and result.stdout.strip():
            return result.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return VERSION_FALLBACK


class ExperimentService:
    def __init__(self, simulate: bool = True, trials: int = None, seed: int = None, workers: int = None):
        self.simulate = simulate
        self.trials = trials or Settings.DEFAULT_TRIALS
        self.seed = Settings.DEFAULT_SEED if seed is None else seed
        self.workers = workers or Settings.SIM_WORKERS
        self.scenario_service = ScenarioService()
        self.validation_service = ValidationService()
        self.written: List[str] = []

    # configuration ------------------------------------------------------------

    def resolve_config(self, raw: Dict[str, Any], trials: Optional[int] = None,
                       seed: Optional[int] = None, simulate: Optional[bool] = None) -> Dict[str, Any]:
        """Fully explicit configuration; running it again reproduces the outputs"""
        if isinstance(raw, dict) and isinstance(raw.get('config'), dict) and 'experiments' in raw['config']:
            logger.info("Configuration is a run manifest, replaying its resolved config")
            raw = raw['config']
        errors = self.validation_service.validate_run_config(raw)
        if errors:
            raise ConfigError("Invalid run configuration", errors)

        defaults = self.scenario_service.merge(self.scenario_service.default_parameters(),
                                               raw.get('defaults', {}))
        resolved_seed = raw.get('seed', self.seed) if seed is None else seed
        resolved_trials = raw.get('trials', self.trials) if trials is None else trials
        blockage_mode = raw.get('blockage_mode', BlockageMode.BERNOULLI.value)
        beam_mode = raw.get('beam_mode', BeamMode.PROBABILISTIC.value)
        errors = self.validation_service.validate_modes(blockage_mode, beam_mode)
        if errors:
            raise ConfigError("Invalid run configuration", errors)
        experiments = []
        for index, entry in enumerate(raw.get('experiments', []), start=1):
            name = entry.get('name')
            fallback = DEFAULT_SWEEPS.get(name, {'target': None, 'values': []})
            sweep = dict(fallback, **(entry.get('sweep') or {}))
            spec = ExperimentSpec(
                name=name,
                sweep_target=sweep.get('target'),
                sweep_values=list(sweep.get('values', [])),
                overrides=self.scenario_service.merge(DEFAULT_OVERRIDES.get(name, {}),
                                                      entry.get('overrides', {})),
                output_path=entry.get('output') or f"{name}_{index}.csv",
                blockage_mode=entry.get('blockage_mode', blockage_mode),
                beam_mode=entry.get('beam_mode', beam_mode),
            )
            errors = self.validation_service.validate_experiment(spec, index)
            if not errors:
                errors = self.validation_service.validate_sim_config(
                    self.sim_config(spec, trials=resolved_trials, seed=resolved_seed))
            if errors:
                raise ConfigError("Invalid experiment", errors)
            # fail early on parameter errors
            self.scenario_service.to_linear(self.scenario_service.merge(defaults, spec.overrides))
            experiments.append({
                'name': spec.name,
                'sweep': {'target': spec.sweep_target, 'values': spec.sweep_values},
                'overrides': spec.overrides,
                'output': spec.output_path,
                'blockage_mode': spec.blockage_mode,
                'beam_mode': spec.beam_mode,
            })

        return {
            'seed': resolved_seed,
            'trials': resolved_trials,
            'simulate': raw.get('simulate', self.simulate) if simulate is None else simulate,
            'blockage_mode': blockage_mode,
            'beam_mode': beam_mode,
            'defaults': defaults,
            'experiments': experiments,
        }

    # running ----------------------------------------------------------------------

    def run(self, config: Dict[str, Any], out_dir: str) -> Dict[str, Any]:
        """Run every experiment of a resolved config and write CSVs plus the manifest"""
        start_time = time.time()
        started_at = datetime.now().isoformat()
        self.seed = config['seed']
        self.trials = config['trials']
        self.simulate = config['simulate']
        os.makedirs(out_dir, exist_ok=True)

        outputs = []
        diagnostics = {}
        for entry in config['experiments']:
            spec = ExperimentSpec(name=entry['name'], sweep_target=entry['sweep']['target'],
                                  sweep_values=entry['sweep']['values'], overrides=entry['overrides'],
                                  output_path=entry['output'],
                                  blockage_mode=entry.get('blockage_mode', BlockageMode.BERNOULLI.value),
                                  beam_mode=entry.get('beam_mode', BeamMode.PROBABILISTIC.value))
            params = self.scenario_service.merge(config['defaults'], spec.overrides)
            logger.info(f"Running experiment {spec.name} over {len(spec.sweep_values) or 1} point(s)")
            frame = self.run_experiment(spec, params)
            path = os.path.join(out_dir, spec.output_path)
            self.write_csv(frame, path)
            outputs.append(spec.output_path)
            diagnostics[spec.output_path] = self.describe(spec, frame)

        manifest = {
            'version': version_string(),
            'seed': config['seed'],
            'trials': config['trials'],
            'startedAt': started_at,
            'wallClockSeconds': round(time.time() - start_time, 3),
            'outputs': outputs,
            'diagnostics': diagnostics,
            'config': config,
        }
        manifest_path = os.path.join(out_dir, 'manifest.json')
        self.written.append(manifest_path)
        with open(manifest_path, 'w', encoding='utf-8') as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        logger.info(f"Manifest written to {manifest_path}")
        return manifest

    def remove_outputs(self) -> None:
        for path in self.written:
            try:
                os.remove(path)
                logger.info(f"Removed partial output {path}")
            except FileNotFoundError:
                pass
        self.written = []

    def write_csv(self, frame: pd.DataFrame, path: str) -> None:
        self.written.append(path)
        frame.to_csv(path, index=False, columns=CSV_COLUMNS, encoding='utf-8',
                     float_format='%.12g', lineterminator='\n')

    def sim_config(self, spec: ExperimentSpec, **overrides) -> SimConfig:
        """Simulator settings for one experiment, in the modes it selects"""
        settings = dict(trials=self.trials, seed=self.seed, workers=self.workers,
                        chunk_size=Settings.SIM_CHUNK_SIZE)
        settings.update(overrides)
        return SimConfig(blockage_mode=BlockageMode(spec.blockage_mode),
                         beam_mode=BeamMode(spec.beam_mode), **settings)

    def run_experiment(self, spec: ExperimentSpec, params: Dict[str, Any]) -> pd.DataFrame:
        handlers = {
            'dist_pdf': self._distance_pdf,
            'hitting': self._hitting,
            'coverage_vs_beta': self._coverage_vs_beta,
            'coverage_vs_room': self._coverage_sweep,
            'coverage_vs_density': self._coverage_sweep,
            'single_point': self._coverage_sweep,
        }
        rows = handlers[spec.name](spec, params)
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    # experiment bodies ------------------------------------------------------------

    def _scenario(self, params: Dict[str, Any]) -> Scenario:
        return self.scenario_service.build(params)

    @staticmethod
    def _row(value, analytic, sim=None, void=math.nan, trunc=0.0) -> Dict[str, float]:
        return {
            'sweep_value': value,
            'analytic': analytic,
            'sim_mean': sim.mean if sim is not None else math.nan,
            'sim_stderr': sim.stderr if sim is not None else math.nan,
            'void_prob': void,
            'trunc_err': trunc,
        }

    def _distance_pdf(self, spec: ExperimentSpec, params: Dict[str, Any]) -> List[Dict[str, float]]:
        scenario = self._scenario(params)
        room, sys = scenario.room, scenario.system
        void = analysis_service.void_probability(room, sys)
        histogram = None
        if self.simulate:
            bin_width = float(params.get('bin_width', DEFAULT_BIN_WIDTH))
            histogram = montecarlo_service.simulate_distance_pdf(room, sys, self.sim_config(spec), bin_width)
        rows = []
        for d0 in spec.sweep_values:
            sim = None
            if histogram is not None:
                idx = histogram.bin_of(d0)
                if idx is not None:
                    sim = SimEstimate(mean=float(histogram.density[idx]),
                                      stderr=float(histogram.stderr[idx]),
                                      trials=histogram.trials)
            rows.append(self._row(d0, analysis_service.nearest_los_pdf(room, sys, d0), sim, void))
        return rows

    def _hitting(self, spec: ExperimentSpec, params: Dict[str, Any]) -> List[Dict[str, float]]:
        scenario = self._scenario(params)
        void = analysis_service.void_probability(scenario.room, scenario.system)
        rows = []
        for d0 in spec.sweep_values:
            analytic = analysis_service.ue_horizontal_hit_prob(scenario.room, scenario.ue, d0)
            sim = None
            if self.simulate and analytic > 0.0:
                sim = montecarlo_service.simulate_hitting(scenario.room, scenario.system, scenario.ue,
                                                          d0, self.sim_config(spec))
            rows.append(self._row(d0, analytic, sim, void))
        return rows

    def _coverage_vs_beta(self, spec: ExperimentSpec, params: Dict[str, Any]) -> List[Dict[str, float]]:
        target = spec.sweep_target or 'beta_db'
        if target not in ('beta_db', 'beta'):
            return self._coverage_sweep(spec, params)
        scenario = self._scenario(params)
        analysis = CoverageAnalysisService(scenario)
        betas = [10 ** (v / 10) if target == 'beta_db' else v for v in spec.sweep_values]
        sims = [None] * len(betas)
        if self.simulate and betas:
            sims = montecarlo_service.simulate_coverage(
                scenario.room, scenario.system, scenario.ap, scenario.ue, scenario.ftr,
                betas, self.sim_config(spec))
        rows = []
        for value, beta, sim in zip(spec.sweep_values, betas, sims):
            result = analysis.coverage_probability(beta)
            rows.append(self._row(value, result.coverage, sim, result.void_prob, result.trunc_err))
        return rows

    def _coverage_sweep(self, spec: ExperimentSpec, params: Dict[str, Any]) -> List[Dict[str, float]]:
        points = [(v, self.scenario_service.merge(params, {spec.sweep_target: v}))
                  for v in spec.sweep_values] if spec.sweep_target else []
        if not points:
            beta_key = next((k for k in params if k in ('beta_db', 'beta')), 'beta_db')
            points = [(params.get(beta_key), params)]
        rows = []
        for value, point in points:
            scenario = self._scenario(point)
            result = CoverageAnalysisService(scenario).coverage_probability(scenario.system.beta)
            sim = None
            if self.simulate:
                sim = montecarlo_service.simulate_coverage(
                    scenario.room, scenario.system, scenario.ap, scenario.ue, scenario.ftr,
                    scenario.system.beta, self.sim_config(spec))
            rows.append(self._row(value, result.coverage, sim, result.void_prob, result.trunc_err))
        return rows

    # diagnostics --------------------------------------------------------------------

    def describe(self, spec: ExperimentSpec, frame: pd.DataFrame) -> Dict[str, Any]:
        """Qualitative checks logged next to each table"""
        values = frame['analytic'].to_numpy(dtype=float)
        info: Dict[str, Any] = {'rows': int(len(frame))}
        if len(values) > 1:
            steps = np.diff(values)
            info['nonIncreasing'] = bool(np.all(steps <= 1e-9))
            info['nonDecreasing'] = bool(np.all(steps >= -1e-9))
            peak = int(np.nanargmax(values))
            info['argmax'] = float(frame['sweep_value'].iloc[peak])
        if spec.name == 'coverage_vs_beta' and info.get('nonIncreasing') is False:
            logger.warning(f"{spec.output_path}: coverage is not monotone in the threshold")
        if spec.name in ('coverage_vs_density', 'coverage_vs_room') and 'argmax' in info:
            logger.info(f"{spec.output_path}: analytic coverage peaks at {spec.sweep_target}={info['argmax']}")
        return info

"""
Application Settings
"""
import os
import logging
from typing import Dict, Any


class Settings:
    """Application settings"""

    # Series truncation
    SERIES_REL_TOL = float(os.getenv('SERIES_REL_TOL', '1e-12'))
    SERIES_J_MIN = int(os.getenv('SERIES_J_MIN', '20'))
    SERIES_J_MAX = int(os.getenv('SERIES_J_MAX', '200'))

    # Quadrature
    INNER_QUAD_EPSABS = float(os.getenv('INNER_QUAD_EPSABS', '1e-8'))
    OUTER_QUAD_EPSABS = float(os.getenv('OUTER_QUAD_EPSABS', '1e-6'))
    QUAD_LIMIT = int(os.getenv('QUAD_LIMIT', '200'))

    # Monte Carlo
    DEFAULT_TRIALS = int(os.getenv('DEFAULT_TRIALS', '1000000'))
    DEFAULT_SEED = int(os.getenv('DEFAULT_SEED', '20240611'))
    SIM_WORKERS = int(os.getenv('THZCOV_WORKERS', '1'))
    SIM_CHUNK_SIZE = int(os.getenv('SIM_CHUNK_SIZE', '20000'))

    # Server Configuration
    HOST = os.getenv('HOST', '0.0.0.0')
    PORT = int(os.getenv('PORT', '5000'))
    DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'

    # Logging Configuration
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('LOG_FILE', 'thz_coverage.log')

    # CORS Configuration
    CORS_ORIGINS = os.getenv('CORS_ORIGINS', '*').split(',')

    @classmethod
    def get_config(cls) -> Dict[str, Any]:
        """Get current configuration"""
        return {
            'seriesRelTol': cls.SERIES_REL_TOL,
            'seriesJMin': cls.SERIES_J_MIN,
            'seriesJMax': cls.SERIES_J_MAX,
            'innerQuadEpsabs': cls.INNER_QUAD_EPSABS,
            'outerQuadEpsabs': cls.OUTER_QUAD_EPSABS,
            'quadLimit': cls.QUAD_LIMIT,
            'defaultTrials': cls.DEFAULT_TRIALS,
            'defaultSeed': cls.DEFAULT_SEED,
            'simWorkers': cls.SIM_WORKERS,
            'simChunkSize': cls.SIM_CHUNK_SIZE,
            'host': cls.HOST,
            'port': cls.PORT,
            'debug': cls.DEBUG,
            'logLevel': cls.LOG_LEVEL,
            'logFile': cls.LOG_FILE,
            'corsOrigins': cls.CORS_ORIGINS,
        }

    @classmethod
    def configure_logging(cls, level: str = None) -> None:
        """File plus console logging, shared by the server and the runner"""
        logging.basicConfig(
            level=getattr(logging, (level or cls.LOG_LEVEL).upper(), logging.INFO),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(cls.LOG_FILE),
                logging.StreamHandler()
            ]
        )


# Reference indoor deployment. Keys with a unit
# suffix are converted to linear SI values by the scenario service.
DEPLOYMENT_DEFAULTS: Dict[str, Any] = {
    'r_x': 20.0,
    'r_y': 15.0,
    'delta_x': 0.5,
    'delta_y': 0.5,
    'lambda_a': 0.1,
    'lambda_b': 0.1,
    'r_b': 0.25,
    'h_a': 3.0,
    'h_u': 1.0,
    'h_b': 1.7,
    'freq': 300e9,
    'bandwidth': 5e9,
    'absorption': 0.00143,
    'p_t_dbm': 5.0,
    'n0_dbm': -77.0,
    'beta_db': 10.0,
    'm': 2.0,
    'big_k': 4.0,
    # no reference value for delta; 0.5 is a mid-range choice
    'delta': 0.5,
    'sigma_sq': 0.1,
    'ap_main_dbi': 25.0,
    'ap_side_dbi': -10.0,
    'ap_k_ratio': 0.1,
    'ap_phi_h_deg': 10.0,
    'ap_phi_v_deg': 10.0,
    'ap_r_cov': 20.0,
    'ue_main_dbi': 15.0,
    'ue_side_dbi': -10.0,
    'ue_k_ratio': 0.1,
    'ue_phi_h_deg': 33.0,
    'ue_phi_v_deg': 33.0,
}

PLACEMENTS: Dict[str, Dict[str, float]] = {
    'center': {'delta_x': 1 / 2, 'delta_y': 1 / 2},
    'near_center': {'delta_x': 1 / 5, 'delta_y': 1 / 5},
    'corner': {'delta_x': 1 / 20, 'delta_y': 1 / 15},
}

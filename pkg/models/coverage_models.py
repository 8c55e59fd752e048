"""
Coverage Data Models
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class FtrParams:
    """Fluctuating two-ray fading parameters"""
    m: float = 2.0
    big_k: float = 4.0
    delta: float = 0.5
    sigma_sq: float = 0.1

    @property
    def mean_power(self) -> float:
        return 2.0 * self.sigma_sq * (1.0 + self.big_k)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation controls for the infinite series"""
    rel_tol: float = 1e-12
    j_min: int = 20
    j_max: int = 200


@dataclass(frozen=True)
class FtrSeries:
    """Mixture weights w_j of the FTR law, truncated and renormalized"""
    weights: Tuple[float, ...]
    trunc_err: float

    @property
    def terms(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class RoomGeometry:
    r_x: float
    r_y: float
    delta_x: float = 0.5
    delta_y: float = 0.5

    @property
    def r_x1(self) -> float:
        return self.delta_x * self.r_x

    @property
    def r_x2(self) -> float:
        return self.r_x - self.r_x1

    @property
    def r_y1(self) -> float:
        return self.delta_y * self.r_y

    @property
    def r_y2(self) -> float:
        return self.r_y - self.r_y1

    @property
    def wall_distances(self) -> Tuple[float, float, float, float]:
        """Distances to the left, right, front and rear walls"""
        return (self.r_x1, self.r_x2, self.r_y1, self.r_y2)

    @property
    def ue_position(self) -> Tuple[float, float]:
        return (self.r_x1, self.r_y1)

    @property
    def area(self) -> float:
        return self.r_x * self.r_y


@dataclass(frozen=True)
class SegmentSet:
    """Angles of the arc segments of a circle that lie inside the room"""
    angles: Tuple[float, ...] = ()

    @property
    def count(self) -> int:
        return len(self.angles)

    @property
    def total(self) -> float:
        return math.fsum(self.angles)


class IntersectionCounts(NamedTuple):
    xi_x1: int
    xi_x2: int
    xi_y1: int
    xi_y2: int
    total: int


@dataclass(frozen=True)
class SystemParams:
    """Densities, heights, carrier and power levels, all linear SI units"""
    lambda_a: float = 0.1
    lambda_b: float = 0.1
    r_b: float = 0.25
    h_a: float = 3.0
    h_u: float = 1.0
    h_b: float = 1.7
    freq: float = 300e9
    absorption: float = 0.00143
    p_t: float = 10 ** (5 / 10) * 1e-3
    n0: float = 10 ** (-77 / 10) * 1e-3
    beta: float = 10.0
    bandwidth: float = 5e9

    @property
    def delta_h(self) -> float:
        return self.h_a - self.h_u


@dataclass(frozen=True)
class AntennaParams:
    """Two-level sectored antenna; r_cov is only used on the AP side"""
    phi_h: float
    phi_v: float
    k_ratio: float = 0.1
    r_cov: float = math.inf


@dataclass(frozen=True)
class GainDistribution:
    """Four-point law of the product of transmit and receive gains"""
    gains: Tuple[float, float, float, float]
    probs: Tuple[float, float, float, float]

    LABELS = ('main-main', 'main-side', 'side-main', 'side-side')

    def pairs(self) -> List[Tuple[float, float]]:
        return list(zip(self.gains, self.probs))

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {
            label: {'gain': g, 'probability': p}
            for label, g, p in zip(self.LABELS, self.gains, self.probs)
        }


@dataclass(frozen=True)
class Scenario:
    """Everything the analysis needs about one deployment"""
    room: RoomGeometry
    system: SystemParams
    ap: AntennaParams
    ue: AntennaParams
    ftr: FtrParams = field(default_factory=FtrParams)
    series: SeriesControl = field(default_factory=SeriesControl)


@dataclass
class CoverageResult:
    coverage: float
    void_prob: float
    trunc_err: float
    quad_err: float
    clamp_err: float = 0.0
    beta: float = float('nan')

    def to_dict(self) -> Dict[str, float]:
        return {
            'coverage': self.coverage,
            'voidProb': self.void_prob,
            'truncErr': self.trunc_err,
            'quadErr': self.quad_err,
            'clampErr': self.clamp_err,
            'beta': self.beta,
        }


class BlockageMode(str, Enum):
    BERNOULLI = 'bernoulli'
    CYLINDER = 'cylinder'


class BeamMode(str, Enum):
    PROBABILISTIC = 'probabilistic'
    GEOMETRIC = 'geometric'


@dataclass
class Scene:
    """One realization of the room: AP and blocker centers plus the UE"""
    ap_positions: np.ndarray
    blocker_positions: np.ndarray
    ue_position: np.ndarray
    rng_state: np.random.Generator

    @property
    def ap_count(self) -> int:
        return int(self.ap_positions.shape[0])

    def ap_distances(self) -> np.ndarray:
        return np.hypot(*(self.ap_positions - self.ue_position).T)


@dataclass(frozen=True)
class SimConfig:
    trials: int = 1_000_000
    seed: int = 0
    blockage_mode: BlockageMode = BlockageMode.BERNOULLI
    beam_mode: BeamMode = BeamMode.PROBABILISTIC
    workers: int = 1
    chunk_size: int = 20_000


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    stderr: float
    trials: int


@dataclass
class DistanceHistogram:
    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    void_fraction: float
    void_stderr: float
    trials: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def bin_of(self, d: float) -> Optional[int]:
        idx = int(np.searchsorted(self.edges, d, side='right')) - 1
        if idx < 0 or idx >= self.density.size:
            return None
        return idx


@dataclass
class ExperimentSpec:
    name: str
    sweep_target: Optional[str] = None
    sweep_values: List[Any] = field(default_factory=list)
    overrides: Dict[str, Any] = field(default_factory=dict)
    output_path: str = ''
    blockage_mode: str = BlockageMode.BERNOULLI.value
    beam_mode: str = BeamMode.PROBABILISTIC.value

"""
Monte Carlo Service - scene-level simulation of the indoor THz downlink
"""
import math
import time
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.coverage_models import (
    AntennaParams, BeamMode, BlockageMode, DistanceHistogram, FtrParams, RoomGeometry,
    Scene, SimConfig, SimEstimate, SystemParams,
)
from models.exceptions import DomainError
from services import channel_service, geometry_service
from services.analysis_service import ap_hit_prob, ue_horizontal_hit_prob

logger = logging.getLogger(__name__)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of the schedule"""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, trial]))


def _chunks(trials: int, chunk_size: int) -> List[Tuple[int, int]]:
    size = max(1, chunk_size)
    return [(start, min(start + size, trials)) for start in range(0, trials, size)]


def _run_chunks(worker: Callable, args: tuple, cfg: SimConfig) -> np.ndarray:
    """Sum integer tallies over trial chunks, in a process pool when asked"""
    chunks = _chunks(cfg.trials, cfg.chunk_size)
    if cfg.workers <= 1 or len(chunks) == 1:
        parts = [worker(*args, start, stop) for start, stop in chunks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(worker, *args, start, stop) for start, stop in chunks]
            parts = [f.result() for f in futures]
    return np.sum(parts, axis=0)


# ---------------------------------------------------------------------------
# Scene primitives
# ---------------------------------------------------------------------------

def sample_scene(room: RoomGeometry, sys: SystemParams, rng: np.random.Generator) -> Scene:
    """Poisson APs and blocker centers, uniform over the room floor"""
    def uniform_points(density: float) -> np.ndarray:
        count = rng.poisson(density * room.area) if density > 0 else 0
        return rng.uniform((0.0, 0.0), (room.r_x, room.r_y), size=(count, 2))

    aps = uniform_points(sys.lambda_a)
    blockers = uniform_points(sys.lambda_b)
    return Scene(ap_positions=aps, blocker_positions=blockers,
                 ue_position=np.array(room.ue_position, dtype=float), rng_state=rng)


def _segment_blocked(ue: np.ndarray, targets: np.ndarray, lengths: np.ndarray,
                     blockers: np.ndarray, radius: float) -> np.ndarray:
    """Whether any blocker center lies within radius of each ground segment"""
    if blockers.shape[0] == 0 or targets.shape[0] == 0:
        return np.zeros(targets.shape[0], dtype=bool)
    direction = targets - ue
    norm = np.hypot(direction[:, 0], direction[:, 1])
    unit = np.divide(direction, norm[:, None], out=np.zeros_like(direction), where=norm[:, None] > 0)
    along = np.clip(unit @ (blockers - ue).T, 0.0, lengths[:, None])
    closest = ue[None, None, :] + along[:, :, None] * unit[:, None, :]
    gap = np.hypot(*(blockers[None, :, :] - closest).transpose(2, 0, 1))
    return np.any(gap < radius, axis=1)


def los_mask(scene: Scene, sys: SystemParams, mode: BlockageMode) -> np.ndarray:
    """LoS state of every AP in the scene"""
    d = scene.ap_distances()
    if mode == BlockageMode.BERNOULLI:
        return scene.rng_state.random(d.size) < channel_service.los_probability(d, sys)
    lengths = d * (sys.h_b - sys.h_u) / (sys.h_a - sys.h_u)
    return ~_segment_blocked(scene.ue_position, scene.ap_positions, lengths,
                             scene.blocker_positions, sys.r_b)


def is_los(scene: Scene, ap_index: int, sys: SystemParams, mode: BlockageMode) -> bool:
    if not 0 <= ap_index < scene.ap_count:
        raise DomainError(f"AP index {ap_index} out of range for {scene.ap_count} APs")
    single = Scene(ap_positions=scene.ap_positions[ap_index:ap_index + 1],
                   blocker_positions=scene.blocker_positions,
                   ue_position=scene.ue_position, rng_state=scene.rng_state)
    return bool(los_mask(single, sys, mode)[0])


def sample_ftr(p: FtrParams, rng: np.random.Generator,
               size: Optional[Union[int, Tuple[int, ...]]] = None) -> Union[float, np.ndarray]:
    """Power gain of two shadowed specular waves plus diffuse Gaussian scatter"""
    zeta = rng.gamma(p.m, 1.0 / p.m, size)
    spread = math.sqrt(max(1.0 - p.delta ** 2, 0.0))
    v1 = math.sqrt(p.sigma_sq * p.big_k * (1.0 + spread))
    v2 = math.sqrt(p.sigma_sq * p.big_k * (1.0 - spread))
    phase1 = rng.uniform(0.0, 2 * math.pi, size)
    phase2 = rng.uniform(0.0, 2 * math.pi, size)
    scatter_re = rng.normal(0.0, math.sqrt(p.sigma_sq), size)
    scatter_im = rng.normal(0.0, math.sqrt(p.sigma_sq), size)
    amp = np.sqrt(zeta)
    re = amp * (v1 * np.cos(phase1) + v2 * np.cos(phase2)) + scatter_re
    im = amp * (v1 * np.sin(phase1) + v2 * np.sin(phase2)) + scatter_im
    power = re ** 2 + im ** 2
    return float(power) if size is None else power


# ---------------------------------------------------------------------------
# Coverage
# ---------------------------------------------------------------------------

def _wrap(angle: np.ndarray) -> np.ndarray:
    """Map angles to (-pi, pi]"""
    return np.angle(np.exp(1j * angle))


def _interferer_gains(rng: np.random.Generator, scene: Scene, serving: int, others: np.ndarray,
                      d: np.ndarray, sys: SystemParams, ap: AntennaParams, ue: AntennaParams,
                      mode: BeamMode, gains: Tuple[float, float, float, float],
                      p_a: float, p_uh: float, r_max: float) -> np.ndarray:
    ap_main, ap_side, ue_main, ue_side = gains
    n = others.size
    if mode == BeamMode.PROBABILISTIC:
        ap_hit = rng.random(n) < p_a
        ue_hit = (rng.random(n) < p_uh) & (d[others] <= r_max)
    else:
        # AP beams point at a uniformly drawn spot on the floor
        phi_ap = channel_service.ap_depression_limit(ap, sys)
        depression = rng.uniform(phi_ap, math.pi / 2, n)
        azimuth = rng.uniform(0.0, 2 * math.pi, n)
        to_ue = scene.ue_position - scene.ap_positions[others]
        bearing = np.arctan2(to_ue[:, 1], to_ue[:, 0])
        tilt = np.arctan2(sys.delta_h, d[others])
        ap_hit = ((np.abs(_wrap(bearing - azimuth)) < ap.phi_h / 2)
                  & (np.abs(tilt - depression) < ap.phi_v / 2))
        # UE beam points at the serving AP
        rel = scene.ap_positions - scene.ue_position
        angles = np.arctan2(rel[:, 1], rel[:, 0])
        elevation = np.arctan2(sys.delta_h, d)
        ue_hit = ((np.abs(_wrap(angles[others] - angles[serving])) < ue.phi_h / 2)
                  & (np.abs(elevation[others] - elevation[serving]) <= ue.phi_v / 2))
    return (np.where(ap_hit, ap_main, ap_side) * np.where(ue_hit, ue_main, ue_side))


def _coverage_chunk(room: RoomGeometry, sys: SystemParams, ap: AntennaParams, ue: AntennaParams,
                    ftr: FtrParams, betas: np.ndarray, cfg: SimConfig,
                    start: int, stop: int) -> np.ndarray:
    """Counts of SINR above each threshold over trials [start, stop)"""
    ap_main, ap_side = channel_service.lobe_gains(ap)
    ue_main, ue_side = channel_service.lobe_gains(ue)
    gains = (ap_main, ap_side, ue_main, ue_side)
    scale = channel_service.link_constant(1.0, 1.0, sys)
    p_a = ap_hit_prob(ap, sys)
    hits = np.zeros(betas.size, dtype=np.int64)

    for trial in range(start, stop):
        rng = trial_rng(cfg.seed, trial)
        scene = sample_scene(room, sys, rng)
        if scene.ap_count == 0:
            continue
        los = los_mask(scene, sys, cfg.blockage_mode)
        if not los.any():
            continue
        d = scene.ap_distances()
        candidates = np.flatnonzero(los)
        serving = int(candidates[np.argmin(d[candidates])])
        others = candidates[candidates != serving]
        d0 = float(d[serving])

        signal = scale * ap_main * ue_main * channel_service.path_gain(d0, sys) * sample_ftr(ftr, rng)
        interference = 0.0
        if others.size:
            p_uh = ue_horizontal_hit_prob(room, ue, d0) if cfg.beam_mode == BeamMode.PROBABILISTIC else 0.0
            r_max = channel_service.ue_max_horizontal_distance(ue, sys, d0)
            g = _interferer_gains(rng, scene, serving, others, d, sys, ap, ue, cfg.beam_mode,
                                  gains, p_a, p_uh, r_max)
            fading = sample_ftr(ftr, rng, others.size)
            interference = float(np.sum(scale * g * channel_service.path_gain(d[others], sys) * fading))
        sinr = signal / (interference + sys.n0)
        hits += sinr > betas
    return hits


def _estimate(hits: np.ndarray, trials: int) -> List[SimEstimate]:
    p = hits / trials
    err = np.sqrt(p * (1.0 - p) / trials)
    return [SimEstimate(mean=float(m), stderr=float(e), trials=trials) for m, e in zip(p, err)]


def simulate_coverage(room: RoomGeometry, sys: SystemParams, ap: AntennaParams, ue: AntennaParams,
                      ftr: FtrParams, beta: Union[float, Sequence[float]],
                      cfg: SimConfig) -> Union[SimEstimate, List[SimEstimate]]:
    """Empirical Pr(SINR > beta); one pass serves every threshold given"""
    if cfg.trials < 1:
        raise DomainError("simulation needs at least one trial")
    betas = np.atleast_1d(np.asarray(beta, dtype=float))
    start_time = time.time()
    hits = _run_chunks(_coverage_chunk, (room, sys, ap, ue, ftr, betas, cfg), cfg)
    estimates = _estimate(hits, cfg.trials)
    logger.info(f"Simulated coverage over {cfg.trials} trials "
                f"({cfg.blockage_mode.value}/{cfg.beam_mode.value}) in {time.time() - start_time:.1f}s")
    return estimates[0] if np.ndim(beta) == 0 else estimates


# ---------------------------------------------------------------------------
# Distance law and hitting probability
# ---------------------------------------------------------------------------

def _distance_chunk(room: RoomGeometry, sys: SystemParams, cfg: SimConfig, edges: np.ndarray,
                    start: int, stop: int) -> np.ndarray:
    """Histogram counts with the void tally in the last slot"""
    counts = np.zeros(edges.size, dtype=np.int64)
    for trial in range(start, stop):
        scene = sample_scene(room, sys, trial_rng(cfg.seed, trial))
        los = los_mask(scene, sys, cfg.blockage_mode) if scene.ap_count else np.zeros(0, dtype=bool)
        if not los.any():
            counts[-1] += 1
            continue
        d0 = scene.ap_distances()[los].min()
        idx = min(int(np.searchsorted(edges, d0, side='right')) - 1, edges.size - 2)
        counts[idx] += 1
    return counts


def simulate_distance_pdf(room: RoomGeometry, sys: SystemParams, cfg: SimConfig,
                          bin_width: float) -> DistanceHistogram:
    """Normalized histogram of the nearest LoS distance; empty rooms tallied apart"""
    if bin_width <= 0:
        raise DomainError(f"bin width must be positive, got {bin_width}")
    d_max = geometry_service.max_corner_distance(room)
    edges = np.arange(0.0, d_max + bin_width, bin_width)
    counts = _run_chunks(_distance_chunk, (room, sys, cfg, edges), cfg)
    n = cfg.trials
    frac = counts[:-1] / n
    void = counts[-1] / n
    return DistanceHistogram(
        edges=edges,
        density=frac / bin_width,
        stderr=np.sqrt(frac * (1.0 - frac) / n) / bin_width,
        void_fraction=float(void),
        void_stderr=float(math.sqrt(void * (1.0 - void) / n)),
        trials=n,
    )


def _sample_on_arc(rng: np.random.Generator, spans: List[Tuple[float, float]], size: int) -> np.ndarray:
    lengths = np.array([hi - lo for lo, hi in spans])
    offsets = np.concatenate([[0.0], np.cumsum(lengths)])
    u = rng.uniform(0.0, offsets[-1], size)
    idx = np.clip(np.searchsorted(offsets, u, side='right') - 1, 0, len(spans) - 1)
    starts = np.array([lo for lo, _ in spans])
    return starts[idx] + (u - offsets[idx])


def simulate_hitting(room: RoomGeometry, sys: SystemParams, ue: AntennaParams, d0: float,
                     cfg: SimConfig) -> SimEstimate:
    """Serving AP and interferer uniform on the in-room arc of radius d0"""
    spans = geometry_service.arc_intervals(room, d0)
    if not spans:
        raise DomainError(f"radius {d0} leaves no arc inside the room")
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    serving = _sample_on_arc(rng, spans, cfg.trials)
    interferer = _sample_on_arc(rng, spans, cfg.trials)
    hits = int(np.count_nonzero(np.abs(_wrap(interferer - serving)) < ue.phi_h / 2))
    return _estimate(np.array([hits]), cfg.trials)[0]


def simulate_los_rate(room: RoomGeometry, sys: SystemParams, d: float, cfg: SimConfig) -> SimEstimate:
    """Empirical LoS probability of a link of length d from the UE along +x"""
    target = np.array(room.ue_position) + np.array([d, 0.0])
    hits = 0
    for trial in range(cfg.trials):
        rng = trial_rng(cfg.seed, trial)
        scene = sample_scene(room, sys, rng)
        link = Scene(ap_positions=target[None, :], blocker_positions=scene.blocker_positions,
                     ue_position=scene.ue_position, rng_state=rng)
        hits += int(is_los(link, 0, sys, cfg.blockage_mode))
    return _estimate(np.array([hits]), cfg.trials)[0]

"""Normal PV voltage snippet generation.

Each snippet is the maximum-power-point voltage trace of the module under a
freshly drawn operating condition, plus zero-mean Gaussian sensor noise. All
randomness comes from per-snippet substreams, so a snippet is a pure function
of (global_seed, id, params, config) regardless of batching or workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import List, Optional

import numpy as np

from warm_freeze.config.models import SimulatorConfig
from warm_freeze.exceptions import SimulationError
from warm_freeze.simulation.conditions import ConditionSummary, synthesize_condition
from warm_freeze.simulation.diode import DiodeParams, solve_mpp_array
from warm_freeze.simulation.rng import seed_path, substream

logger = logging.getLogger(__name__)

SNIPPET_LENGTH = 300


@dataclass(frozen=True)
class NormalSnippet:
    """A 10 s, 300-sample clean voltage trace."""

    id: int
    samples: np.ndarray
    condition: ConditionSummary
    seed_path: str


def generate_snippet(
    global_seed: int,
    snippet_id: int,
    params: DiodeParams,
    config: Optional[SimulatorConfig] = None,
    noise: bool = True,
) -> NormalSnippet:
    """Generate one normal snippet.

    Args:
        global_seed: Run-level seed
        snippet_id: Snippet identifier (>= 0)
        params: Module parameters
        config: Simulator settings; defaults to 30 Hz x 10 s with sigma 0.002
        noise: Add sensor noise; the clean trace is identical either way

    Returns:
        NormalSnippet with 300 finite, non-negative samples

    Raises:
        SimulationError: If the id is negative
        ConvergenceError: Propagated from the MPP solve
    """
    if snippet_id < 0:
        raise SimulationError(f"Snippet id must be >= 0, got {snippet_id}")
    config = config or SimulatorConfig()
    n_samples = config.sample_rate_hz * config.duration_s

    condition = synthesize_condition(
        substream(global_seed, snippet_id, "irradiance"),
        substream(global_seed, snippet_id, "temperature"),
        n_samples,
        config.sample_rate_hz,
    )
    v_mp, _ = solve_mpp_array(params, condition.irradiance_profile, condition.temperature_profile)

    samples = v_mp
    if noise:
        draws = substream(global_seed, snippet_id, "sensor-noise").standard_normal(n_samples)
        nominal = float(np.mean(v_mp))
        samples = np.maximum(v_mp + config.noise_sigma * nominal * draws, 0.0)

    return NormalSnippet(
        id=snippet_id,
        samples=samples,
        condition=condition.summary(),
        seed_path=seed_path(global_seed, snippet_id, "snippet"),
    )


def generate_corpus(
    global_seed: int,
    n: int,
    params: DiodeParams,
    config: Optional[SimulatorConfig] = None,
    workers: int = 1,
) -> List[NormalSnippet]:
    """Generate snippets with ids 0..n-1.

    Args:
        global_seed: Run-level seed
        n: Number of snippets (>= 1)
        params: Module parameters
        config: Simulator settings
        workers: Process count; output is identical for any value

    Returns:
        Snippets ordered by id

    Raises:
        SimulationError: If n < 1
    """
    if n < 1:
        raise SimulationError(f"Corpus size must be >= 1, got {n}")
    make = partial(generate_snippet, global_seed, params=params, config=config)

    if workers <= 1:
        corpus = [make(i) for i in range(n)]
    else:
        chunksize = max(1, n // (workers * 8))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            corpus = list(pool.map(make, range(n), chunksize=chunksize))

    logger.info(
        "Generated %d normal snippets (%d samples, %.1f hours) with %d worker(s)",
        n,
        n * SNIPPET_LENGTH,
        n * SNIPPET_LENGTH / 30.0 / 3600.0,
        workers,
    )
    return corpus

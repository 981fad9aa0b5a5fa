"""Attack injection into normal snippets.

All three families share one geometry: a randomly placed interior window
with untouched guard samples at both edges. Samples outside the window are
copied bit-for-bit from the normal twin. Magnitudes and noise are expressed
as fractions of the snippet's nominal level (the mean of its normal samples).
"""

import logging
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from warm_freeze.attacks.models import AttackedSnippet, AttackSpec, AttackWindow, SpikeEvent
from warm_freeze.config.models import AttackConfig, AttackKind
from warm_freeze.exceptions import AttackError, AttackGeometryError
from warm_freeze.simulation.generator import NormalSnippet
from warm_freeze.simulation.rng import substream

logger = logging.getLogger(__name__)


def sample_window(
    rng: np.random.Generator,
    length: int = 300,
    guard: int = 30,
    min_dur: int = 60,
) -> AttackWindow:
    """Draw an interior attack window.

    The start offset is uniform over every position that leaves room for
    ``min_dur`` samples; the duration is then uniform over what remains.

    Args:
        rng: Substream for this snippet and attack
        length: Snippet length
        guard: Untouched samples at each edge
        min_dur: Minimum window length

    Returns:
        AttackWindow inside [guard, length - guard)

    Raises:
        AttackGeometryError: If no window of min_dur fits between the guards
    """
    span = length - 2 * guard
    if min_dur < 1 or guard < 0 or min_dur > span:
        raise AttackGeometryError(
            f"Cannot place a window of {min_dur} samples in {length} samples with "
            f"{guard}-sample guards (interior span {span})"
        )
    offset = int(rng.integers(0, span - min_dur + 1))
    duration = int(rng.integers(min_dur, span - offset + 1))
    start = guard + offset
    return AttackWindow(start_idx=start, end_idx=start + duration, guard_samples=guard)


def _signed_uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> Tuple[float, int]:
    sign = 1 if rng.random() < 0.5 else -1
    return float(rng.uniform(bounds[0], bounds[1])), sign


def _nominal(normal: NormalSnippet) -> float:
    return float(np.mean(normal.samples))


def _window_for(
    normal: NormalSnippet, rng: np.random.Generator, config: AttackConfig
) -> AttackWindow:
    return sample_window(
        rng,
        length=len(normal.samples),
        guard=config.guard_samples,
        min_dur=config.min_duration_samples,
    )


def inject_bias(
    normal: NormalSnippet, rng: np.random.Generator, config: Optional[AttackConfig] = None
) -> AttackedSnippet:
    """Scale the window by (1 + signed factor) and add mild noise afterwards."""
    config = (config or AttackConfig()).effective()
    window = _window_for(normal, rng, config)
    magnitude, sign = _signed_uniform(rng, config.bias_range)
    bias_factor = sign * magnitude
    noise = rng.standard_normal(window.length)

    samples = normal.samples.copy()
    region = slice(window.start_idx, window.end_idx)
    samples[region] = (
        normal.samples[region] * (1.0 + bias_factor)
        + config.noise_sigma * _nominal(normal) * noise
    )
    spec = AttackSpec(
        kind=AttackKind.BIAS,
        window=window,
        noise_sigma=config.noise_sigma,
        bias_factor=bias_factor,
    )
    return AttackedSnippet(id=normal.id, samples=samples, spec=spec)


def inject_drift(
    normal: NormalSnippet, rng: np.random.Generator, config: Optional[AttackConfig] = None
) -> AttackedSnippet:
    """Apply a linear multiplicative ramp from 1 to 1 + sign * magnitude."""
    config = (config or AttackConfig()).effective()
    window = _window_for(normal, rng, config)
    magnitude, sign = _signed_uniform(rng, config.drift_range)

    # endpoint multiplier is exactly 1 + sign * magnitude
    ramp = np.linspace(0.0, 1.0, window.length)
    samples = normal.samples.copy()
    region = slice(window.start_idx, window.end_idx)
    samples[region] = normal.samples[region] * (1.0 + sign * magnitude * ramp)
    spec = AttackSpec(
        kind=AttackKind.DRIFT,
        window=window,
        noise_sigma=0.0,
        drift_magnitude=magnitude,
        drift_sign=sign,
    )
    return AttackedSnippet(id=normal.id, samples=samples, spec=spec)


def _place_spikes(
    rng: np.random.Generator, window: AttackWindow, count: int, width_max: int, retries: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw event widths and non-overlapping start indices inside the window.

    Free samples are split into count + 1 gaps by a uniform composition, so a
    placement always succeeds once the widths fit; only the widths are redrawn.
    """
    for attempt in range(retries):
        widths = rng.integers(1, width_max + 1, size=count)
        free = window.length - int(widths.sum())
        if free < 0:
            logger.warning(
                "Spike widths overflow a %d-sample window (attempt %d)", window.length, attempt
            )
            continue
        slots = np.sort(rng.choice(free + count, size=count, replace=False))
        preceding = np.concatenate(([0], np.cumsum(widths)[:-1]))
        starts = window.start_idx + slots - np.arange(count) + preceding
        return widths, starts
    raise AttackGeometryError(
        f"Could not fit {count} spikes of width <= {width_max} in a "
        f"{window.length}-sample window after {retries} attempts"
    )


def inject_spike(
    normal: NormalSnippet, rng: np.random.Generator, config: Optional[AttackConfig] = None
) -> AttackedSnippet:
    """Add background noise and 3-10 sparse signed impulses inside the window.

    Raises:
        AttackGeometryError: If the events cannot be placed without overlap
    """
    config = (config or AttackConfig()).effective()
    window = _window_for(normal, rng, config)
    low, high = config.spike_count_range
    count = int(rng.integers(low, high + 1))
    widths, starts = _place_spikes(
        rng, window, count, config.spike_width_max, config.placement_retries
    )

    events = []
    for start, width in zip(starts, widths):
        magnitude, sign = _signed_uniform(rng, config.spike_magnitude_range)
        events.append(SpikeEvent(index=int(start), width=int(width), magnitude=sign * magnitude))

    nominal = _nominal(normal)
    region = slice(window.start_idx, window.end_idx)
    perturbation = config.noise_sigma * nominal * rng.standard_normal(window.length)
    for event in events:
        lo = event.index - window.start_idx
        perturbation[lo : lo + event.width] += event.magnitude * nominal

    samples = normal.samples.copy()
    samples[region] = normal.samples[region] + perturbation
    spec = AttackSpec(
        kind=AttackKind.SPIKE,
        window=window,
        noise_sigma=config.noise_sigma,
        spike_events=tuple(events),
    )
    return AttackedSnippet(id=normal.id, samples=samples, spec=spec)


Injector = Callable[[NormalSnippet, np.random.Generator, Optional[AttackConfig]], AttackedSnippet]

INJECTORS: Dict[AttackKind, Injector] = {
    AttackKind.BIAS: inject_bias,
    AttackKind.DRIFT: inject_drift,
    AttackKind.SPIKE: inject_spike,
}


def make_pair(
    normal: NormalSnippet,
    kind: AttackKind,
    global_seed: int,
    config: Optional[AttackConfig] = None,
) -> Tuple[NormalSnippet, AttackedSnippet]:
    """Build the (normal, attacked) pair for one snippet.

    The injector draws from the substream keyed by (global_seed, id, kind), so
    attacked bytes depend on nothing else.
    """
    try:
        injector = INJECTORS[AttackKind(kind)]
    except ValueError as e:
        raise AttackError(f"Unknown attack kind: {kind}") from e
    rng = substream(global_seed, normal.id, f"attack:{AttackKind(kind).value}")
    return normal, injector(normal, rng, config)


def make_pairs(
    corpus: Iterable[NormalSnippet],
    kind: AttackKind,
    global_seed: int,
    config: Optional[AttackConfig] = None,
) -> List[Tuple[NormalSnippet, AttackedSnippet]]:
    """make_pair over a corpus, preserving order."""
    pairs = [make_pair(normal, kind, global_seed, config) for normal in corpus]
    logger.info("Injected %s attacks into %d snippets", AttackKind(kind).value, len(pairs))
    return pairs

"""Irradiance and temperature profiles for one snippet.

Irradiance is a clear-sky sinusoid in time of day, scaled by a weather
regime factor and modulated by an Ornstein-Uhlenbeck cloud transient.
Temperature is ambient plus irradiance heating with a slow linear ramp.
The regime set is a documented stand-in for unpublished simulator details.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict

import numpy as np

G_MAX = 1200.0
T_MIN = -10.0
T_MAX = 80.0


class WeatherRegime(str, Enum):
    """Sky conditions for a snippet."""

    CLEAR = "clear"
    CLOUDY_TRANSIENT = "cloudy-transient"
    OVERCAST = "overcast"


@dataclass(frozen=True)
class RegimeShape:
    """Irradiance scaling and cloud-transient parameters for one regime."""

    scale: float
    ou_sigma: float  # 1/sqrt(s)
    ou_theta: float  # 1/s


REGIMES: Dict[WeatherRegime, RegimeShape] = {
    WeatherRegime.CLEAR: RegimeShape(scale=1.0, ou_sigma=0.004, ou_theta=0.5),
    WeatherRegime.CLOUDY_TRANSIENT: RegimeShape(scale=0.75, ou_sigma=0.08, ou_theta=0.3),
    WeatherRegime.OVERCAST: RegimeShape(scale=0.35, ou_sigma=0.02, ou_theta=0.5),
}


@dataclass(frozen=True)
class OperatingCondition:
    """Per-sample irradiance (W/m²) and cell temperature (°C) for one snippet."""

    irradiance_profile: np.ndarray
    temperature_profile: np.ndarray
    weather_regime: WeatherRegime

    def summary(self) -> "ConditionSummary":
        """Compact description stored with the snippet."""
        return ConditionSummary(
            weather_regime=self.weather_regime,
            mean_irradiance=float(np.mean(self.irradiance_profile)),
            mean_temperature=float(np.mean(self.temperature_profile)),
        )


@dataclass(frozen=True)
class ConditionSummary:
    """Regime and mean conditions of a snippet."""

    weather_regime: WeatherRegime
    mean_irradiance: float
    mean_temperature: float


def synthesize_condition(
    irradiance_rng: np.random.Generator,
    temperature_rng: np.random.Generator,
    n_samples: int,
    sample_rate_hz: int,
) -> OperatingCondition:
    """Draw a smoothly varying operating condition.

    Args:
        irradiance_rng: Substream for regime, time of day and cloud transient
        temperature_rng: Substream for ambient temperature and ramp
        n_samples: Samples in the snippet
        sample_rate_hz: Sampling rate

    Returns:
        OperatingCondition with profiles of length n_samples
    """
    dt = 1.0 / sample_rate_hz
    times = np.arange(n_samples, dtype=np.float64) * dt

    regime = list(WeatherRegime)[int(irradiance_rng.integers(0, len(WeatherRegime)))]
    shape = REGIMES[regime]
    start_hour = irradiance_rng.uniform(7.0, 17.0)
    hours = start_hour + times / 3600.0
    clear_sky = 1000.0 * np.maximum(np.sin(math.pi * (hours - 6.0) / 12.0), 0.0)

    # Ornstein-Uhlenbeck cloud modulation started from its stationary law
    shocks = irradiance_rng.standard_normal(n_samples)
    stationary_sd = shape.ou_sigma / math.sqrt(2.0 * shape.ou_theta)
    cloud = np.empty(n_samples, dtype=np.float64)
    cloud[0] = stationary_sd * shocks[0]
    decay = 1.0 - shape.ou_theta * dt
    step_sd = shape.ou_sigma * math.sqrt(dt)
    for k in range(1, n_samples):
        cloud[k] = decay * cloud[k - 1] + step_sd * shocks[k]
    irradiance = np.clip(clear_sky * shape.scale * (1.0 + cloud), 0.0, G_MAX)

    ambient = temperature_rng.uniform(5.0, 35.0)
    ramp = temperature_rng.uniform(-0.05, 0.05)  # °C/s
    heating = irradiance / 800.0 * 25.0
    temperature = np.clip(ambient + heating + ramp * times, T_MIN, T_MAX)

    return OperatingCondition(
        irradiance_profile=irradiance,
        temperature_profile=temperature,
        weather_regime=regime,
    )

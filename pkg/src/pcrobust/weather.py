"""Adverse weather simulation for LiDAR returns.

A single-scattering model shared by fog, rain, and snow. Each particle
medium is summarized by an extinction coefficient alpha (1/m):

  * two-way transmittance attenuates intensity by exp(-2 alpha r);
    returns falling below a detector floor are dropped,
  * a range-independent backscatter probability 1 - exp(-beta alpha)
    relocates some surviving returns onto a random nearer particle
    along the same bearing, with a weak random intensity.

Rain and snow map rate (mm/h) to alpha through power laws; fog takes
alpha directly. Points with exactly zero reflectance are treated as
already-invalid returns and pass through untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointCloud, RandomStream, check_severity

# severity-indexed intensities, index 0 = clear air
RAIN_RATES = (0.0, 5.0, 15.0, 50.0, 150.0, 500.0)   # mm/h
SNOW_RATES = (0.0, 0.5, 1.5, 5.0, 15.0, 50.0)       # mm/h
FOG_ALPHAS = (0.0, 0.005, 0.01, 0.02, 0.05, 0.1)    # 1/m

RAIN_ALPHA_COEFF = 0.01
RAIN_ALPHA_EXPONENT = 0.6
SNOW_ALPHA_COEFF = 0.07
SNOW_ALPHA_EXPONENT = 0.7

MIN_DETECTABLE_INTENSITY = 0.002
SCATTER_RANGE_MIN_M = 1.0
SCATTER_RANGE_MAX_M = 20.0
BETA_BACKSCATTER = 5.0


@dataclass(frozen=True)
class WeatherParams:
    """Resolved physical parameters for one weather condition."""

    kind: str
    alpha_per_m: float
    rate_mm_per_hr: float = 0.0
    min_detectable_intensity: float = MIN_DETECTABLE_INTENSITY
    scatter_range_max_m: float = SCATTER_RANGE_MAX_M
    beta_backscatter: float = BETA_BACKSCATTER


def rain_alpha(rate_mm_per_hr: float) -> float:
    return RAIN_ALPHA_COEFF * rate_mm_per_hr**RAIN_ALPHA_EXPONENT


def snow_alpha(rate_mm_per_hr: float) -> float:
    return SNOW_ALPHA_COEFF * rate_mm_per_hr**SNOW_ALPHA_EXPONENT


def params_for(kind: str, severity: int) -> WeatherParams:
    """Severity schedule lookup for one of fog, rain, snow."""
    severity = check_severity(severity)
    if kind == "fog":
        return WeatherParams(kind, FOG_ALPHAS[severity])
    if kind == "rain":
        rate = RAIN_RATES[severity]
        return WeatherParams(kind, rain_alpha(rate) if rate else 0.0, rate)
    if kind == "snow":
        rate = SNOW_RATES[severity]
        return WeatherParams(kind, snow_alpha(rate) if rate else 0.0, rate)
    raise ValueError(f"unknown weather kind: {kind!r}")


def simulate_weather(cloud: PointCloud, params: WeatherParams,
                     stream: RandomStream, counters=None) -> PointCloud:
    alpha = params.alpha_per_m
    if alpha == 0.0:
        return cloud.copy()
    g = stream.generator
    refl = cloud.reflectance
    r = np.linalg.norm(cloud.xyz, axis=1)
    exempt = refl == 0.0

    att = refl * np.exp(-2.0 * alpha * r)
    keep = exempt | (att >= params.min_detectable_intensity)
    data = cloud.data[keep].copy()
    surv_exempt = exempt[keep]
    data[~surv_exempt, 3] = att[keep][~surv_exempt]

    r_surv = r[keep]
    p_scatter = 1.0 - np.exp(-params.beta_backscatter * alpha)
    u = g.random(len(data))
    eligible = ~surv_exempt & (r_surv > SCATTER_RANGE_MIN_M) & (u < p_scatter)
    m = int(eligible.sum())
    if m:
        r_old = r_surv[eligible]
        r_new = g.uniform(SCATTER_RANGE_MIN_M,
                          np.minimum(r_old, params.scatter_range_max_m))
        data[eligible, :3] *= (r_new / r_old)[:, None]
        data[eligible, 3] = g.uniform(0.0, 0.1, m)
    return cloud.with_data(data)


def fog(cloud, severity, stream, counters=None):
    return simulate_weather(cloud, params_for("fog", severity), stream, counters)


def rain(cloud, severity, stream, counters=None):
    return simulate_weather(cloud, params_for("rain", severity), stream, counters)


def snow(cloud, severity, stream, counters=None):
    return simulate_weather(cloud, params_for("snow", severity), stream, counters)


WEATHER_KERNELS = {"fog": fog, "rain": rain, "snow": snow}

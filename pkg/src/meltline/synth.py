"""Synthetic furnace telemetry with known melt boundaries and template labels.

Used by the test-suite, the acceptance checks and ``meltline synth``. Melts
are drawn from a small set of temperature-ramp templates, each ramp ends in a
one-step pour drop back to charging temperature, and an optional charge dip
is placed where the ramp crosses ``dip_at_C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from meltline.ingest import (
    ENERGY_COUNTER,
    FURNACE_STATE,
    POWER,
    TEMPERATURE,
    WEIGHT,
    TelemetryFrame,
    parse_timestamps,
)

CHARGE_C = 600.0
PEAK_C = 1500.0
DEFAULT_START = "2022-05-11T00:00:00+00:00"


def _linear(u):
    return u


def _fast_then_hold(u):
    return 1.0 - (1.0 - u) ** 3


def _slow_start(u):
    return u**3


TEMPLATES = (_linear, _fast_then_hold, _slow_start)
# nominal duration [s] and specific energy [kWh/t] per template
TEMPLATE_DURATION_S = (5000.0, 4300.0, 7000.0)
TEMPLATE_KWH_PER_T = (545.0, 522.0, 600.0)


def template_curve(index: int, u: np.ndarray) -> np.ndarray:
    return CHARGE_C + (PEAK_C - CHARGE_C) * TEMPLATES[index](np.asarray(u, dtype=float))


def template_profiles(
    n_per_template: int = 20,
    length: int = 128,
    noise_frac: float = 0.01,
    seed: int = 0,
    n_templates: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """Equal-length noisy instances of the ramp templates.

    Noise is Gaussian with standard deviation ``noise_frac`` times the
    template range. Returns ``(X, labels)`` with rows grouped by template.
    """
    rng = np.random.default_rng(seed)
    u = np.linspace(0.0, 1.0, length)
    sigma = noise_frac * (PEAK_C - CHARGE_C)
    rows, labels = [], []
    for t in range(n_templates):
        base = template_curve(t, u)
        for _ in range(n_per_template):
            rows.append(base + rng.normal(0.0, sigma, length))
            labels.append(t)
    return np.array(rows), np.array(labels)


@dataclass
class SyntheticTelemetry:
    frame: TelemetryFrame
    labels: list = field(default_factory=list)
    start_index: list = field(default_factory=list)
    end_index: list = field(default_factory=list)

    @property
    def n_melts(self) -> int:
        return len(self.labels)


def synthetic_telemetry(
    n_melts: int = 60,
    seed: int = 0,
    cadence_s: float = 10.0,
    n_templates: int = 3,
    temp_noise_C: float = 3.0,
    dip_C: float = 100.0,
    dip_at_C: float = 900.0,
    tail_samples: int = 30,
    voltage_dropout: float = 0.0,
    start: str = DEFAULT_START,
    n_rows: int | None = None,
) -> SyntheticTelemetry:
    """Telemetry with ``n_melts`` complete melts followed by a partial one.

    Templates are assigned round-robin and then shuffled, so with
    ``n_melts = 3 * m`` every template appears exactly ``m`` times. If
    ``n_rows`` is given, melts keep being generated and the result is cut at
    exactly ``n_rows`` samples (``n_melts`` is then ignored and the truth
    lists only cover melts that ended inside the cut).
    """
    rng = np.random.default_rng(seed)
    t0 = float(parse_timestamps([start])[0])
    if n_rows is not None:
        n_melts = int(n_rows * cadence_s / min(TEMPLATE_DURATION_S)) + 2
    order = np.arange(n_melts) % n_templates
    rng.shuffle(order)

    temps, weights, powers, labels, starts, ends = [], [], [], [], [], []
    row = 0
    for label in order.tolist():
        dur = TEMPLATE_DURATION_S[label] * rng.uniform(0.95, 1.05)
        n = int(round(dur / cadence_s)) + 1
        u = np.linspace(0.0, 1.0, n)
        temp = template_curve(label, u) + rng.normal(0.0, temp_noise_C, n)
        if dip_C > 0:
            k = int(np.searchsorted(template_curve(label, u), dip_at_C))
            width = max(1, int(60 / cadence_s))
            temp[k : k + width] -= dip_C
        temp[-1] = max(temp[-1], PEAK_C)
        weight = rng.uniform(8.5, 10.5)
        energy = weight * TEMPLATE_KWH_PER_T[label] * rng.uniform(0.98, 1.02)
        power = np.full(n, energy * 3600.0 / ((n - 1) * cadence_s)) * rng.uniform(0.97, 1.03, n)
        temps.append(temp)
        weights.append(np.full(n, weight))
        powers.append(power)
        labels.append(label)
        starts.append(row)
        ends.append(row + n - 1)
        row += n

    # partial melt after the last pour: never terminated, so never a segment
    tail = CHARGE_C + rng.normal(0.0, temp_noise_C, tail_samples)
    temps.append(tail)
    weights.append(np.full(tail_samples, 5.0))
    powers.append(np.full(tail_samples, 3000.0))

    temp = np.concatenate(temps)
    weight = np.concatenate(weights)
    power = np.concatenate(powers)
    if n_rows is not None:
        temp, weight, power = temp[:n_rows], weight[:n_rows], power[:n_rows]
        keep = [i for i, e in enumerate(ends) if e + 1 < n_rows]
        labels = [labels[i] for i in keep]
        starts = [starts[i] for i in keep]
        ends = [ends[i] for i in keep]
    total = temp.size
    time = t0 + cadence_s * np.arange(total)
    counter = np.concatenate([[0.0], np.cumsum(power[:-1] * cadence_s / 3600.0)]) + 1.0e6

    voltage = rng.normal(690.0, 5.0, total)
    if voltage_dropout > 0:
        voltage[rng.random(total) < voltage_dropout] = np.nan
    columns = {
        TEMPERATURE: temp,
        WEIGHT: weight,
        POWER: power,
        ENERGY_COUNTER: counter,
        "voltage_V": voltage,
        "current_A": power * 1000.0 / 690.0,
        "frequency_Hz": rng.normal(250.0, 2.0, total),
        FURNACE_STATE: np.ones(total),
        "cooling_water_temp_C[1]": rng.normal(30.0, 1.0, total),
        "cooling_water_flow[1]": rng.normal(12.0, 0.5, total),
    }
    frame = TelemetryFrame(time, columns, source="synthetic")
    return SyntheticTelemetry(frame, labels, starts, ends)


def hourly_series(
    start_s: float,
    end_s: float,
    kind: str,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Hourly price (DKK/kWh) or CO2 intensity (kg/kWh) covering [start, end].

    Daily sinusoid plus noise; prices stay positive and intensities
    non-negative.
    """
    h0 = np.floor(start_s / 3600.0) * 3600.0
    h1 = np.ceil(end_s / 3600.0) * 3600.0
    hours = np.arange(h0, h1 + 3600.0, 3600.0)
    rng = np.random.default_rng([seed, 0 if kind == "price" else 1])
    phase = 2 * np.pi * ((hours / 3600.0) % 24) / 24
    if kind == "price":
        values = 1.2 + 0.6 * np.sin(phase - 2.0) + rng.normal(0.0, 0.1, hours.size)
        values = np.clip(values, 0.05, None)
    elif kind == "emission":
        values = 0.15 + 0.08 * np.sin(phase + 1.0) + rng.normal(0.0, 0.01, hours.size)
        values = np.clip(values, 0.0, None)
    else:
        raise ValueError(f"unknown series kind {kind!r}")
    return hours, values

import numpy as np

from meltline.ingest import TelemetryFrame
from meltline.segment import MeltSegment

T0 = 1_652_227_200.0  # 2022-05-11T00:00:00Z, a whole hour


def make_segment(times, temps, melt_id=0, energy=1000.0, weight=10.0):
    times = np.asarray(times, dtype=float)
    return MeltSegment(
        melt_id, float(times[0]), float(times[-1]), times, np.asarray(temps, dtype=float), energy, weight, 0, times.size - 1
    )


def simple_segment(melt_id, start, duration, energy, weight=10.0, n=11):
    t = np.linspace(start, start + duration, n)
    return make_segment(t, np.linspace(600, 1500, n), melt_id, energy, weight)


def frame_from_temps(temps, cadence=10.0, **extra):
    temps = np.asarray(temps, dtype=float)
    time = T0 + cadence * np.arange(temps.size)
    cols = {"melt_temperature_C": temps}
    cols.update({k: np.asarray(v, dtype=float) for k, v in extra.items()})
    return TelemetryFrame(time, cols)


def sawtooth(n_ramps, ramp_len=50, lo=600.0, hi=1500.0, dip=None, tail=5):
    """``n_ramps`` linear ramps lo->hi, each followed by an instant drop.

    ``dip`` = (temperature, depth) subtracts ``depth`` at the sample where the
    ramp first reaches ``temperature``. Returns (temps, endpoint indices).
    """
    parts, ends, pos = [], [], 0
    for _ in range(n_ramps):
        r = np.linspace(lo, hi, ramp_len)
        if dip is not None:
            r[int(np.searchsorted(r, dip[0]))] -= dip[1]
        parts.append(r)
        pos += ramp_len
        ends.append(pos - 1)
    parts.append(np.full(tail, lo))
    return np.concatenate(parts), ends

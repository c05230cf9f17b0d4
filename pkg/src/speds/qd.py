"""Stochastic state-machine model of an electrically driven quantum dot.

Kinetic Monte Carlo over the states {empty, X, X2, shelved}:

* while injection is on, exciton pairs are captured at ``capture_rate``
  (empty -> X -> X2, capped at X2);
* radiative decays X2 -> X and X -> empty emit the X2 and X photons;
* after each radiative return to ground the dot shelves (charged/dark,
  non-emitting) with probability ``shelve_probability`` and recovers at
  ``unshelve_rate``;
* during sweep-out windows between pulses, excitonic occupation is removed
  without emission at ``sweep_rate``; the ``full_reset`` regime additionally
  clears the shelved state, erasing all memory between pulses.

Rates are piecewise constant across pulse edges; waiting times are
re-drawn at every edge, which is exact for exponential clocks.
"""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import InvalidInput

LINE_X = "X"
LINE_X2 = "X2"
LINE_MARKER = "marker"  # diagnostic line emitted from the shelved state

MODE_DC = "DC"
MODE_PULSED = "pulsed"

SWEEP_NONE = "none"
SWEEP_ELECTRONS = "electrons_only"
SWEEP_FULL = "full_reset"

_EMPTY, _X, _X2, _SHELVED = 0, 1, 2, 3


@dataclass(frozen=True)
class QDModel:
    tau_x: float = 2.1  # ns, X radiative lifetime
    tau_x2: float = 0.68  # ns, X2 radiative lifetime
    capture_rate: float = 2.0  # 1/ns while injection is on
    shelve_probability: float = 0.2
    unshelve_rate: float = 0.3  # 1/ns
    sweep_rate: float = 50.0  # 1/ns while sweep-out is active
    marker_rate: float = 0.0  # 1/ns, emitted while shelved (diagnostics only)

    def __post_init__(self):
        if self.tau_x <= 0 or self.tau_x2 <= 0:
            raise InvalidInput("radiative lifetimes must be > 0")
        for name in ("capture_rate", "unshelve_rate", "sweep_rate", "marker_rate"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidInput(f"{name} must be finite and >= 0, got {v}")
        if not 0.0 <= self.shelve_probability <= 1.0:
            raise InvalidInput(
                f"shelve_probability must be in [0, 1], got {self.shelve_probability}"
            )


@dataclass(frozen=True)
class DriveProgram:
    mode: str = MODE_PULSED
    repetition_rate: float = 80.0  # MHz
    pulse_width: float = 300.0  # ps
    sweep_out_regime: str = SWEEP_NONE
    duration: float = 1e4  # ns of simulated time
    sweep_delay: float = 0.0  # ns between pulse end and sweep-out onset

    def __post_init__(self):
        if self.mode not in (MODE_DC, MODE_PULSED):
            raise InvalidInput(f"mode must be DC or pulsed, got {self.mode!r}")
        if self.sweep_out_regime not in (SWEEP_NONE, SWEEP_ELECTRONS, SWEEP_FULL):
            raise InvalidInput(f"unknown sweep-out regime {self.sweep_out_regime!r}")
        if self.duration <= 0:
            raise InvalidInput("duration must be > 0")
        if self.mode == MODE_PULSED:
            if self.repetition_rate <= 0 or self.pulse_width <= 0:
                raise InvalidInput("pulsed mode needs repetition_rate > 0 and pulse_width > 0")
            if self.pulse_width * 1e-3 >= self.period:
                raise InvalidInput(
                    f"pulse width {self.pulse_width} ps must be shorter than the "
                    f"period {self.period * 1e3:.1f} ps"
                )
            if self.duration < self.period:
                raise InvalidInput(
                    f"duration {self.duration} ns does not contain one full period "
                    f"({self.period:.3f} ns)"
                )
            if self.sweep_delay < 0 or (
                self.pulse_width * 1e-3 + self.sweep_delay >= self.period
            ):
                raise InvalidInput("sweep_delay must fit between pulse end and next pulse")

    @property
    def period(self):
        """Pulse period in ns."""
        return 1e3 / self.repetition_rate


@dataclass
class EmissionRecord:
    events: List[Tuple[float, str]]
    duration: float

    def times(self, line=None):
        if line is None:
            return np.array([t for t, _ in self.events])
        return np.array([t for t, l in self.events if l == line])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("time_ns,line\n")
            for t, line in self.events:
                fh.write(f"{t:.9f},{line}\n")

    @classmethod
    def from_csv(cls, path, duration=None):
        events = []
        with open(path) as fh:
            next(fh)
            for row in fh:
                t, line = row.strip().split(",")
                events.append((float(t), line))
        if duration is None:
            duration = events[-1][0] if events else 0.0
        return cls(events, duration)


def _phase_schedule(drive: DriveProgram):
    """Per-period list of (start_ns, injection_on, sweep_on) phase segments."""
    if drive.mode == MODE_DC:
        return [(0.0, True, False)]
    width = drive.pulse_width * 1e-3
    segments = [(0.0, True, False)]
    sweep = drive.sweep_out_regime != SWEEP_NONE
    if sweep and drive.sweep_delay > 0:
        segments.append((width, False, False))
        segments.append((width + drive.sweep_delay, False, True))
    else:
        segments.append((width, False, sweep))
    return segments


def simulate(model: QDModel, drive: DriveProgram, seed: int) -> EmissionRecord:
    """Generate a timestamped photon-emission record; deterministic per seed."""
    rng = np.random.default_rng(seed)
    events: List[Tuple[float, str]] = []
    state = _EMPTY
    t = 0.0
    duration = drive.duration
    period = drive.period if drive.mode == MODE_PULSED else duration
    segments = _phase_schedule(drive)
    seg_starts = [s for s, _, _ in segments]
    allow_shelving = drive.sweep_out_regime in (SWEEP_NONE, SWEEP_ELECTRONS)

    rate_x = 1.0 / model.tau_x
    rate_x2 = 1.0 / model.tau_x2

    # Explicit (period, segment) cursor: deriving the segment from float t is
    # unsafe at boundaries, where rounding can stall the clock.
    n_per, i_seg = 0, 0

    while t < duration:
        if drive.mode == MODE_PULSED:
            _, injecting, sweeping = segments[i_seg]
            seg_end = (
                n_per * period + segments[i_seg + 1][0]
                if i_seg + 1 < len(segments)
                else (n_per + 1) * period
            )
        else:
            injecting, sweeping = True, False
            seg_end = duration
        seg_end = min(seg_end, duration)

        channels = []
        if state == _EMPTY:
            if injecting and model.capture_rate > 0:
                channels.append((model.capture_rate, "capture"))
        elif state == _X:
            channels.append((rate_x, "decay_x"))
            if injecting and model.capture_rate > 0:
                channels.append((model.capture_rate, "capture"))
            if sweeping and model.sweep_rate > 0:
                channels.append((model.sweep_rate, "sweep"))
        elif state == _X2:
            channels.append((rate_x2, "decay_x2"))
            if sweeping and model.sweep_rate > 0:
                channels.append((model.sweep_rate, "sweep"))
        else:  # shelved
            if model.unshelve_rate > 0:
                channels.append((model.unshelve_rate, "unshelve"))
            if model.marker_rate > 0:
                channels.append((model.marker_rate, "marker"))
            if sweeping and drive.sweep_out_regime == SWEEP_FULL and model.sweep_rate > 0:
                channels.append((model.sweep_rate, "sweep"))

        def _advance_cursor():
            nonlocal n_per, i_seg
            if i_seg + 1 < len(segments):
                i_seg += 1
            else:
                i_seg = 0
                n_per += 1

        total = sum(r for r, _ in channels)
        if total <= 0.0:
            t = seg_end
            _advance_cursor()
            continue
        dt = rng.exponential(1.0 / total)
        if t + dt >= seg_end:
            t = seg_end
            _advance_cursor()
            continue
        t += dt
        pick = rng.random() * total
        acc = 0.0
        action = channels[-1][1]
        for r, name in channels:
            acc += r
            if pick < acc:
                action = name
                break

        if action == "capture":
            state = _X2 if state == _X else _X
        elif action == "decay_x2":
            events.append((t, LINE_X2))
            state = _X
        elif action == "decay_x":
            events.append((t, LINE_X))
            if allow_shelving and rng.random() < model.shelve_probability:
                state = _SHELVED
            else:
                state = _EMPTY
        elif action == "sweep":
            state = _EMPTY
        elif action == "unshelve":
            state = _EMPTY
        elif action == "marker":
            events.append((t, LINE_MARKER))

    return EmissionRecord(events, duration)


def decay_profile(record: EmissionRecord, drive: DriveProgram, line=LINE_X, bin_ps=50.0):
    """Histogram of emission times modulo the drive period.

    Returns (bin_centers_ns, counts).  Empty records give all-zero counts.
    """
    if drive.mode != MODE_PULSED:
        raise InvalidInput("decay_profile requires a pulsed drive")
    if bin_ps <= 0:
        raise InvalidInput(f"bin width must be > 0, got {bin_ps}")
    period = drive.period
    bin_ns = bin_ps * 1e-3
    n_bins = max(int(np.ceil(period / bin_ns)), 1)
    edges = np.linspace(0.0, period, n_bins + 1)
    times = record.times(line)
    phases = np.mod(times, period) if times.size else times
    counts, _ = np.histogram(phases, bins=edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return centers, counts


def fit_decay_time(centers, counts, t_start, t_stop):
    """Exponential-tail lifetime from a log-linear least-squares fit."""
    mask = (centers >= t_start) & (centers <= t_stop) & (counts > 0)
    if np.count_nonzero(mask) < 3:
        raise InvalidInput("not enough populated bins in the fit window")
    x = centers[mask]
    y = np.log(counts[mask].astype(float))
    slope, _ = np.polyfit(x, y, 1, w=np.sqrt(counts[mask]))
    if slope >= 0:
        raise InvalidInput("histogram tail is not decaying in the fit window")
    return -1.0 / slope


def quantum_efficiency_factor(emission_window_ns, tau_ns):
    """Fraction of excitons that radiate before a hard sweep-out cutoff."""
    if emission_window_ns < 0 or tau_ns <= 0:
        raise InvalidInput("window must be >= 0 and lifetime > 0")
    return 1.0 - np.exp(-emission_window_ns / tau_ns)


def throughput_ratio(collection_gain, rate_gain, qe_factor):
    """Photon-throughput improvement: product of the three factors."""
    for name, v in (
        ("collection_gain", collection_gain),
        ("rate_gain", rate_gain),
        ("qe_factor", qe_factor),
    ):
        if not np.isfinite(v) or v <= 0:
            raise InvalidInput(f"{name} must be finite and > 0, got {v}")
    return collection_gain * rate_gain * qe_factor


def poisson_photon_record(rate_per_ns, duration_ns, seed, line=LINE_X) -> EmissionRecord:
    """Classical Poissonian reference source (laser-like), for control runs."""
    if rate_per_ns < 0 or duration_ns <= 0:
        raise InvalidInput("rate must be >= 0 and duration > 0")
    rng = np.random.default_rng(seed)
    n = rng.poisson(rate_per_ns * duration_ns)
    times = np.sort(rng.uniform(0.0, duration_ns, n))
    return EmissionRecord([(float(t), line) for t in times], duration_ns)


def pulsed_poisson_record(
    repetition_rate_mhz, mean_photons_per_pulse, duration_ns, seed, jitter_ns=0.05, line=LINE_X
) -> EmissionRecord:
    """Pulsed classical source: Poisson photon number per pulse, Gaussian spread."""
    rng = np.random.default_rng(seed)
    period = 1e3 / repetition_rate_mhz
    n_pulses = int(duration_ns / period)
    events = []
    for k in range(n_pulses):
        for _ in range(rng.poisson(mean_photons_per_pulse)):
            t = k * period + abs(rng.normal(0.0, jitter_ns))
            if 0.0 <= t < duration_ns:
                events.append((float(t), line))
    events.sort()
    return EmissionRecord(events, duration_ns)

"""Spike trains to smoothed, trial-segmented firing-rate series.

Pipeline: bin spikes into a PSTH, keep neurons active in enough bins, cut
the PSTH into trials, then smooth each trial with a Gaussian kernel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .core import TimeSeries
from .errors import CitsError, SeriesTooShortError, SpikeFormatError

logger = logging.getLogger(__name__)

KERNEL_TRUNCATE = 4.0
FWHM_PER_SD = 2.0 * math.sqrt(2.0 * math.log(2.0))


class EmptyRecordingError(CitsError):
    pass


@dataclass(frozen=True)
class SpikeData:
    """Spike times in seconds, one sorted array per neuron, over ``[0, span]``."""

    neuron_ids: tuple[str, ...]
    spike_times: tuple[np.ndarray, ...]
    span: float

    def __post_init__(self):
        if len(self.neuron_ids) != len(self.spike_times):
            raise CitsError("one spike array is needed per neuron id")
        if len(set(self.neuron_ids)) != len(self.neuron_ids):
            raise CitsError("neuron ids must be unique")
        if not self.span > 0:
            raise EmptyRecordingError("recording span must be positive")
        arrays = []
        for nid, times in zip(self.neuron_ids, self.spike_times):
            t = np.asarray(times, dtype=float)
            if t.ndim != 1:
                raise CitsError(f"spike times of neuron {nid} must be one-dimensional")
            if t.size and (np.any(np.diff(t) < 0) or t[0] < 0 or t[-1] > self.span):
                raise CitsError(f"spike times of neuron {nid} must be sorted and within [0, {self.span}]")
            t.setflags(write=False)
            arrays.append(t)
        object.__setattr__(self, "spike_times", tuple(arrays))
        object.__setattr__(self, "neuron_ids", tuple(str(n) for n in self.neuron_ids))

    @property
    def n_spikes(self) -> int:
        return sum(t.size for t in self.spike_times)


@dataclass(frozen=True)
class PsthConfig:
    """Binning and smoothing settings.

    ``bandwidth_is_fwhm`` reads ``smooth_bandwidth_ms`` as the full width at
    half maximum instead of the standard deviation of the kernel.
    """

    bin_ms: float = 10.0
    smooth_bandwidth_ms: float = 16.0
    active_fraction: float = 0.25
    trial_seconds: float = 7.5
    bandwidth_is_fwhm: bool = False

    def __post_init__(self):
        if not self.bin_ms > 0:
            raise CitsError("bin_ms must be positive")
        if not self.smooth_bandwidth_ms > 0:
            raise CitsError("smooth_bandwidth_ms must be positive")
        if not 0 < self.active_fraction < 1:
            raise CitsError("active_fraction must lie in (0, 1)")
        if not self.trial_seconds > 0:
            raise CitsError("trial_seconds must be positive")

    @property
    def sd_ms(self) -> float:
        return self.smooth_bandwidth_ms / FWHM_PER_SD if self.bandwidth_is_fwhm else self.smooth_bandwidth_ms

    @property
    def trial_bins(self) -> int:
        return int(math.floor(self.trial_seconds * 1000.0 / self.bin_ms + 1e-9))


def read_spike_file(path) -> SpikeData:
    """Parse ``<neuron id> <t1> <t2> ...`` lines (seconds).

    Blank lines and ``#`` comments are skipped.  A ``# span <seconds>``
    line sets the recording span; otherwise it is the last spike time.
    """
    ids, trains = [], []
    span = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "span":
                    try:
                        span = float(parts[1])
                    except (IndexError, ValueError):
                        raise SpikeFormatError("span directive needs one number", line=lineno) from None
                continue
            fields = line.split()
            nid = fields[0]
            if nid in ids:
                raise SpikeFormatError(f"neuron {nid!r} listed twice", line=lineno)
            try:
                times = np.array([float(x) for x in fields[1:]])
            except ValueError as exc:
                raise SpikeFormatError(f"bad spike time: {exc}", line=lineno) from None
            if not np.all(np.isfinite(times)) or np.any(times < 0):
                raise SpikeFormatError("spike times must be finite and non-negative", line=lineno)
            ids.append(nid)
            trains.append(np.sort(times))
    if not ids:
        raise EmptyRecordingError(f"{path}: no neurons found")
    if span is None:
        span = max((t[-1] for t in trains if t.size), default=0.0)
    return SpikeData(tuple(ids), tuple(trains), span)


def bin_psth(spikes: SpikeData, config: PsthConfig = PsthConfig()) -> TimeSeries:
    """Spike counts per bin; ``floor(span / bin)`` bins, spikes beyond the last full bin are dropped."""
    width = config.bin_ms / 1000.0
    n_bins = int(math.floor(spikes.span / width + 1e-9))
    if n_bins < 1:
        raise EmptyRecordingError(f"span {spikes.span}s is shorter than one {config.bin_ms} ms bin")
    edges = np.arange(n_bins + 1) * width
    counts = np.vstack([np.histogram(t, bins=edges)[0] for t in spikes.spike_times]).astype(float)
    lost = spikes.n_spikes - int(counts.sum())
    if lost:
        logger.info("%d spikes after the last full bin were dropped", lost)
    return TimeSeries(counts, spikes.neuron_ids)


def smooth(psth: TimeSeries, bandwidth_ms: float, bin_ms: float = 10.0) -> TimeSeries:
    """Gaussian smoothing along time with sd ``bandwidth_ms`` (reflecting boundaries)."""
    if not bandwidth_ms > 0:
        raise CitsError("bandwidth must be positive")
    sd = bandwidth_ms / bin_ms
    out = gaussian_filter1d(psth.values, sd, axis=1, mode="reflect", truncate=KERNEL_TRUNCATE)
    return TimeSeries(out, psth.labels)


def smoothing_kernel(sd_bins: float) -> np.ndarray:
    """The discrete kernel applied by :func:`smooth`, of half-width ``ceil(4 sd)``."""
    radius = int(KERNEL_TRUNCATE * sd_bins + 0.5)
    impulse = np.zeros(2 * radius + 1)
    impulse[radius] = 1.0
    return gaussian_filter1d(impulse, sd_bins, mode="constant", truncate=KERNEL_TRUNCATE)


def select_active(psth: TimeSeries, fraction: float = 0.25) -> list[int]:
    """Indices of neurons with a nonzero count in at least ``fraction`` of bins."""
    if not 0 < fraction < 1:
        raise CitsError("fraction must lie in (0, 1)")
    active = np.count_nonzero(psth.values, axis=1) >= fraction * psth.n
    return [int(i) for i in np.flatnonzero(active)]


def segment_trials(ts: TimeSeries, trial_seconds: float = 7.5, bin_ms: float = 10.0) -> list[TimeSeries]:
    length = int(math.floor(trial_seconds * 1000.0 / bin_ms + 1e-9))
    if length < 1 or ts.n < length:
        raise SeriesTooShortError(f"series of {ts.n} bins is shorter than one trial of {length} bins")
    count, rest = divmod(ts.n, length)
    if rest:
        logger.info("dropping %d bins after the last complete trial", rest)
    return [TimeSeries(ts.values[:, k * length : (k + 1) * length], ts.labels) for k in range(count)]


@dataclass(frozen=True)
class PreprocessResult:
    trials: list[TimeSeries]
    active: list[str]
    inactive: list[str]


def preprocess(spikes: SpikeData, config: PsthConfig = PsthConfig()) -> PreprocessResult:
    psth = bin_psth(spikes, config)
    keep = select_active(psth, config.active_fraction)
    ids = list(psth.labels)
    active = [ids[i] for i in keep]
    inactive = [nid for i, nid in enumerate(ids) if i not in set(keep)]
    if not keep:
        return PreprocessResult([], active, inactive)
    trials = segment_trials(psth.select(keep), config.trial_seconds, config.bin_ms)
    smoothed = [smooth(t, config.sd_ms, config.bin_ms) for t in trials]
    return PreprocessResult(smoothed, active, inactive)

"""From spike times to smoothed per-trial firing-rate series.

Spikes are binned at 10 ms, neurons active in fewer than a quarter of the
bins are dropped, the recording is cut into 7.5 s trials and each trial is
smoothed with a Gaussian kernel.
"""

import numpy as np

from cits import CitsConfig, PsthConfig, SpikeData, cits_sample
from cits.ingest import preprocess

rng = np.random.default_rng(4)
span = 30.0
rates = {"a": 60.0, "b": 45.0, "c": 35.0, "quiet": 2.0}
trains = tuple(np.sort(rng.uniform(0, span, rng.poisson(r * span))) for r in rates.values())
spikes = SpikeData(tuple(rates), trains, span)
print(f"{spikes.n_spikes} spikes from {len(rates)} neurons over {span} s")

out = preprocess(spikes, PsthConfig())
print("active:", out.active, " dropped:", out.inactive)
print(f"{len(out.trials)} trials of {out.trials[0].n} bins")

# %% The smoothed trials feed straight into discovery.
result = cits_sample(out.trials[0], CitsConfig())
print("edges in trial 1:", sorted(result.rolled.edges))

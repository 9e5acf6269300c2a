"""Deterministic random-stream derivation.

All randomness in the package flows through counter-based Philox bit
generators keyed by ``numpy.random.SeedSequence`` tuples, so that

* a fixed master seed reproduces every trajectory bit-for-bit on any
  platform, and
* each (round, client) pair owns an independent substream, making
  federated trajectories invariant to client execution order.

Stream layout: ``(seed, STAGE, ...)`` where STAGE separates data
generation, initialization, per-round work, and per-repeat seeds.
"""

from __future__ import annotations

import numpy as np

_STAGE_DATA = 0
_STAGE_INIT = 1
_STAGE_ROUND = 2
_STAGE_RUN = 3


def _generator(*entropy) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def data_rng(seed: int) -> np.random.Generator:
    """Stream used for dataset synthesis."""
    return _generator(seed, _STAGE_DATA, 0)


def split_rng(seed: int) -> np.random.Generator:
    """Stream used for partitioning, independent of the synthesis stream."""
    return _generator(seed, _STAGE_DATA, 1)


def init_rng(seed: int) -> np.random.Generator:
    """Stream used to draw a run's initial model parameter."""
    return _generator(seed, _STAGE_INIT)


def round_rng(seed: int, round_index: int, client_id: int) -> np.random.Generator:
    """Independent substream for one client at one round.

    Within a round the draw order is: participation (only when p < 1),
    then minibatch indices, then compression randomness.
    """
    return _generator(seed, _STAGE_ROUND, round_index, client_id)


def run_seed(master_seed: int, repeat: int) -> int:
    """Derive the seed of repeat ``repeat`` from the master seed."""
    ss = np.random.SeedSequence((master_seed, _STAGE_RUN, repeat))
    return int(ss.generate_state(1, dtype=np.uint64)[0])

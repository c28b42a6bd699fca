from __future__ import annotations

from typing import NamedTuple

import numpy as np

STREAM_NAMES = ("placement", "shadowing", "fading", "block_error")


class RunStreams(NamedTuple):
    """Independent generators derived from one master seed; they never alias."""

    placement: np.random.Generator
    shadowing: np.random.Generator
    fading: np.random.Generator
    block_error: np.random.Generator


def spawn_streams(seed: int) -> RunStreams:
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return RunStreams(*(np.random.default_rng(child) for child in children))

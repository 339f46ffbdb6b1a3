"""Counter-based random streams.

Each logical draw position is a pure function of (seed, position), realized
with the Philox counter-based generator: position ``t`` lives in counter
block ``t // 4``.  Replication ``r`` of a simulation owns a block-aligned
counter range derived from (seed, r), so any parallel schedule reproducing
the same positions yields bit-identical results.

Uniforms are built from the top 53 bits of each raw word, offset by half an
ulp so they lie strictly inside (0, 1); normals come from the inverse normal
CDF applied to those uniforms.  No rejection sampling is used anywhere, so
the per-draw consumption count is fixed.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

_U64_SHIFT = np.uint64(11)
_INV_2_53 = 2.0**-53


def _blocks(n_draws: int) -> int:
    # Philox emits 4 uint64 words per counter increment.
    return -(-n_draws // 4)


def raw_words(seed: int, start_block: int, n_words: int) -> np.ndarray:
    bg = Philox(key=[int(seed), 0], counter=[int(start_block), 0, 0, 0])
    return np.asarray(bg.random_raw(n_words), dtype=np.uint64)


def _to_uniform(words: np.ndarray) -> np.ndarray:
    return ((words >> _U64_SHIFT).astype(np.float64) + 0.5) * _INV_2_53


def uniforms(seed: int, n: int, *, start_block: int = 0) -> np.ndarray:
    """n uniforms in (0, 1) from the stream keyed by ``seed``."""
    return _to_uniform(raw_words(seed, start_block, n))


def rep_uniforms(seed: int, rep: int, n: int) -> np.ndarray:
    """Replication substream: n uniforms from blocks owned by replication ``rep``."""
    per_rep = _blocks(n)
    return _to_uniform(raw_words(seed, rep * per_rep, n))


def batch_rep_uniforms(seed: int, n_reps: int, n: int) -> np.ndarray:
    """(n_reps, n) uniforms, row r bit-identical to ``rep_uniforms(seed, r, n)``."""
    per_rep = _blocks(n)
    words = raw_words(seed, 0, n_reps * per_rep * 4).reshape(n_reps, per_rep * 4)
    return _to_uniform(words[:, :n])


def std_normals(seed: int, shape: tuple[int, ...], *, start_block: int = 0) -> np.ndarray:
    """Standard normals via inverse-CDF transform of the uniform stream."""
    n = int(np.prod(shape))
    return ndtri(uniforms(seed, n, start_block=start_block)).reshape(shape)

"""Counter-based uniform variates.

Every draw is a pure function of ``(seed, run_index, t)``: a SplitMix64
finalizer chain hashes the three integers into 64 bits, and the top 53 bits
become a double in ``[0, 1)``.  Because no generator state is carried
between draws, runs and time steps can be evaluated in any order (or in
parallel) and still reproduce bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SeededSampler", "counter_uniforms"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_RUN_SALT = np.uint64(0xD1B54A32D192ED03)
_T_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_U64_MAX = 2**64 - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(x, name: str) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype.kind not in "iu":
        if arr.dtype == object:
            if any(int(v) < 0 or int(v) > _U64_MAX for v in arr.ravel()):
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")
            return np.array(arr.tolist(), dtype=np.uint64)
        raise TypeError(f"{name} must be integer valued")
    if arr.dtype.kind == "i" and np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr.astype(np.uint64)


def counter_uniforms(seed: int, run_index, t) -> np.ndarray:
    """Uniform variates on ``[0, 1)`` keyed by ``(seed, run_index, t)``.

    ``run_index`` and ``t`` broadcast against each other, so
    ``counter_uniforms(s, runs[:, None], ts[None, :])`` yields a
    ``(len(runs), len(ts))`` block in one call.
    """
    if not 0 <= int(seed) <= _U64_MAX:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    s = np.array([int(seed)], dtype=np.uint64)
    run = _as_u64(run_index, "run_index")
    step = _as_u64(t, "t")
    with np.errstate(over="ignore"):
        key = _mix(s + _GOLDEN)
        h = _mix(key ^ _mix(run * _RUN_SALT + _GOLDEN))
        h = _mix(h ^ _mix(step * _T_SALT + _GOLDEN))
    out = (h >> np.uint64(11)).astype(np.float64) * 2.0**-53
    shape = np.broadcast_shapes(np.shape(run_index), np.shape(t))
    return out.reshape(shape)


@dataclass(frozen=True)
class SeededSampler:
    """Deterministic uniform source for one simulation run."""

    seed: int = 0
    run_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= _U64_MAX:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if int(self.run_index) < 0:
            raise ValueError("run_index must be non-negative")

    def uniform(self, t: int) -> float:
        return float(counter_uniforms(self.seed, self.run_index, t))

    def uniforms(self, t) -> np.ndarray:
        return counter_uniforms(self.seed, self.run_index, np.asarray(t))

"""Deterministic seed derivation.

Every random choice in the package is driven by a 64-bit seed derived
from a master seed and an index path, e.g. ``derive_seed(master, d, i)``
for trial ``d``, member ``i``.  The scheme is a SplitMix64-style mix:
the master seed is finalised once, then each path index is finalised and
XOR-folded in, with a final mix per step.  Because the derived seed
depends only on ``(master, path)``, extending a plan with more trials or
members never perturbs the seeds of earlier ones.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """SplitMix64 finaliser (Steele, Lea & Flood)."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master_seed: int, *path: int) -> int:
    """Derive a 64-bit seed from ``master_seed`` and an index path."""
    state = _mix64(master_seed & _MASK)
    for index in path:
        state = _mix64(state ^ _mix64((index + 1) & _MASK))
    return state

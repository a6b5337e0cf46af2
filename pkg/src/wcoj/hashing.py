"""Seedable 64-bit tuple hash used for worker routing and index sharding.

Python's builtin hash is identity-like on small ints and salted per process
for strings, so it is unusable for reproducible routing. This is a splitmix64
style mixer: cheap, stateless, and stable across runs and platforms.
"""

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def hash_values(values: tuple, seed: int = 0) -> int:
    """Hash a tuple of ints into [0, 2**64)."""
    h = mix64((seed ^ (len(values) * _GAMMA)) & _MASK)
    for v in values:
        h = mix64(h ^ ((v * _GAMMA) & _MASK))
    return h


def owner_of(values: tuple, workers: int, seed: int = 0) -> int:
    """Deterministic worker id in [0, workers) for a routing key."""
    if workers == 1:
        return 0
    return hash_values(values, seed) % workers

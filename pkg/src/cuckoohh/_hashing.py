"""Seedable 64-bit mixing hash used for bucket indexes, fingerprints and ownership."""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

# distinct salts keep the hash families independent of one another
SALT_INDEX = 0x243F6A8885A308D3
SALT_FINGERPRINT = 0x13198A2E03707344
SALT_ALTERNATE = 0xA4093822299F31D0
SALT_OWNER = 0x082EFA98EC4E6C89
SALT_ROWS = 0x452821E638D01377


def mix64(x: int) -> int:
    """splitmix64 finalizer: a bijection on 64-bit integers."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def seeded_salt(seed: int, purpose: int) -> int:
    return mix64((seed & MASK64) ^ purpose)


def hash64(item: int, salt: int) -> int:
    return mix64((item & MASK64) ^ salt)

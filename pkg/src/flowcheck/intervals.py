"""Sets of integer keys as sorted unions of half-open intervals.

Endpoints live in Z extended with +/-infinity, so the full key universe
[-inf, inf) is an ordinary value. All operations are exact and total;
intervals are kept sorted, disjoint and non-adjacent (adjacency is merged,
so {[0,5), [5,9)} normalizes to {[0,9)}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

INF = math.inf
NEG_INF = -math.inf

Endpoint = float  # int or +/-math.inf


def _norm(pairs: Iterable[tuple[Endpoint, Endpoint]]) -> tuple[tuple[Endpoint, Endpoint], ...]:
    ivs = sorted((lo, hi) for lo, hi in pairs if lo < hi)
    out: list[tuple[Endpoint, Endpoint]] = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class KeySet:
    """An immutable set of integer keys, stored as half-open intervals."""

    ivs: tuple[tuple[Endpoint, Endpoint], ...]

    @staticmethod
    def of(*pairs: tuple[Endpoint, Endpoint]) -> "KeySet":
        return KeySet(_norm(pairs))

    @staticmethod
    def empty() -> "KeySet":
        return _EMPTY

    @staticmethod
    def full() -> "KeySet":
        return _FULL

    @staticmethod
    def point(k: int) -> "KeySet":
        return KeySet(((k, k + 1),))

    @staticmethod
    def points(keys: Iterable[int]) -> "KeySet":
        return KeySet(_norm((k, k + 1) for k in keys))

    @staticmethod
    def span(lo: Endpoint, hi: Endpoint) -> "KeySet":
        """Keys k with lo <= k < hi."""
        return KeySet(_norm([(lo, hi)]))

    @staticmethod
    def at_least(lo: Endpoint) -> "KeySet":
        return KeySet.span(lo, INF)

    def is_empty(self) -> bool:
        return not self.ivs

    def __contains__(self, k: Endpoint) -> bool:
        return any(lo <= k < hi for lo, hi in self.ivs)

    def __or__(self, other: "KeySet") -> "KeySet":
        if not self.ivs:
            return other
        if not other.ivs:
            return self
        return KeySet(_norm(self.ivs + other.ivs))

    def __and__(self, other: "KeySet") -> "KeySet":
        out = []
        js = other.ivs
        j = 0
        for lo, hi in self.ivs:
            while j < len(js) and js[j][1] <= lo:
                j += 1
            i = j
            while i < len(js) and js[i][0] < hi:
                out.append((max(lo, js[i][0]), min(hi, js[i][1])))
                i += 1
        return KeySet(_norm(out))

    def __sub__(self, other: "KeySet") -> "KeySet":
        out = []
        for lo, hi in self.ivs:
            cur = lo
            for olo, ohi in other.ivs:
                if ohi <= cur or olo >= hi:
                    continue
                if olo > cur:
                    out.append((cur, olo))
                cur = max(cur, ohi)
                if cur >= hi:
                    break
            if cur < hi:
                out.append((cur, hi))
        return KeySet(_norm(out))

    def issubset(self, other: "KeySet") -> bool:
        return (self - other).is_empty()

    def __le__(self, other: "KeySet") -> bool:
        return self.issubset(other)

    def min_key(self) -> Endpoint:
        if not self.ivs:
            raise ValueError("empty key set has no minimum")
        return self.ivs[0][0]

    def sample_keys(self, fallback: int = 0) -> list[int]:
        """A few concrete integer members, one per interval boundary region."""
        out: list[int] = []
        for lo, hi in self.ivs:
            if lo == NEG_INF:
                lo_i = (hi - 1) if hi != INF else fallback
            else:
                lo_i = int(lo)
            out.append(int(lo_i))
            if hi != INF and hi - 1 > lo_i:
                out.append(int(hi - 1))
        return out

    def finite_keys(self) -> list[int]:
        """All members, defined only for bounded sets."""
        out: list[int] = []
        for lo, hi in self.ivs:
            if lo == NEG_INF or hi == INF:
                raise ValueError("key set is unbounded")
            out.extend(range(int(lo), int(hi)))
        return out

    def __repr__(self) -> str:
        if not self.ivs:
            return "KeySet()"
        return "KeySet(%s)" % ", ".join("[%s,%s)" % (lo, hi) for lo, hi in self.ivs)


_EMPTY = KeySet(())
_FULL = KeySet(((NEG_INF, INF),))


def encode_endpoint(x: Endpoint):
    if x == INF:
        return "inf"
    if x == NEG_INF:
        return "-inf"
    return int(x)


def decode_endpoint(v) -> Endpoint:
    if v == "inf":
        return INF
    if v == "-inf":
        return NEG_INF
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError("bad interval endpoint: %r" % (v,))
    return v


def encode_keyset(s: KeySet) -> list:
    return [[encode_endpoint(lo), encode_endpoint(hi)] for lo, hi in s.ivs]


def decode_keyset(v) -> KeySet:
    if not isinstance(v, list):
        raise ValueError("key set must be a list of [lo, hi) pairs: %r" % (v,))
    pairs = []
    for p in v:
        if not isinstance(p, list) or len(p) != 2:
            raise ValueError("bad interval: %r" % (p,))
        pairs.append((decode_endpoint(p[0]), decode_endpoint(p[1])))
    return KeySet(_norm(pairs))

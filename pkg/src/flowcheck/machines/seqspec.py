"""Sequential dictionary specification: fold a key set, one result per op."""

from __future__ import annotations

from typing import Iterable, List, Tuple


def sequential_spec(ops: Iterable[Tuple[str, int]], initial=frozenset()) -> List[bool]:
    """member: res iff k present; insert: res iff k was absent (and adds it);
    delete: res iff k was present (and removes it)."""
    contents = set(initial)
    results: List[bool] = []
    for kind, key in ops:
        if kind == "member":
            results.append(key in contents)
        elif kind == "insert":
            results.append(key not in contents)
            contents.add(key)
        elif kind == "delete":
            results.append(key in contents)
            contents.discard(key)
        else:
            raise ValueError("unknown dictionary op %r" % kind)
    return results

"""Flow domains and node-label domains.

A flow domain is a positively ordered, omega-continuous semiring
(D, leq, join, +, *, 0, 1) packaged with a closed-form Kleene star and a
canonical partial residual. Built-ins:

  path_count   (N u {inf}, <=, max, +, *, 0, 1)
  keyset       (2^KS, subset, union, union, intersect, empty, KS)
  lower_bound  (Z u {+-inf}, >=, min, min, max, inf, -inf)
  upper_bound  (Z u {+-inf}, <=, max, max, min, -inf, inf)
  last_edge    finite sets over tags + a fresh unit, with the lifted
               projection product (a path's value is its last edge's tag)
  product      componentwise pairing of any two domains

star(a) is the least solution of x = 1 + a*x; residual(t, p) is one
canonical d with p + d = t, or None when the canonical rule has no
completion. Node labels form join-semilattices with a bottom element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .intervals import KeySet, decode_keyset, encode_keyset

INF = math.inf
NEG_INF = -math.inf

Value = Any


@dataclass(frozen=True)
class FlowDomain:
    name: str
    leq: Callable[[Value, Value], bool]
    join: Callable[[Value, Value], Value]
    plus: Callable[[Value, Value], Value]
    times: Callable[[Value, Value], Value]
    zero: Value
    one: Value
    star: Callable[[Value], Value]
    residual: Callable[[Value, Value], Optional[Value]]  # residual(target, part)
    encode: Callable[[Value], Any]
    decode: Callable[[Any], Value]
    descriptor: Any = None

    def __repr__(self) -> str:
        return "FlowDomain(%s)" % self.name

    def sum(self, values) -> Value:
        acc = self.zero
        for v in values:
            acc = self.plus(acc, v)
        return acc


@dataclass(frozen=True)
class LabelDomain:
    name: str
    leq: Callable[[Value, Value], bool]
    join: Callable[[Value, Value], Value]
    bottom: Value
    encode: Callable[[Value], Any]
    decode: Callable[[Any], Value]
    descriptor: Any = None

    def __repr__(self) -> str:
        return "LabelDomain(%s)" % self.name

    def join_all(self, values) -> Value:
        acc = self.bottom
        for v in values:
            acc = self.join(acc, v)
        return acc


# ---------------------------------------------------------------------------
# path counting


def _nat_check(x):
    if x != INF and (isinstance(x, bool) or not isinstance(x, int) or x < 0):
        raise ValueError("path count must be a natural or inf: %r" % (x,))
    return x


def _nat_plus(a, b):
    if a == INF or b == INF:
        return INF
    return a + b


def _nat_times(a, b):
    # inf * 0 = 0, forced by annihilation
    if a == 0 or b == 0:
        return 0
    if a == INF or b == INF:
        return INF
    return a * b


def _nat_star(a):
    return 1 if a == 0 else INF


def _nat_residual(t, p):
    if t == INF:
        return 0 if p == INF else INF
    if p == INF or p > t:
        return None
    return t - p


def _nat_encode(x):
    return "inf" if x == INF else x


def _nat_decode(v):
    if v == "inf":
        return INF
    return _nat_check(v)


def path_count_domain() -> FlowDomain:
    return FlowDomain(
        name="path_count",
        leq=lambda a, b: a <= b,
        join=max,
        plus=_nat_plus,
        times=_nat_times,
        zero=0,
        one=1,
        star=_nat_star,
        residual=_nat_residual,
        encode=_nat_encode,
        decode=_nat_decode,
        descriptor="path_count",
    )


# ---------------------------------------------------------------------------
# keysets (sets of keys; multiplication is intersection along a path)


def keyset_domain() -> FlowDomain:
    full = KeySet.full()
    return FlowDomain(
        name="keyset",
        leq=lambda a, b: a.issubset(b),
        join=lambda a, b: a | b,
        plus=lambda a, b: a | b,
        times=lambda a, b: a & b,
        zero=KeySet.empty(),
        one=full,
        star=lambda a: full,
        residual=lambda t, p: (t - p) if p.issubset(t) else None,
        encode=encode_keyset,
        decode=decode_keyset,
        descriptor="keyset",
    )


# ---------------------------------------------------------------------------
# lower / upper bound domains


def _bound_encode(x):
    if x == INF:
        return "inf"
    if x == NEG_INF:
        return "-inf"
    return x


def _bound_decode(v):
    if v == "inf":
        return INF
    if v == "-inf":
        return NEG_INF
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError("bound value must be an integer or +-inf: %r" % (v,))
    return v


def lower_bound_domain() -> FlowDomain:
    # order is reversed: smaller flow values are *larger* numbers
    def residual(t, p):
        if p == t:
            return INF
        if t < p:
            return t
        return None

    return FlowDomain(
        name="lower_bound",
        leq=lambda a, b: a >= b,
        join=min,
        plus=min,
        times=max,
        zero=INF,
        one=NEG_INF,
        star=lambda a: NEG_INF,
        residual=residual,
        encode=_bound_encode,
        decode=_bound_decode,
        descriptor="lower_bound",
    )


def upper_bound_domain() -> FlowDomain:
    def residual(t, p):
        if p == t:
            return NEG_INF
        if t > p:
            return t
        return None

    return FlowDomain(
        name="upper_bound",
        leq=lambda a, b: a <= b,
        join=max,
        plus=max,
        times=min,
        zero=NEG_INF,
        one=INF,
        star=lambda a: INF,
        residual=residual,
        encode=_bound_encode,
        decode=_bound_decode,
        descriptor="upper_bound",
    )


# ---------------------------------------------------------------------------
# last-edge domain
#
# Values are finite sets over (tags u {UNIT}). The product lifts the
# projection operator u . v = v (v a tag), u . UNIT = u pointwise; on
# singletons this is exactly "a path carries its last edge's tag". Sums of
# distinct tags stay exact as larger sets instead of collapsing, which is
# what keeps + total and distributive.

UNIT = "__unit__"


def _lastedge_times(a: frozenset, b: frozenset) -> frozenset:
    if not a or not b:
        return frozenset()
    out = set(x for x in b if x != UNIT)
    if UNIT in b:
        out.update(a)
    return frozenset(out)


def last_edge_domain(tags) -> FlowDomain:
    tagset = tuple(sorted(set(tags)))
    universe = frozenset(tagset) | {UNIT}

    def encode(s: frozenset):
        if not s:
            return "zero"
        if s == frozenset([UNIT]):
            return "one"
        if len(s) == 1:
            return next(iter(s))
        return sorted("one" if x == UNIT else x for x in s)

    def decode(v):
        if v == "zero":
            return frozenset()
        if v == "one":
            return frozenset([UNIT])
        if isinstance(v, str):
            if v not in tagset:
                raise ValueError("unknown edge tag %r" % v)
            return frozenset([v])
        if isinstance(v, list):
            out = set()
            for x in v:
                out.add(UNIT if x == "one" else x)
            if not out <= universe:
                raise ValueError("unknown edge tags in %r" % (v,))
            return frozenset(out)
        raise ValueError("bad last-edge value: %r" % (v,))

    return FlowDomain(
        name="last_edge(%s)" % ",".join(tagset),
        leq=lambda a, b: a <= b,
        join=lambda a, b: a | b,
        plus=lambda a, b: a | b,
        times=_lastedge_times,
        zero=frozenset(),
        one=frozenset([UNIT]),
        star=lambda a: a | {UNIT},
        residual=lambda t, p: (t - p) if p <= t else None,
        encode=encode,
        decode=decode,
        descriptor={"last_edge": {"tags": list(tagset)}},
    )


# ---------------------------------------------------------------------------
# products


def product_domain(d1: FlowDomain, d2: FlowDomain) -> FlowDomain:
    def residual(t, p):
        r1 = d1.residual(t[0], p[0])
        if r1 is None:
            return None
        r2 = d2.residual(t[1], p[1])
        if r2 is None:
            return None
        return (r1, r2)

    def decode(v):
        if not isinstance(v, list) or len(v) != 2:
            raise ValueError("product value must be a two-element array: %r" % (v,))
        return (d1.decode(v[0]), d2.decode(v[1]))

    return FlowDomain(
        name="%s x %s" % (d1.name, d2.name),
        leq=lambda a, b: d1.leq(a[0], b[0]) and d2.leq(a[1], b[1]),
        join=lambda a, b: (d1.join(a[0], b[0]), d2.join(a[1], b[1])),
        plus=lambda a, b: (d1.plus(a[0], b[0]), d2.plus(a[1], b[1])),
        times=lambda a, b: (d1.times(a[0], b[0]), d2.times(a[1], b[1])),
        zero=(d1.zero, d2.zero),
        one=(d1.one, d2.one),
        star=lambda a: (d1.star(a[0]), d2.star(a[1])),
        residual=residual,
        encode=lambda v: [d1.encode(v[0]), d2.encode(v[1])],
        decode=decode,
        descriptor={"product": [d1.descriptor, d2.descriptor]},
    )


def make_domain(descriptor) -> FlowDomain:
    """Build a flow domain from its serializable descriptor."""
    if descriptor == "path_count":
        return path_count_domain()
    if descriptor == "keyset":
        return keyset_domain()
    if descriptor == "lower_bound":
        return lower_bound_domain()
    if descriptor == "upper_bound":
        return upper_bound_domain()
    if isinstance(descriptor, dict):
        if "last_edge" in descriptor:
            return last_edge_domain(descriptor["last_edge"]["tags"])
        if "product" in descriptor:
            a, b = descriptor["product"]
            return product_domain(make_domain(a), make_domain(b))
    raise ValueError("unknown flow domain descriptor: %r" % (descriptor,))


# ---------------------------------------------------------------------------
# node label domains


def trivial_labels() -> LabelDomain:
    return LabelDomain(
        name="trivial",
        leq=lambda a, b: True,
        join=lambda a, b: None,
        bottom=None,
        encode=lambda v: None,
        decode=lambda v: None,
        descriptor="trivial",
    )


_BOT = ("bot",)
_TOP = ("top",)


def flat_labels(bottom_name="bottom", top_name="top", middle_key=None) -> LabelDomain:
    """A flat lattice: bottom below everything, top above, middles unordered.

    Middle elements are arbitrary hashables (ints in practice); middle_key
    wraps them in serialized form, e.g. {"tid": 3} for the marked-node labels.
    """

    def leq(a, b):
        return a == b or a == _BOT or b == _TOP

    def join(a, b):
        if a == b or a == _BOT:
            return b
        if b == _BOT:
            return a
        return _TOP

    def encode(v):
        if v == _BOT:
            return bottom_name
        if v == _TOP:
            return top_name
        return {middle_key: v} if middle_key else v

    def decode(v):
        if v == bottom_name:
            return _BOT
        if v == top_name:
            return _TOP
        if middle_key:
            if not isinstance(v, dict) or set(v) != {middle_key}:
                raise ValueError("bad flat label: %r" % (v,))
            return v[middle_key]
        return v

    return LabelDomain(
        name="flat",
        leq=leq,
        join=join,
        bottom=_BOT,
        encode=encode,
        decode=decode,
        descriptor={"flat": {"bottom": bottom_name, "top": top_name, "middle_key": middle_key}},
    )


FLAT_BOTTOM = _BOT
FLAT_TOP = _TOP


def harris_labels() -> LabelDomain:
    """Mark labels: "unmarked" below thread ids, which are unordered below "top"."""
    d = flat_labels(bottom_name="unmarked", top_name="top", middle_key="tid")
    return LabelDomain(
        name="harris_label",
        leq=d.leq,
        join=d.join,
        bottom=d.bottom,
        encode=d.encode,
        decode=d.decode,
        descriptor="harris_label",
    )


def contents_labels() -> LabelDomain:
    """Node contents as key sets, joined by union."""
    return LabelDomain(
        name="contents",
        leq=lambda a, b: a.issubset(b),
        join=lambda a, b: a | b,
        bottom=KeySet.empty(),
        encode=encode_keyset,
        decode=decode_keyset,
        descriptor="contents",
    )


def lock_entry(tid: int, unsynced: bool = False) -> str:
    return "%d~" % tid if unsynced else "%d" % tid


def lockset_labels() -> LabelDomain:
    """Sets of lock holders; "t" is a clean hold, "t~" one whose heap is out of sync."""

    def decode(v):
        if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
            raise ValueError("lockset must be a list of strings: %r" % (v,))
        return frozenset(v)

    return LabelDomain(
        name="lockset",
        leq=lambda a, b: a <= b,
        join=lambda a, b: a | b,
        bottom=frozenset(),
        encode=lambda v: sorted(v),
        decode=decode,
        descriptor="lockset",
    )


def product_labels(a1: LabelDomain, a2: LabelDomain) -> LabelDomain:
    def decode(v):
        if not isinstance(v, list) or len(v) != 2:
            raise ValueError("product label must be a two-element array: %r" % (v,))
        return (a1.decode(v[0]), a2.decode(v[1]))

    return LabelDomain(
        name="%s x %s" % (a1.name, a2.name),
        leq=lambda a, b: a1.leq(a[0], b[0]) and a2.leq(a[1], b[1]),
        join=lambda a, b: (a1.join(a[0], b[0]), a2.join(a[1], b[1])),
        bottom=(a1.bottom, a2.bottom),
        encode=lambda v: [a1.encode(v[0]), a2.encode(v[1])],
        decode=decode,
        descriptor={"product": [a1.descriptor, a2.descriptor]},
    )


def dictionary_labels() -> LabelDomain:
    return product_labels(contents_labels(), lockset_labels())


def make_label_domain(descriptor) -> LabelDomain:
    if descriptor == "trivial":
        return trivial_labels()
    if descriptor == "harris_label":
        return harris_labels()
    if descriptor == "contents":
        return contents_labels()
    if descriptor == "lockset":
        return lockset_labels()
    if isinstance(descriptor, dict):
        if "flat" in descriptor:
            f = descriptor["flat"]
            return flat_labels(f.get("bottom", "bottom"), f.get("top", "top"), f.get("middle_key"))
        if "product" in descriptor:
            a, b = descriptor["product"]
            return product_labels(make_label_domain(a), make_label_domain(b))
    raise ValueError("unknown label domain descriptor: %r" % (descriptor,))


# ---------------------------------------------------------------------------
# law checking


@dataclass(frozen=True)
class LawViolation:
    law: str
    witness: tuple

    def __repr__(self):
        return "LawViolation(%s, witness=%r)" % (self.law, self.witness)


@dataclass
class LawReport:
    domain: str
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def law_check(d: FlowDomain, samples) -> LawReport:
    """Evaluate the semiring, order, star and residual laws on all sample tuples."""
    rep = LawReport(domain=d.name)
    xs = list(samples)

    def law(name, cond, witness):
        rep.checked += 1
        if not cond:
            rep.violations.append(LawViolation(name, witness))

    for a in xs:
        law("plus-identity", d.plus(a, d.zero) == a, (a,))
        law("times-identity-left", d.times(d.one, a) == a, (a,))
        law("times-identity-right", d.times(a, d.one) == a, (a,))
        law("annihilation-left", d.times(d.zero, a) == d.zero, (a,))
        law("annihilation-right", d.times(a, d.zero) == d.zero, (a,))
        law("zero-least", d.leq(d.zero, a), (a,))
        law("order-reflexive", d.leq(a, a), (a,))
        s = d.star(a)
        law("star-left", s == d.plus(d.one, d.times(a, s)), (a,))
        law("star-right", s == d.plus(d.one, d.times(s, a)), (a,))
    for a in xs:
        for b in xs:
            law("plus-commutative", d.plus(a, b) == d.plus(b, a), (a, b))
            law(
                "order-antisymmetric",
                not (d.leq(a, b) and d.leq(b, a)) or a == b,
                (a, b),
            )
            r = d.residual(a, b)
            if r is not None:
                law("residual-sound", d.plus(b, r) == a, (a, b, r))
            j = d.join(a, b)
            law("join-upper", d.leq(a, j) and d.leq(b, j), (a, b))
    for a in xs:
        for b in xs:
            for c in xs:
                law("plus-associative", d.plus(a, d.plus(b, c)) == d.plus(d.plus(a, b), c), (a, b, c))
                law(
                    "times-associative",
                    d.times(a, d.times(b, c)) == d.times(d.times(a, b), c),
                    (a, b, c),
                )
                law(
                    "distributes-left",
                    d.times(a, d.plus(b, c)) == d.plus(d.times(a, b), d.times(a, c)),
                    (a, b, c),
                )
                law(
                    "distributes-right",
                    d.times(d.plus(a, b), c) == d.plus(d.times(a, c), d.times(b, c)),
                    (a, b, c),
                )
                if d.leq(a, b):
                    law("plus-monotone", d.leq(d.plus(a, c), d.plus(b, c)), (a, b, c))
                    law("times-monotone-right", d.leq(d.times(c, a), d.times(c, b)), (a, b, c))
                    law("times-monotone-left", d.leq(d.times(a, c), d.times(b, c)), (a, b, c))
                if d.leq(a, b) and d.leq(b, c):
                    law("order-transitive", d.leq(a, c), (a, b, c))
    return rep


def label_law_check(a: LabelDomain, samples) -> LawReport:
    rep = LawReport(domain=a.name)
    xs = list(samples)

    def law(name, cond, witness):
        rep.checked += 1
        if not cond:
            rep.violations.append(LawViolation(name, witness))

    for x in xs:
        law("join-idempotent", a.join(x, x) == x, (x,))
        law("bottom-least", a.leq(a.bottom, x), (x,))
    for x in xs:
        for y in xs:
            law("join-commutative", a.join(x, y) == a.join(y, x), (x, y))
            j = a.join(x, y)
            law("join-upper", a.leq(x, j) and a.leq(y, j), (x, y))
            for z in xs:
                law("join-associative", a.join(x, a.join(y, z)) == a.join(a.join(x, y), z), (x, y, z))
    return rep


def domain_samples(d: FlowDomain, small: bool = False):
    """A default sample set for law checking, covering each built-in carrier."""
    name = d.name
    if name == "path_count":
        return [0, 1, 2, INF] if small else [0, 1, 2, 3, INF]
    if name == "keyset":
        base = [
            KeySet.empty(),
            KeySet.span(0, 5),
            KeySet.span(3, 9),
            KeySet.full(),
        ]
        return base if small else base + [KeySet.of((0, 2), (7, 9)), KeySet.at_least(5)]
    if name == "lower_bound":
        return [NEG_INF, 0, 3, INF] if small else [NEG_INF, -2, 0, 3, INF]
    if name == "upper_bound":
        return [NEG_INF, 0, 3, INF] if small else [NEG_INF, -2, 0, 3, INF]
    if name.startswith("last_edge"):
        tags = d.descriptor["last_edge"]["tags"]
        vals = [d.zero, d.one] + [frozenset([t]) for t in tags[:2]]
        if not small and len(tags) >= 2:
            vals.append(frozenset([tags[0], UNIT]))
        return vals
    if " x " in name and isinstance(d.descriptor, dict) and "product" in d.descriptor:
        d1 = make_domain(d.descriptor["product"][0])
        d2 = make_domain(d.descriptor["product"][1])
        s1 = domain_samples(d1, small=True)[:3]
        s2 = domain_samples(d2, small=True)[:3]
        return [(x, y) for x in s1 for y in s2]
    raise ValueError("no default samples for %s" % name)

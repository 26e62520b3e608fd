"""Exact verification of jointly robust following graphs.

A time-varying graph with leader set L is jointly r-robust following with
l hops (under the f-local model) when, for every f-local removal set F,
every nonempty follower subset S of the surviving graph contains, within
each bounded interval, at least one node with r independent paths of at
most l hops originating outside S.

Everything here is exhaustive and exact; instances are desk-scale
(n <= 15, l <= 3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

from .graphs import (
    DiGraph,
    GraphError,
    TopologySchedule,
    all_paths_into,
    in_neighbors_l,
    union_graph,
)


@dataclass(frozen=True)
class RobustnessQuery:
    schedule: TopologySchedule
    leaders: frozenset[int]
    r: int
    l: int
    f: int
    # Definition of independent paths: whether relay nodes may lie inside S.
    # The default follows the footnote reading (only the endpoint is shared);
    # the strict reading forces relays outside S as well.
    relays_inside_s: bool = True
    # Hard cap on |F| during f-local enumeration; None = spec default.
    f_cap: int | None = None

    def __post_init__(self):
        if self.r < 1:
            raise GraphError(f"r must be >= 1, got {self.r}")
        if self.f < 0:
            raise GraphError(f"f must be >= 0, got {self.f}")
        if self.l < 1:
            raise GraphError(f"l must be >= 1, got {self.l}")
        bad = [d for d in self.leaders if d < 1 or d > self.schedule.n]
        if bad:
            raise GraphError(f"leader ids {bad} outside node range")


@dataclass(frozen=True)
class Certificate:
    """A witness of violation: under removal set F, no node of S is jointly
    r-reachable anywhere in the given interval."""

    F: frozenset[int]
    S: frozenset[int]
    interval_index: int


@dataclass(frozen=True)
class RobustnessVerdict:
    holds: bool
    certificate: Certificate | None = None

    def __post_init__(self):
        if not self.holds and self.certificate is None:
            raise GraphError("failing verdict requires a certificate")


def _max_disjoint_paths(path_masks: list[int], target: int | None = None) -> int:
    """Maximum number of pairwise node-disjoint paths (masks exclude the
    shared endpoint). Branch and bound; early exit once ``target`` reached."""
    masks = sorted(set(path_masks), key=lambda m: (bin(m).count("1"), m))
    best = 0

    def search(idx: int, used: int, count: int) -> None:
        nonlocal best
        if count > best:
            best = count
        if target is not None and best >= target:
            return
        remaining = len(masks) - idx
        if count + remaining <= best:
            return
        for i in range(idx, len(masks)):
            if masks[i] & used == 0:
                search(i + 1, used | masks[i], count + 1)
                if target is not None and best >= target:
                    return

    search(0, 0, 0)
    return best


def _candidate_path_masks(
    paths, i: int, S: frozenset[int], forbidden: frozenset[int], relays_inside_s: bool
) -> list[int]:
    """Bitmasks (node i excluded) of paths ending at i whose source lies
    outside S and which avoid every forbidden node."""
    out = []
    for p in paths:
        nodes = p.nodes
        if nodes[0] in S or nodes[0] in forbidden:
            continue
        body = nodes[:-1]
        if any(v in forbidden for v in body[1:]):
            continue
        if not relays_inside_s and any(v in S for v in body[1:]):
            continue
        m = 0
        for v in body:
            m |= 1 << v
        out.append(m)
    return out


class _PathCache:
    """Per-(graph, destination) cache of all simple paths of length <= l."""

    def __init__(self, l: int):
        self.l = l
        self._cache: dict[tuple[int, int], list] = {}

    def paths_into(self, g: DiGraph, key, i: int):
        ck = (key, i)
        if ck not in self._cache:
            self._cache[ck] = all_paths_into(g, i, self.l)
        return self._cache[ck]


def independent_path_count(
    g: DiGraph,
    S: frozenset[int] | set[int],
    i: int,
    l: int,
    forbidden: frozenset[int] = frozenset(),
    relays_inside_s: bool = True,
    target: int | None = None,
) -> int:
    """Maximum number of pairwise-independent paths of length <= l ending at
    i that originate outside S. Paths share no node except i.

    ``forbidden`` nodes are excluded entirely (removal set F already taken
    out of the graph). With ``target`` set, counting stops once reached.
    """
    S = frozenset(S)
    if i not in S:
        raise GraphError(f"node {i} must belong to S")
    paths = all_paths_into(g, i, l)
    masks = _candidate_path_masks(paths, i, S, frozenset(forbidden), relays_inside_s)
    if not masks:
        return 0
    return _max_disjoint_paths(masks, target=target)


def jointly_reachable(
    schedule: TopologySchedule,
    interval: range,
    S: frozenset[int] | set[int],
    i: int,
    r: int,
    l: int,
    forbidden: frozenset[int] = frozenset(),
    relays_inside_s: bool = True,
) -> tuple[bool, int | None]:
    """Is node i a jointly r-reachable follower with l hops in the interval?

    Returns (holds, witness time K_i). The count is evaluated on single
    time-step graphs; the interval only supplies the candidate times.
    """
    S = frozenset(S)
    if i not in S:
        raise GraphError(f"node {i} must belong to S")
    forbidden = frozenset(forbidden)
    for k in interval:
        g = schedule.graph_at(k)
        if forbidden:
            g = g.induced(set(g.nodes) - forbidden)
        cnt = independent_path_count(
            g, S, i, l, forbidden=forbidden, relays_inside_s=relays_inside_s, target=r
        )
        if cnt >= r:
            return True, k
    return False, None


def _neighborhood_table(
    schedule: TopologySchedule, l: int
) -> dict[int, list[frozenset[int]]]:
    """N_i^{l-}[k] for every node i and scheduled step k of one period."""
    table: dict[int, list[frozenset[int]]] = {}
    for i in range(1, schedule.n + 1):
        table[i] = [
            in_neighbors_l(schedule.graphs[k], i, l) for k in range(schedule.period)
        ]
    return table


def default_f_cap(schedule: TopologySchedule, l: int, f: int) -> int:
    """Enumeration cap on |F|: f * ceil(n / smallest l-hop neighborhood)."""
    if f == 0:
        return 0
    n = schedule.n
    table = _neighborhood_table(schedule, l)
    m = min(len(s) for sizes in table.values() for s in sizes)
    return min(n - 1, f * math.ceil(n / max(m, 1)))


def f_local_sets(
    schedule: TopologySchedule, l: int, f: int, cap: int | None = None
):
    """All F subsets satisfying the f-local predicate over one period,
    in deterministic order: by cardinality, then lexicographically.

    The predicate: |N_i^{l-}[k] ∩ F| <= f for every node i outside F and
    every scheduled step k.
    """
    if cap is None:
        cap = default_f_cap(schedule, l, f)
    nodes = list(range(1, schedule.n + 1))
    table = _neighborhood_table(schedule, l)
    yield frozenset()
    for size in range(1, cap + 1):
        for combo in combinations(nodes, size):
            F = frozenset(combo)
            if _is_f_local(F, table, f, schedule.n):
                yield F


def _is_f_local(
    F: frozenset[int], table: dict[int, list[frozenset[int]]], f: int, n: int
) -> bool:
    for i in range(1, n + 1):
        if i in F:
            continue
        for nb in table[i]:
            if len(nb & F) > f:
                return False
    return True


def _interval_violation(
    schedule: TopologySchedule,
    interval: range,
    F: frozenset[int],
    followers: list[int],
    r: int,
    l: int,
    relays_inside_s: bool,
    cache: _PathCache,
) -> frozenset[int] | None:
    """First follower subset S (by cardinality, then lexicographically) with
    no jointly r-reachable node in the interval; None if all pass."""
    sub = {}
    inn = {}
    for k in interval:
        key = k % schedule.period
        g = schedule.graphs[key]
        gh = g.induced(set(g.nodes) - F) if F else g
        sub[k] = (key, gh)
        inn[k] = {i: gh.in_neighbors(i) for i in followers}

    Fs = frozenset(F)

    def node_ok(i: int, S: frozenset[int]) -> bool:
        for k in interval:
            # r distinct direct in-neighbors outside S are r independent paths
            if len(inn[k][i] - S) >= r:
                return True
        if l == 1:
            return False
        for k in interval:
            key, gh = sub[k]
            paths = cache.paths_into(gh, (key, Fs), i)
            masks = _candidate_path_masks(paths, i, S, Fs, relays_inside_s)
            if len(masks) >= r and _max_disjoint_paths(masks, target=r) >= r:
                return True
        return False

    for size in range(1, len(followers) + 1):
        for combo in combinations(followers, size):
            S = frozenset(combo)
            if not any(node_ok(i, S) for i in combo):
                return S
    return None


def is_jointly_robust_following(q: RobustnessQuery) -> RobustnessVerdict:
    """Exhaustive check of the jointly r-robust following property.

    Iterates f-local removal sets F (smallest first), and for each F checks
    every interval and every nonempty follower subset of the surviving
    graph. The first violation found is returned as the certificate, so
    certificates are deterministic.
    """
    schedule = q.schedule
    cache = _PathCache(q.l)
    intervals = schedule.intervals()
    for F in f_local_sets(schedule, q.l, q.f, cap=q.f_cap):
        followers = sorted(set(range(1, schedule.n + 1)) - q.leaders - F)
        if not followers:
            continue
        for t, interval in enumerate(intervals):
            S = _interval_violation(
                schedule, interval, F, followers, q.r, q.l, q.relays_inside_s, cache
            )
            if S is not None:
                return RobustnessVerdict(False, Certificate(F, S, t))
    return RobustnessVerdict(True)


def is_robust_following_static(
    g: DiGraph, leaders, r: int, l: int, f: int, **kw
) -> RobustnessVerdict:
    """Static version: single-graph schedule with a unit interval."""
    q = RobustnessQuery(
        TopologySchedule.static(g), frozenset(leaders), r=r, l=l, f=f, **kw
    )
    return is_jointly_robust_following(q)


def strongly_robust_wrt_leaders(g: DiGraph, leaders, r: int) -> bool:
    """Every nonempty S outside the leader set contains a node with at
    least r direct in-neighbors outside S. (The one-hop union-graph
    condition from the sliding-window literature; strictly stronger than
    the robust-following property at matching thresholds.)"""
    leaders = frozenset(leaders)
    rest = sorted(set(g.nodes) - leaders)
    inn = {i: g.in_neighbors(i) for i in rest}
    for size in range(1, len(rest) + 1):
        for combo in combinations(rest, size):
            S = frozenset(combo)
            if not any(len(inn[i] - S) >= r for i in combo):
                return False
    return True


def direct_leader_followers(g: DiGraph, leaders) -> frozenset[int]:
    """W_L: followers with a direct in-edge from some leader."""
    leaders = frozenset(leaders)
    return frozenset(
        i for (j, i) in g.edges if j in leaders and i not in leaders
    )


def necessary_conditions(q: RobustnessQuery) -> list[tuple[str, bool]]:
    """Four necessary conditions for the jointly (f+1)-robust following
    property; a cheap pre-filter before full enumeration."""
    schedule, leaders, f, l = q.schedule, q.leaders, q.f, q.l
    need = 2 * f + 1
    followers = sorted(set(range(1, schedule.n + 1)) - leaders)
    intervals = schedule.intervals()

    c1 = len(leaders) >= need

    c2 = True
    for interval in intervals:
        hit = False
        for k in interval:
            g = schedule.graph_at(k)
            for i in followers:
                if len(in_neighbors_l(g, i, l) & leaders) >= need:
                    hit = True
                    break
            if hit:
                break
        if not hit:
            c2 = False
            break

    c3 = True
    for interval in intervals:
        u = union_graph(schedule, interval)
        if len(direct_leader_followers(u, leaders)) < need:
            c3 = False
            break

    c4 = True
    for interval in intervals:
        for i in followers:
            if not any(
                len(schedule.graph_at(k).in_neighbors(i)) >= need for k in interval
            ):
                c4 = False
                break
        if not c4:
            break
    if c4 and len(leaders) == need:
        for interval in intervals:
            u = union_graph(schedule, interval)
            if len(u.edges) < need * len(followers):
                c4 = False
                break

    return [
        ("leader-count", c1),
        ("leader-coverage", c2),
        ("direct-leader-followers", c3),
        ("follower-in-degree", c4),
    ]

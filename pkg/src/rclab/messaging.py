"""Multi-hop message relaying with path provenance, and exact minimum
message covers.

A message is a (value, path) pair. Within a round every node receives one
message per simple path of length <= l ending at it; adversarial relays may
rewrite the value but the path is authentic and immutable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .graphs import DiGraph, Path, all_paths_into, bit_nodes, nodes_bit


class MessageError(ValueError):
    """Invalid message or message-set operation."""


@dataclass(frozen=True)
class Message:
    """A relayed value with its (authentic) path; destination is path[-1]."""

    value: float
    path: Path
    origin_time: int = 0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise MessageError(f"non-finite message value {self.value}")

    @property
    def source(self) -> int:
        return self.path.source

    @property
    def destination(self) -> int:
        return self.path.destination


@dataclass(frozen=True)
class MessageSet:
    """Messages sharing a destination, in the (stable) order received."""

    messages: tuple[Message, ...]

    def __post_init__(self):
        dests = {m.destination for m in self.messages}
        if len(dests) > 1:
            raise MessageError(f"mixed destinations in message set: {sorted(dests)}")

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    @property
    def destination(self) -> int:
        if not self.messages:
            raise MessageError("empty message set has no destination")
        return self.messages[0].destination

    def values(self) -> list[float]:
        return [m.value for m in self.messages]

    def sorted_by_value(self, reverse: bool = False) -> list[Message]:
        """Stable value sort; ties keep insertion order."""
        return sorted(self.messages, key=lambda m: m.value, reverse=reverse)

    def with_self(self, own_value: float, k: int = 0, dest: int | None = None) -> "MessageSet":
        """Append the explicit self-message (path = (i,))."""
        i = dest if dest is not None else (self.destination if self.messages else None)
        if i is None:
            raise MessageError("cannot infer destination for self-message")
        if self.messages and i != self.destination:
            raise MessageError(f"self-message destination {i} != {self.destination}")
        return MessageSet(self.messages + (Message(own_value, Path((i,)), k),))


class AdversaryHook(Protocol):
    """Per-node behavior plugged into relay_round for adversarial nodes."""

    def emit(self, k: int, receiver: int) -> float: ...

    def relay(self, value: float, k: int, receiver: int) -> float: ...


def relay_round(
    g: DiGraph,
    senders: Mapping[int, float],
    l: int,
    k: int = 0,
    hooks: Mapping[int, AdversaryHook] | None = None,
    paths: Mapping[int, Sequence[Path]] | None = None,
) -> dict[int, MessageSet]:
    """Deliver one message per (source, simple path of length <= l) pair.

    Values are rewritten by adversarial nodes along the path: the source's
    emission and each adversarial relay's corruption are per-(round, next
    receiver). Paths are never altered. Self-messages are not included;
    callers append them via MessageSet.with_self.

    ``paths`` may supply the per-destination path enumeration (it only
    depends on g and l), letting callers amortize it across rounds.
    """
    hooks = hooks or {}
    out: dict[int, MessageSet] = {}
    for i in g.nodes:
        msgs = []
        for p in (paths[i] if paths is not None else all_paths_into(g, i, l)):
            src = p.source
            hook = hooks.get(src)
            value = hook.emit(k, p.nodes[1]) if hook is not None else senders[src]
            for pos in range(1, p.hops):
                relay_hook = hooks.get(p.nodes[pos])
                if relay_hook is not None:
                    value = relay_hook.relay(value, k, p.nodes[pos + 1])
            msgs.append(Message(value, p, k))
        out[i] = MessageSet(tuple(msgs))
    return out


def _path_candidate_masks(messages: Sequence[Message]) -> list[int]:
    """Per-message candidate-node bitmasks: path nodes minus the destination."""
    masks = []
    for m in messages:
        cand = set(m.path.nodes) - {m.destination}
        if not cand:
            raise MessageError(
                f"message with self-path {m.path.nodes} has no cover candidates"
            )
        masks.append(nodes_bit(cand))
    return masks


def _min_hitting_set(masks: list[int]) -> int:
    """Exact minimum hitting set over bitmask element sets (branch and bound)."""
    # Greedy upper bound: repeatedly hit the element covering the most sets.
    best_mask = 0
    remaining = list(masks)
    while remaining:
        counts: dict[int, int] = {}
        for s in remaining:
            for e in bit_nodes(s):
                counts[e] = counts.get(e, 0) + 1
        e = min(counts, key=lambda x: (-counts[x], x))
        best_mask |= 1 << e
        remaining = [s for s in remaining if not (s >> e) & 1]
    best = [bin(best_mask).count("1"), best_mask]

    def lower_bound(sets: list[int]) -> int:
        # Count pairwise-disjoint sets greedily; each needs its own hitter.
        used, count = 0, 0
        for s in sorted(sets, key=lambda m: bin(m).count("1")):
            if not s & used:
                used |= s
                count += 1
        return count

    def search(sets: list[int], chosen: int, size: int):
        if not sets:
            if size < best[0]:
                best[0], best[1] = size, chosen
            return
        if size + lower_bound(sets) >= best[0]:
            return
        pivot = min(sets, key=lambda m: (bin(m).count("1"), m))
        for e in bit_nodes(pivot):
            rest = [s for s in sets if not (s >> e) & 1]
            search(rest, chosen | (1 << e), size + 1)

    search(masks, 0, 0)
    return best[1]


def minimum_message_cover(ms: MessageSet | Sequence[Message]) -> tuple[frozenset[int], int]:
    """A minimum node set hitting every message path (destination excluded).

    Exact. Deterministic for a fixed message set.
    """
    messages = list(ms)
    if not messages:
        raise MessageError("minimum_message_cover requires a nonempty message set")
    mask = _min_hitting_set(_path_candidate_masks(messages))
    cover = frozenset(bit_nodes(mask))
    return cover, len(cover)


def mmc_cardinality(messages: Sequence[Message]) -> int:
    """Cardinality-only convenience used by the trimming rule."""
    return minimum_message_cover(messages)[1]


def mmc_brute_force_oracle(ms: MessageSet | Sequence[Message]) -> int:
    """Exhaustive minimum-cover cardinality; refuses > 20 candidate nodes."""
    messages = list(ms)
    if not messages:
        raise MessageError("mmc_brute_force_oracle requires a nonempty message set")
    cand_sets = [set(m.path.nodes) - {m.destination} for m in messages]
    if any(not c for c in cand_sets):
        raise MessageError("message with self-path has no cover candidates")
    universe = sorted(set().union(*cand_sets))
    if len(universe) > 20:
        raise MessageError(f"oracle size cap exceeded: {len(universe)} candidates > 20")
    for size in range(1, len(universe) + 1):
        for combo in itertools.combinations(universe, size):
            chosen = set(combo)
            if all(c & chosen for c in cand_sets):
                return size
    raise AssertionError("unreachable: the full universe is always a cover")

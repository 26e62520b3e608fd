"""Scenario and topology files: parsing, cross-validation, canonical
serialization, and access to the shipped corpus.

Topology files describe a named set of graphs, a cyclic schedule over them,
and the leader set. Scenario files bind a topology to an algorithm, its
parameters, initial states, and attack scripts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath

import yaml

from .adversary import AttackScript, Waveform, validate_f_local
from .agents import AgentError, ControlParams, ReferenceFunction
from .graphs import (
    DiGraph,
    GraphError,
    TopologySchedule,
    compact_schedule,
    union_graph,
)
from .robustness import direct_leader_followers


class ScenarioError(ValueError):
    """Invalid topology or scenario file."""


ALGORITHMS = ("mw-msr", "mdp-msr", "mw-msr-secure")


# ---------------------------------------------------------------------------
# Topology files


def _parse_graph(n: int, name: str, spec: dict) -> DiGraph:
    edges: list[tuple[int, int]] = []
    for j, i in spec.get("edges", []):
        edges.append((int(j), int(i)))
    for a, b in spec.get("undirected_edges", []):
        edges += [(int(a), int(b)), (int(b), int(a))]
    if not edges:
        raise ScenarioError(f"graph {name!r} has no edges")
    try:
        return DiGraph.from_edges(n, edges, name)
    except GraphError as e:
        raise ScenarioError(f"graph {name!r}: {e}") from e


def parse_topology(data: dict) -> tuple[TopologySchedule, frozenset[int]]:
    for key in ("n", "leaders", "graphs", "schedule", "intervals"):
        if key not in data:
            raise ScenarioError(f"topology missing required field {key!r}")
    n = int(data["n"])
    leaders = frozenset(int(d) for d in data["leaders"])
    graphs = {
        name: _parse_graph(n, name, spec) for name, spec in data["graphs"].items()
    }
    try:
        ordered = tuple(graphs[name] for name in data["schedule"])
    except KeyError as e:
        raise ScenarioError(f"schedule references unknown graph {e.args[0]!r}") from e
    try:
        schedule = TopologySchedule(ordered, tuple(int(x) for x in data["intervals"]))
    except GraphError as e:
        raise ScenarioError(str(e)) from e
    if any(d < 1 or d > n for d in leaders):
        raise ScenarioError(f"leader ids outside 1..{n}: {sorted(leaders)}")
    return schedule, leaders


def load_topology(path: FsPath | str) -> tuple[TopologySchedule, frozenset[int]]:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: topology file must be a mapping")
    return parse_topology(data)


# ---------------------------------------------------------------------------
# Corpus access


def corpus_names() -> list[str]:
    root = resources.files("rclab") / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def corpus_path(name: str) -> FsPath:
    p = resources.files("rclab") / "corpus" / f"{name}.yaml"
    if not p.is_file():
        raise ScenarioError(
            f"unknown corpus entry {name!r}; available: {', '.join(corpus_names())}"
        )
    return FsPath(str(p))


def resolve_file(ref: str, base: FsPath | None = None) -> FsPath:
    """A file path (possibly relative to the referring file) or corpus name."""
    cand = FsPath(ref)
    if cand.is_file():
        return cand
    if base is not None and (base / ref).is_file():
        return base / ref
    return corpus_path(ref.removesuffix(".yaml"))


# ---------------------------------------------------------------------------
# Scenario files


def _parse_waveform(spec: dict, what: str) -> Waveform:
    if "center" not in spec:
        raise ScenarioError(f"{what}: waveform needs a 'center'")
    return Waveform(
        center=float(spec["center"]),
        amplitude=float(spec.get("amplitude", 0.3)),
        period=int(spec.get("period", 2)),
        kind=str(spec.get("waveform", "square")),
    )


def _parse_script(spec: dict) -> AttackScript:
    node = int(spec["node"])
    emit = spec.get("emit")
    if not isinstance(emit, dict):
        raise ScenarioError(f"adversary {node}: missing 'emit' mapping")
    default = _parse_waveform(emit.get("default", emit), f"adversary {node}")
    groups = tuple(
        (
            frozenset(int(r) for r in grp["receivers"]),
            _parse_waveform(grp, f"adversary {node} group"),
        )
        for grp in emit.get("groups", [])
    )
    return AttackScript(
        node=node,
        default=default,
        groups=groups,
        model=str(spec.get("model", "byzantine")),
        relay_mode=str(spec.get("relay", "same")),
    )


def _parse_axis_values(raw, axes: int, what: str) -> tuple[tuple[float, ...], ...]:
    """Normalize per-node init/offset entries to one tuple per axis."""
    if axes == 1:
        vals = raw if isinstance(raw, list) else [raw]
        return (tuple(float(v) for v in vals),)
    if not (isinstance(raw, list) and len(raw) == axes):
        raise ScenarioError(f"{what}: need one entry per axis, got {raw!r}")
    out = []
    for ax in raw:
        vals = ax if isinstance(ax, list) else [ax]
        out.append(tuple(float(v) for v in vals))
    return tuple(out)


@dataclass(frozen=True)
class Scenario:
    name: str
    schedule: TopologySchedule
    leaders: frozenset[int]
    algorithm: str
    f: int
    l: int
    reference: ReferenceFunction
    axes: int = 1
    params: ControlParams | None = None  # second-order only
    init: dict[int, tuple[tuple[float, ...], ...]] = field(default_factory=dict)
    delta: dict[int, tuple[float, ...]] = field(default_factory=dict)
    scripts: dict[int, AttackScript] = field(default_factory=dict)
    tol: float = 1e-6
    window: int = 50
    max_rounds: int = 2000
    budget: int | None = None  # explicit round budget; None = derived

    @property
    def second_order(self) -> bool:
        return self.algorithm == "mdp-msr"

    @property
    def adversaries(self) -> frozenset[int]:
        return frozenset(self.scripts)

    @property
    def followers(self) -> frozenset[int]:
        return frozenset(self.schedule.graphs[0].nodes) - self.leaders

    @property
    def normal_followers(self) -> frozenset[int]:
        return self.followers - self.adversaries

    @property
    def normal_leaders(self) -> frozenset[int]:
        return self.leaders - self.adversaries

    def secure_virtual_leaders(self) -> frozenset[int]:
        """Followers adjacent to a leader anywhere in the schedule union."""
        return direct_leader_followers(union_graph(self.schedule), self.leaders)

    def secure_reduced(self) -> tuple[TopologySchedule, frozenset[int]]:
        """The leaderless follower schedule (relabeled to 1..m) and its
        virtual leader set, as used by the secure-leader variant."""
        reduced, mapping = compact_schedule(self.schedule, self.followers)
        virtual = frozenset(mapping[i] for i in self.secure_virtual_leaders())
        return reduced, virtual

    def validation_errors(self) -> list[str]:
        errors: list[str] = []
        n = self.schedule.n
        if self.algorithm not in ALGORITHMS:
            errors.append(f"unknown algorithm {self.algorithm!r}")
        if self.f < 0 or self.l < 1:
            errors.append(f"need f >= 0 and l >= 1, got f={self.f} l={self.l}")
        if self.axes not in (1, 2):
            errors.append(f"axes must be 1 or 2, got {self.axes}")
        if self.tol <= 0:
            errors.append(f"tolerance must be positive, got {self.tol}")
        if self.window < 1 or self.max_rounds < 1:
            errors.append("window and max_rounds must be >= 1")
        if not self.leaders:
            errors.append("at least one leader required")
        for i in sorted(set(self.init) | set(self.delta) | set(self.scripts)):
            if not (1 <= i <= n):
                errors.append(f"node id {i} outside 1..{n}")
        need = self.followers - self.adversaries
        if self.algorithm == "mw-msr-secure":
            need = need - self.secure_virtual_leaders()
        missing = sorted(i for i in need if i not in self.init)
        if missing:
            errors.append(f"missing initial values for followers {missing}")
        if self.second_order and self.params is None:
            errors.append("second-order scenario requires T and beta")
        if not self.second_order:
            for i, per_axis in self.init.items():
                if any(len(vals) != 1 for vals in per_axis):
                    errors.append(f"first-order init for node {i} must be a scalar")
        report = validate_f_local(self.adversaries, self.schedule, self.l, self.f)
        if not report.f_local:
            i, k = report.witness
            errors.append(
                f"adversary set is not {self.f}-local: node {i} has more than "
                f"{self.f} adversaries within {self.l} hops at step {k}"
            )
        if self.algorithm == "mw-msr-secure" and self.adversaries & self.leaders:
            errors.append(
                "secure-leader mode contradicts adversarial leaders "
                f"{sorted(self.adversaries & self.leaders)}"
            )
        return errors

    def validate(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ScenarioError("; ".join(errors))

    def fingerprint(self) -> str:
        """Stable digest of everything that determines the trace."""
        blob = json.dumps(
            {
                "name": self.name,
                "graphs": [sorted(g.edges) for g in self.schedule.graphs],
                "intervals": list(self.schedule.interval_lengths),
                "leaders": sorted(self.leaders),
                "algorithm": self.algorithm,
                "f": self.f,
                "l": self.l,
                "axes": self.axes,
                "T": self.params.T if self.params else None,
                "beta": self.params.beta if self.params else None,
                "reference": list(self.reference.pieces),
                "init": {i: self.init[i] for i in sorted(self.init)},
                "delta": {i: self.delta[i] for i in sorted(self.delta)},
                "scripts": {
                    i: [
                        s.model,
                        s.relay_mode,
                        [s.default.center, s.default.amplitude, s.default.period, s.default.kind],
                        [
                            [sorted(members)]
                            + [[w.center, w.amplitude, w.period, w.kind]]
                            for members, w in s.groups
                        ],
                    ]
                    for i, s in sorted(self.scripts.items())
                },
                "tol": self.tol,
                "window": self.window,
                "max_rounds": self.max_rounds,
                "budget": self.budget,
            },
            sort_keys=True,
            default=list,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_scenario(data: dict, name: str, base: FsPath | None = None) -> Scenario:
    for key in ("topology", "algorithm", "f", "l", "reference"):
        if key not in data:
            raise ScenarioError(f"scenario missing required field {key!r}")
    schedule, leaders = load_topology(resolve_file(str(data["topology"]), base))
    algorithm = str(data["algorithm"])
    if algorithm not in ALGORITHMS:
        raise ScenarioError(f"unknown algorithm {algorithm!r}")
    f_param, l_param = int(data["f"]), int(data["l"])
    axes = int(data.get("axes", 1))

    ref_raw = data["reference"]
    if isinstance(ref_raw, (int, float)):
        reference = ReferenceFunction.constant(float(ref_raw))
    else:
        try:
            reference = ReferenceFunction(
                tuple((int(s), float(v)) for s, v in ref_raw)
            )
        except (TypeError, AgentError) as e:
            raise ScenarioError(f"bad reference: {e}") from e

    params = None
    if algorithm == "mdp-msr":
        if "T" not in data or "beta" not in data:
            raise ScenarioError("mdp-msr requires 'T' and 'beta'")
        try:
            params = ControlParams(
                T=float(data["T"]),
                beta=float(data["beta"]),
                f=f_param,
                l=l_param,
                alpha=float(data["alpha"]) if "alpha" in data else None,
            )
        except AgentError as e:
            raise ScenarioError(str(e)) from e

    init = {
        int(i): _parse_axis_values(raw, axes, f"init[{i}]")
        for i, raw in (data.get("init") or {}).items()
    }
    delta = {}
    for i, raw in (data.get("delta") or {}).items():
        vals = raw if isinstance(raw, list) else [raw]
        if len(vals) != axes:
            raise ScenarioError(f"delta[{i}]: need one offset per axis")
        delta[int(i)] = tuple(float(v) for v in vals)

    scripts = {}
    for spec in data.get("adversaries") or []:
        script = _parse_script(spec)
        if script.node in scripts:
            raise ScenarioError(f"duplicate adversary entry for node {script.node}")
        scripts[script.node] = script

    return Scenario(
        name=name,
        schedule=schedule,
        leaders=leaders,
        algorithm=algorithm,
        f=f_param,
        l=l_param,
        reference=reference,
        axes=axes,
        params=params,
        init=init,
        delta=delta,
        scripts=scripts,
        tol=float(data.get("tol", 1e-6)),
        window=int(data.get("window", 50)),
        max_rounds=int(data.get("max_rounds", 2000)),
        budget=int(data["budget"]) if "budget" in data else None,
    )


def load_scenario(path: FsPath | str) -> Scenario:
    path = FsPath(path)
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario file must be a mapping")
    return parse_scenario(data, path.stem, path.parent)

"""Health state space: global map, personalization, and the state graph.

The global space (GHSS) is a rectangular region per dimension; the
personal space (PHSS) tightens those bounds from the bank's
demographic tables and records why. Discretization lays a uniform
bucket lattice over the personal bounds, connects Chebyshev-distance-1
neighbors with input-labeled, week-costed edges from the transition
table, and paints ROI labels onto the buckets whose centers fall in a
region. Routing and the dashboard both consume the resulting graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

from .errors import BankError, InsufficientDataError
from .knowledge import KnowledgeBank


@dataclass(frozen=True)
class DimensionSpec:
    name: str
    unit: str
    global_min: float
    global_max: float
    bucket_count: int
    orientation: str  # "higher_is_better" | "lower_is_better"

    def __post_init__(self):
        if self.orientation not in ("higher_is_better", "lower_is_better"):
            raise ValueError(f"bad orientation {self.orientation!r}")


@dataclass(frozen=True)
class GHSS:
    dimensions: tuple[DimensionSpec, ...]


@dataclass(frozen=True)
class PHSS:
    dimensions: tuple[DimensionSpec, ...]
    bounds: tuple[tuple[float, float], ...]  # personal (lo, hi) per dimension
    provenance: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ROI:
    label: str
    box: dict[str, tuple[float, float]]  # dimension name -> (lo, hi), half-open
    color_hint: str = "#888888"


@dataclass(frozen=True)
class LocateResult:
    node: tuple[int, ...]
    index: int
    clamped: bool


def build_ghss(dimensions: Sequence[DimensionSpec]) -> GHSS:
    """Validate dimension specs and assemble the global space."""
    if not dimensions:
        raise ValueError("need at least one dimension")
    for d in dimensions:
        if d.global_min >= d.global_max:
            raise ValueError(f"{d.name}: inverted bounds {d.global_min} >= {d.global_max}")
        if d.bucket_count < 2:
            raise ValueError(f"{d.name}: bucket_count must be >= 2")
    return GHSS(dimensions=tuple(dimensions))


def ghss_from_bank(bank: KnowledgeBank) -> GHSS:
    dims = [
        DimensionSpec(
            name=d["name"],
            unit=d["unit"],
            global_min=float(d["global_min"]),
            global_max=float(d["global_max"]),
            bucket_count=int(d["bucket_count"]),
            orientation=d["orientation"],
        )
        for d in bank.dimensions
    ]
    return build_ghss(dims)


def rois_from_bank(bank: KnowledgeBank) -> list[ROI]:
    return [
        ROI(
            label=r["label"],
            box={k: (float(lo), float(hi)) for k, (lo, hi) in r["box"].items()},
            color_hint=r.get("color_hint", "#888888"),
        )
        for r in bank.rois
    ]


def personalize(ghss: GHSS, profile, bank: KnowledgeBank) -> PHSS:
    """Tighten global bounds using the bank's demographic tables.

    Personal bounds never widen the global ones; with an empty
    personalization table the PHSS equals the GHSS.
    """
    bounds = []
    provenance: dict[str, str] = {}
    for dim in ghss.dimensions:
        lo, hi = dim.global_min, dim.global_max
        rule = bank.personalization.get(dim.name)
        if rule:
            row = rule[profile.sex]
            value = row["base"] + row["per_year"] * profile.age
            if rule["bound"] == "upper":
                hi = min(hi, max(value, lo))
                provenance[dim.name] = (
                    f"upper bound {hi:g} from {profile.sex}/{profile.age}y attainable ceiling"
                )
            else:
                lo = max(lo, min(value, hi))
                provenance[dim.name] = (
                    f"lower bound {lo:g} from {profile.sex}/{profile.age}y floor"
                )
            if hi <= lo:
                raise BankError(f"personalization collapsed dimension {dim.name}")
        bounds.append((lo, hi))
    return PHSS(dimensions=ghss.dimensions, bounds=tuple(bounds), provenance=provenance)


@dataclass(frozen=True)
class StateGraph:
    """Bucket lattice over a PHSS with labeled transition edges."""

    dimensions: tuple[DimensionSpec, ...]
    bounds: tuple[tuple[float, float], ...]
    shape: tuple[int, ...]
    edges: dict[tuple[int, int], tuple[float, str]]  # (from, to) -> (cost_weeks, label)
    roi_labels: dict[int, str]
    roi_colors: dict[str, str]

    @property
    def node_count(self) -> int:
        n = 1
        for c in self.shape:
            n *= c
        return n

    def node_index(self, node: Sequence[int]) -> int:
        idx = 0
        for i, c in zip(node, self.shape):
            if not 0 <= i < c:
                raise ValueError(f"node {tuple(node)} outside lattice {self.shape}")
            idx = idx * c + i
        return idx

    def node_tuple(self, index: int) -> tuple[int, ...]:
        out = []
        for c in reversed(self.shape):
            out.append(index % c)
            index //= c
        return tuple(reversed(out))

    def center(self, index: int) -> dict[str, float]:
        node = self.node_tuple(index)
        values = {}
        for axis, (i, dim) in enumerate(zip(node, self.dimensions)):
            lo, hi = self.bounds[axis]
            width = (hi - lo) / self.shape[axis]
            values[dim.name] = lo + (i + 0.5) * width
        return values

    @cached_property
    def adjacency(self) -> dict[int, list[tuple[int, float, str]]]:
        adj: dict[int, list[tuple[int, float, str]]] = {i: [] for i in range(self.node_count)}
        for (a, b), (cost, label) in self.edges.items():
            adj[a].append((b, cost, label))
        for lst in adj.values():
            lst.sort(key=lambda e: e[0])
        return adj

    def nodes_with_label(self, label: str) -> frozenset[int]:
        return frozenset(i for i, lab in self.roi_labels.items() if lab == label)

    def to_payload(self) -> dict[str, Any]:
        """Adjacency-list export for the API and dashboard."""
        return {
            "dimensions": [
                {
                    "name": d.name,
                    "unit": d.unit,
                    "orientation": d.orientation,
                    "bounds": list(self.bounds[i]),
                    "bucket_count": self.shape[i],
                }
                for i, d in enumerate(self.dimensions)
            ],
            "shape": list(self.shape),
            "edges": [
                {"from": a, "to": b, "cost_weeks": cost, "input_label": label}
                for (a, b), (cost, label) in sorted(self.edges.items())
            ],
            "roi_labels": {str(i): lab for i, lab in sorted(self.roi_labels.items())},
            "roi_colors": dict(self.roi_colors),
        }


def _neighbor_offsets(ndim: int) -> list[tuple[int, ...]]:
    offsets: list[tuple[int, ...]] = [()]
    for _ in range(ndim):
        offsets = [o + (d,) for o in offsets for d in (-1, 0, 1)]
    return [o for o in offsets if any(o)]


def _boxes_overlap(a: ROI, b: ROI, names: Iterable[str]) -> bool:
    # Positive-measure intersection in every dimension both constrain;
    # shared edges (half-open boxes) do not overlap.
    for name in names:
        if name in a.box and name in b.box:
            alo, ahi = a.box[name]
            blo, bhi = b.box[name]
            if not (alo < bhi and blo < ahi):
                return False
        else:
            return False
    return True


def discretize_and_label(
    phss: PHSS, rois: Sequence[ROI], bank: KnowledgeBank
) -> StateGraph:
    """Bucket the PHSS into a lattice graph and paint ROI labels.

    Edges connect Chebyshev-distance-1 neighbors; each edge's input
    label and cost come from the transition table keyed by whether all
    moved dimensions improve, all worsen, or mix.
    """
    names = [d.name for d in phss.dimensions]
    clipped: list[ROI] = []
    for roi in rois:
        box = {}
        empty = False
        for name, (lo, hi) in roi.box.items():
            if name not in names:
                raise ValueError(f"ROI {roi.label!r} references unknown dimension {name!r}")
            blo, bhi = phss.bounds[names.index(name)]
            # Regions may exceed the personal bounds (the global map is
            # bigger); clip to the reachable part, dropping empty regions.
            lo, hi = max(lo, blo), min(hi, bhi)
            if lo >= hi:
                empty = True
            box[name] = (lo, hi)
        if not empty:
            clipped.append(ROI(label=roi.label, box=box, color_hint=roi.color_hint))
    rois = clipped
    for i, a in enumerate(rois):
        for b in rois[i + 1 :]:
            if _boxes_overlap(a, b, names):
                raise ValueError(f"ROIs overlap: {a.label!r} and {b.label!r}")

    shape = tuple(d.bucket_count for d in phss.dimensions)
    transitions = bank.transitions

    def classify(offset: tuple[int, ...]) -> tuple[float, str]:
        better = worse = 0
        for delta, dim in zip(offset, phss.dimensions):
            if delta == 0:
                continue
            improves = (delta > 0) == (dim.orientation == "higher_is_better")
            if improves:
                better += 1
            else:
                worse += 1
        key = "better" if worse == 0 else ("worse" if better == 0 else "mixed")
        row = transitions[key]
        cost = float(row["cost_weeks"])
        if cost <= 0:
            raise BankError(f"transition cost for {key!r} must be positive")
        return cost, row["input_label"]

    offsets = _neighbor_offsets(len(shape))
    offset_info = {o: classify(o) for o in offsets}

    edges: dict[tuple[int, int], tuple[float, str]] = {}
    graph = StateGraph(
        dimensions=phss.dimensions,
        bounds=phss.bounds,
        shape=shape,
        edges=edges,
        roi_labels={},
        roi_colors={r.label: r.color_hint for r in rois},
    )
    for index in range(graph.node_count):
        node = graph.node_tuple(index)
        for offset in offsets:
            nbr = tuple(i + d for i, d in zip(node, offset))
            if all(0 <= i < c for i, c in zip(nbr, shape)):
                cost, label = offset_info[offset]
                edges[(index, graph.node_index(nbr))] = (cost, label)

    for index in range(graph.node_count):
        center = graph.center(index)
        for roi in rois:
            inside = all(
                roi.box[name][0] <= center[name] < roi.box[name][1]
                for name in roi.box
            )
            if inside:
                graph.roi_labels[index] = roi.label
                break
    return graph


def locate(state, graph: StateGraph) -> LocateResult:
    """Bucket containing a health state; out-of-bounds values clamp.

    Accepts a HealthState or a {dimension name: value} mapping. Values
    exactly on an interior bucket edge land in the higher-index bucket.
    """
    if isinstance(state, Mapping):
        values = dict(state)
    else:
        values = {"ascvd_risk": state.ascvd_risk_pct, "vo2max": state.vo2max_indicator}
    node = []
    clamped = False
    for axis, dim in enumerate(graph.dimensions):
        v = values.get(dim.name)
        if v is None:
            raise InsufficientDataError(f"no value for dimension {dim.name!r}")
        lo, hi = graph.bounds[axis]
        if v < lo or v > hi:
            clamped = True
            v = min(max(v, lo), hi)
        count = graph.shape[axis]
        width = (hi - lo) / count
        i = int(math.floor((v - lo) / width))
        if i >= count:
            i = count - 1
        node.append(i)
    node_t = tuple(node)
    return LocateResult(node=node_t, index=graph.node_index(node_t), clamped=clamped)

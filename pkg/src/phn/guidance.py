"""Route planning and the daily exercise guidance controller.

Routing finds loop-free minimum-cost paths over the state graph, ties
broken by node index so results are reproducible. The controller turns
a weekly TRIMP goal into daily triplet guidance (low/medium/high
minutes with HR bands), enforcing the training-safety rules: the CTL
ramp limit, the scale-down after a deep TSB dip, and forced rest when
TSB is below the floor. Re-planning always starts from measured rather
than prescribed load, so deviation is absorbed instead of punished.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from datetime import date, timedelta
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from . import kernels, trainload
from .errors import NoRouteError
from .knowledge import KnowledgeBank
from .statespace import StateGraph
from .trainload import TrainingLoadState, TsbZone

RAMP_RATE_RANGE = (0.0, 1.0)
ZONE_COEFF_RANGE = (5.0, 30.0)


@dataclass(frozen=True)
class GuidanceKnobs:
    """Tunable rule constants, normally loaded from the knowledge bank."""

    ramp_rate: float = 0.1
    zone_coefficient: float = 10.0
    trimp_min: float = 150.0
    ramp_limit: float = 5.0
    scale_down: float = 0.9
    tsb_rest_floor: float = -20.0
    lucia: tuple[float, float, float] = trainload.LUCIA_COEFFICIENTS
    band_fractions: tuple[tuple[Fraction, Fraction], ...] = (
        (Fraction(11, 20), Fraction(7, 10)),
        (Fraction(7, 10), Fraction(4, 5)),
        (Fraction(4, 5), Fraction(1, 1)),
    )

    @classmethod
    def from_bank(cls, bank: KnowledgeBank) -> "GuidanceKnobs":
        rules = bank.rules
        bands = tuple(
            (
                Fraction(lo).limit_denominator(10_000),
                Fraction(hi).limit_denominator(10_000),
            )
            for lo, hi in rules["hr_band_fractions"]
        )
        return cls(
            ramp_rate=float(rules["ramp_rate"]),
            zone_coefficient=float(rules["zone_coefficient"]),
            trimp_min=float(rules["trimp_min"]),
            ramp_limit=float(rules["ramp_limit_per_week"]),
            scale_down=float(rules["scale_down_factor"]),
            tsb_rest_floor=float(rules["tsb_rest_floor"]),
            lucia=tuple(float(c) for c in rules["lucia_coefficients"]),
            band_fractions=bands,
        )


# ---------------------------------------------------------------------------
# route planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Goal:
    roi_label: Optional[str]
    target_nodes: frozenset[int]


@dataclass(frozen=True)
class Route:
    nodes: tuple[int, ...]
    total_cost_weeks: float
    input_labels: tuple[str, ...]


Adjacency = Mapping[int, Sequence[tuple[int, float, str]]]


def goal_from_roi(graph: StateGraph, roi_label: str) -> Goal:
    nodes = graph.nodes_with_label(roi_label)
    if not nodes:
        raise NoRouteError(f"ROI {roi_label!r} covers no node of the graph")
    return Goal(roi_label=roi_label, target_nodes=nodes)


def _shortest_path(
    adj: Adjacency,
    src: int,
    targets: frozenset[int],
    banned_nodes: frozenset[int] = frozenset(),
    banned_edges: frozenset[tuple[int, int]] = frozenset(),
) -> Optional[tuple[float, tuple[int, ...]]]:
    # Dijkstra over (cost, path) so equal-cost ties resolve to the
    # lexicographically smallest node sequence.
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (src,))]
    visited: set[int] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in visited:
            continue
        visited.add(node)
        if node in targets:
            return cost, path
        for nbr, weight, _label in adj.get(node, ()):
            if nbr in visited or nbr in banned_nodes or (node, nbr) in banned_edges:
                continue
            heapq.heappush(heap, (cost + weight, path + (nbr,)))
    return None


def plan_routes(
    graph: Union[StateGraph, Adjacency], current: int, goal: Goal, k: int = 3
) -> list[Route]:
    """Up to ``k`` loop-free routes from ``current`` into the goal set.

    The first route is minimum-cost; later routes come from spur-path
    enumeration (Yen). Raises NoRouteError when the goal is unreachable.
    """
    adj: Adjacency = graph.adjacency if isinstance(graph, StateGraph) else graph
    if not goal.target_nodes:
        raise NoRouteError("goal has an empty target set")
    if current not in adj:
        raise ValueError(f"current node {current} not in graph")
    edge_info = {
        (a, b): (cost, label) for a, nbrs in adj.items() for b, cost, label in nbrs
    }

    def as_route(cost: float, path: tuple[int, ...]) -> Route:
        labels = tuple(edge_info[(a, b)][1] for a, b in zip(path, path[1:]))
        return Route(nodes=path, total_cost_weeks=cost, input_labels=labels)

    if current in goal.target_nodes:
        return [Route(nodes=(current,), total_cost_weeks=0.0, input_labels=())]

    first = _shortest_path(adj, current, goal.target_nodes)
    if first is None:
        raise NoRouteError(f"no route from node {current} to goal")
    accepted: list[tuple[float, tuple[int, ...]]] = [first]
    candidates: list[tuple[float, tuple[int, ...]]] = []
    seen = {first[1]}

    while len(accepted) < k:
        _, prev_path = accepted[-1]
        for i in range(len(prev_path) - 1):
            spur = prev_path[i]
            root = prev_path[: i + 1]
            banned_edges = set()
            for _, p in accepted:
                if len(p) > i + 1 and p[: i + 1] == root:
                    banned_edges.add((p[i], p[i + 1]))
            banned_nodes = frozenset(root[:-1])
            res = _shortest_path(
                adj, spur, goal.target_nodes, banned_nodes, frozenset(banned_edges)
            )
            if res is None:
                continue
            spur_cost, spur_path = res
            total_path = root[:-1] + spur_path
            if total_path in seen:
                continue
            root_cost = 0.0
            for a, b in zip(root, root[1:]):
                root_cost += edge_info[(a, b)][0]
            heapq.heappush(candidates, (root_cost + spur_cost, total_path))
            seen.add(total_path)
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))

    return [as_route(cost, path) for cost, path in accepted]


# ---------------------------------------------------------------------------
# weekly goal and constraints
# ---------------------------------------------------------------------------


def weekly_goal(
    ctl_prev: float, ramp_rate: float, zone_coefficient: float, trimp_min: float
) -> float:
    """Next week's TRIMP goal: grow CTL by the ramp rate plus the zone
    coefficient, floored at the weekly minimum."""
    if not RAMP_RATE_RANGE[0] <= ramp_rate <= RAMP_RATE_RANGE[1]:
        raise ValueError(f"ramp rate {ramp_rate} outside {RAMP_RATE_RANGE}")
    if not ZONE_COEFF_RANGE[0] <= zone_coefficient <= ZONE_COEFF_RANGE[1]:
        raise ValueError(f"zone coefficient {zone_coefficient} outside {ZONE_COEFF_RANGE}")
    return max(ctl_prev * (1.0 + ramp_rate) + zone_coefficient, trimp_min)


@dataclass(frozen=True)
class AdjustedGoal:
    trimp_w: float
    scaled_down: bool
    ramp_limited: bool
    floor_overridden: bool
    infeasible: bool  # even a zero week would break the ramp projection


def projected_ctl(history_trimps: Sequence[float], daily_goals: Sequence[float]):
    """CTL series of history continued by a plan, on nominal windows.

    Unlike load bookkeeping (which shortens windows during warm-up so
    TSB stays flat at onboarding), the ramp projection always uses the
    full window with implicit zero history before the series start;
    otherwise a cold start could never reach the weekly minimum.
    """
    window = trainload.CTL_WINDOW_DAYS
    combined = [0.0] * (window - 1) + list(history_trimps) + list(daily_goals)
    return kernels.trailing_mean(combined, window)[window - 1 :]


def _eq4_feasible(
    history_trimps: Sequence[float], daily_goals: Sequence[float], limit: float
) -> bool:
    ctl = projected_ctl(history_trimps, daily_goals)
    n = len(history_trimps)
    for t in range(n + 1, len(ctl) + 1):
        if t - 8 >= 0 and ctl[t - 1] - ctl[t - 8] >= limit:
            return False
    return True


def apply_constraints(
    candidate_trimp_w: float,
    load_history: Sequence[TrainingLoadState],
    knobs: GuidanceKnobs,
) -> AdjustedGoal:
    """Apply the safety rules to a candidate weekly goal.

    Scale-down after any below-floor TSB day in the prior week, then
    reduce until the projected CTL (history continued with an even
    split of the goal) respects the weekly ramp limit. The weekly
    minimum yields only to the ramp limit, and that override is
    flagged.
    """
    w = candidate_trimp_w
    scaled_down = False
    recent = [s for s in load_history if s.day >= load_history[-1].day - timedelta(days=6)] if load_history else []
    if any(s.tsb < knobs.tsb_rest_floor for s in recent):
        w = max(w * knobs.scale_down, knobs.trimp_min)
        scaled_down = True

    history = [s.trimp_day for s in load_history]
    ramp_limited = False
    infeasible = False

    def feasible(goal: float) -> bool:
        return _eq4_feasible(history, [goal / 7.0] * 7, knobs.ramp_limit)

    if not feasible(w):
        ramp_limited = True
        if not feasible(0.0):
            infeasible = True
            w = 0.0
        else:
            lo, hi = 0.0, w
            for _ in range(100):
                mid = (lo + hi) / 2.0
                if feasible(mid):
                    lo = mid
                else:
                    hi = mid
            w = lo

    floor_overridden = w < knobs.trimp_min and (ramp_limited or infeasible)
    return AdjustedGoal(
        trimp_w=w,
        scaled_down=scaled_down,
        ramp_limited=ramp_limited,
        floor_overridden=floor_overridden,
        infeasible=infeasible,
    )


# ---------------------------------------------------------------------------
# weekly plan and daily decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeeklyPlan:
    week_start: date  # Monday
    trimp_w: float
    trimp_d: tuple[float, ...]  # 7 entries, Monday..Sunday
    rest_days: tuple[bool, ...]
    scaled_down: bool
    ramp_limited: bool
    floor_overridden: bool

    def day_index(self, day: date) -> int:
        idx = (day - self.week_start).days
        if not 0 <= idx < 7:
            raise ValueError(f"{day} outside plan week starting {self.week_start}")
        return idx


def build_weekly_plan(
    week_start: date,
    load_history: Sequence[TrainingLoadState],
    knobs: GuidanceKnobs,
    rest_days: Sequence[bool] = (False,) * 7,
) -> WeeklyPlan:
    """Weekly goal, constrained and split evenly across non-rest days."""
    if week_start.weekday() != 0:
        raise ValueError("plan weeks start on Monday")
    if load_history and load_history[-1].day >= week_start:
        raise ValueError("load history must end before the plan week")
    ctl_prev = load_history[-1].ctl if load_history else 0.0
    candidate = weekly_goal(ctl_prev, knobs.ramp_rate, knobs.zone_coefficient, knobs.trimp_min)
    adjusted = apply_constraints(candidate, load_history, knobs)
    active = [i for i in range(7) if not rest_days[i]]
    per_day = adjusted.trimp_w / len(active) if active else 0.0
    trimp_d = tuple(per_day if i in active else 0.0 for i in range(7))
    return WeeklyPlan(
        week_start=week_start,
        trimp_w=math.fsum(trimp_d),
        trimp_d=trimp_d,
        rest_days=tuple(rest_days),
        scaled_down=adjusted.scaled_down,
        ramp_limited=adjusted.ramp_limited,
        floor_overridden=adjusted.floor_overridden,
    )


def daily_goal(
    plan: WeeklyPlan,
    completed_trimp: float,
    today: date,
    current_tsb: Optional[float],
) -> float:
    """Today's TRIMP goal: remaining weekly goal over remaining days.

    Forced rest (zero) when TSB is below the rest floor or the user is
    in the overload zone.
    """
    idx = plan.day_index(today)
    if current_tsb is not None:
        zone = trainload.tsb_zone(current_tsb)
        if current_tsb < -20.0 or zone is TsbZone.OVERLOAD:
            return 0.0
    if plan.rest_days[idx]:
        return 0.0
    remaining_days = sum(1 for i in range(idx, 7) if not plan.rest_days[i])
    if remaining_days == 0:
        return 0.0
    return max(0.0, (plan.trimp_w - completed_trimp) / remaining_days)


# ---------------------------------------------------------------------------
# triplet conversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TripletOption:
    intensity: str  # "low" | "medium" | "high"
    minutes: int
    hr_lo: int
    hr_hi: int


@dataclass(frozen=True)
class DailyGuidance:
    day: date
    trimp_d: float
    options: tuple[TripletOption, ...]
    rationale: str

    @property
    def rest_day(self) -> bool:
        return not self.options

    def to_dict(self) -> dict:
        return {
            "date": self.day.isoformat(),
            "trimp_goal": self.trimp_d,
            "rest_day": self.rest_day,
            "options": [
                {
                    "intensity": o.intensity,
                    "minutes": o.minutes,
                    "hr_band": [o.hr_lo, o.hr_hi],
                }
                for o in self.options
            ],
            "rationale": self.rationale,
        }


def hr_band_bounds(
    frac_lo: Fraction, frac_hi: Fraction, max_hr: float, inclusive_hi: bool
) -> tuple[int, int]:
    """Integer bpm bounds of a band given as exact fractions of max HR.

    The lower bound rounds up. An inclusive upper bound rounds down;
    an exclusive one becomes the largest integer strictly below it.
    """
    mh = Fraction(max_hr)
    lo = math.ceil(frac_lo * mh)
    q = frac_hi * mh
    hi = math.floor(q) if inclusive_hi else math.ceil(q) - 1
    return int(lo), int(hi)


_INTENSITY_NAMES = ("low", "medium", "high")


def to_triplets(
    trimp_d: float,
    max_hr: float,
    day: date,
    knobs: GuidanceKnobs = GuidanceKnobs(),
    rationale: str = "",
) -> DailyGuidance:
    """Convert a daily TRIMP goal into the three intensity options.

    Minutes are the ceiling of goal over the intensity coefficient so
    any option, done as prescribed, meets the goal.
    """
    if trimp_d < 0:
        raise ValueError(f"daily TRIMP goal must be >= 0, got {trimp_d}")
    if not 60 <= max_hr <= 230:
        raise ValueError(f"implausible max HR {max_hr}")
    if trimp_d == 0:
        return DailyGuidance(
            day=day,
            trimp_d=0.0,
            options=(),
            rationale=rationale or "Rest day.",
        )
    options = []
    n_bands = len(knobs.band_fractions)
    for i, (coeff, (flo, fhi)) in enumerate(zip(knobs.lucia, knobs.band_fractions)):
        minutes = math.ceil(trimp_d / coeff)
        hr_lo, hr_hi = hr_band_bounds(flo, fhi, max_hr, inclusive_hi=(i == n_bands - 1))
        options.append(
            TripletOption(
                intensity=_INTENSITY_NAMES[i], minutes=minutes, hr_lo=hr_lo, hr_hi=hr_hi
            )
        )
    return DailyGuidance(
        day=day, trimp_d=float(trimp_d), options=tuple(options), rationale=rationale
    )


# ---------------------------------------------------------------------------
# the daily control step
# ---------------------------------------------------------------------------


def control_step(
    profile,
    knobs: GuidanceKnobs,
    measured_daily_trimp: Mapping[date, float],
    plan: WeeklyPlan,
    today: date,
) -> DailyGuidance:
    """One cycle of the loop: measured load in, today's guidance out.

    TSB is re-estimated from what the user actually did (never from
    what was prescribed), the remaining weekly goal is redistributed
    over the remaining days, and the result is rendered as triplets.
    """
    history = {d: v for d, v in measured_daily_trimp.items() if d < today}
    states = trainload.update_loads(history) if history else []
    current_tsb = states[-1].tsb if states else None

    completed = math.fsum(
        v for d, v in measured_daily_trimp.items() if plan.week_start <= d < today
    )
    trimp_d = daily_goal(plan, completed, today, current_tsb)

    if current_tsb is None:
        tsb_text = "TSB unknown (no history)"
    else:
        tsb_text = f"TSB {current_tsb:.1f} ({trainload.tsb_zone(current_tsb).value} zone)"
    if trimp_d == 0 and current_tsb is not None and current_tsb < knobs.tsb_rest_floor:
        rationale = f"{tsb_text}; resting to protect recovery."
    else:
        idx = plan.day_index(today)
        remaining = sum(1 for i in range(idx, 7) if not plan.rest_days[i])
        rationale = (
            f"{tsb_text}; week goal {plan.trimp_w:.0f}, done {completed:.0f}, "
            f"{remaining} day(s) left."
        )
    return to_triplets(trimp_d, profile.max_hr, today, knobs, rationale)

"""Exploration planners over partial semantic maps.

Three planners share one episode loop:

- DC2GPlanner explores toward the reachable frontier-expanding cell whose
  estimated cost-to-go score is highest, switching to a shortest path once a
  goal cell becomes reachable.
- FrontierPlanner always heads for the nearest frontier cell.
- OraclePlanner knows the full map and follows a turn-minimal shortest path.

All planning is done on 4-connected grids; actions are Forward / TurnLeft /
TurnRight, each costing one step.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np
from scipy import ndimage

from dc2g.costmap import decode_c2g, dijkstra_cost_to_go, traversable_mask
from dc2g.errors import (
    AgentOffTraversable,
    NonAdjacentHop,
    NoPath,
    PlannerEstimatorError,
)
from dc2g.semantic import Palette, SemanticGrid, resize_nearest
from dc2g.sim import (
    Heading,
    PlannerAction,
    Pose,
    SensorConfig,
    TraceWriter,
    new_belief,
    observe,
    observed_mask,
    step,
    sweep_footprint,
    sweep_offsets,
)

ESTIMATOR_SIZE = 256

_PLUS = ndimage.generate_binary_structure(2, 1)


class EstimatorHandle(Protocol):
    """Anything that maps a 256x256 RGB belief image to a 256x256 cost-to-go image."""

    def estimate(self, belief_img: np.ndarray) -> np.ndarray: ...


class PlanMode(Enum):
    EXPLORE = "explore"
    GOAL = "goal"
    GIVE_UP = "give_up"


@dataclass
class PlanOutcome:
    mode: PlanMode
    subgoal: tuple[int, int] | None = None
    cell_path: list[tuple[int, int]] = field(default_factory=list)
    actions: list[PlannerAction] = field(default_factory=list)
    frontier_count: int = 0

    @property
    def next_action(self) -> PlannerAction | None:
        return self.actions[0] if self.actions else None


@dataclass
class ReachableSet:
    """BFS tree over observed traversable cells rooted at the agent."""

    cells: set[tuple[int, int]]
    parent: dict[tuple[int, int], tuple[int, int]]
    depth: dict[tuple[int, int], int]


@dataclass
class FrontierSets:
    frontier: set[tuple[int, int]]
    expanding: set[tuple[int, int]]
    reachable_expanding: set[tuple[int, int]]


class EpisodeStatus(Enum):
    REACHED_GOAL = "reached_goal"
    GAVE_UP = "gave_up"
    TIMEOUT = "timeout"
    ERROR = "error"


@dataclass
class EpisodeResult:
    steps: int
    status: EpisodeStatus
    trajectory: list[Pose]
    subgoals: list[tuple[int, int] | None]
    plan_ms: list[float]
    error: str | None = None


def _flat_bfs(trav_flat, w, h, start, targets_flat=None):
    """Layered BFS over a flat traversable mask.

    Returns (parent, depth_of_hit, hit) where hit is the smallest flat index
    among targets first reached (the whole layer is finished before choosing,
    so ties resolve in row-major order). With no targets the component is
    swept exhaustively and hit is None. parent[i] == -1 marks unvisited,
    parent[start] == start.
    """
    parent = np.full(trav_flat.shape[0], -1, dtype=np.int64)
    parent[start] = start
    if targets_flat is not None and targets_flat[start]:
        return parent, 0, start
    level = [start]
    depth = 0
    while level:
        nxt = []
        hits = []
        for u in level:
            r, c = divmod(u, w)
            if r > 0:
                v = u - w
                if trav_flat[v] and parent[v] < 0:
                    parent[v] = u
                    nxt.append(v)
                    if targets_flat is not None and targets_flat[v]:
                        hits.append(v)
            if r < h - 1:
                v = u + w
                if trav_flat[v] and parent[v] < 0:
                    parent[v] = u
                    nxt.append(v)
                    if targets_flat is not None and targets_flat[v]:
                        hits.append(v)
            if c > 0:
                v = u - 1
                if trav_flat[v] and parent[v] < 0:
                    parent[v] = u
                    nxt.append(v)
                    if targets_flat is not None and targets_flat[v]:
                        hits.append(v)
            if c < w - 1:
                v = u + 1
                if trav_flat[v] and parent[v] < 0:
                    parent[v] = u
                    nxt.append(v)
                    if targets_flat is not None and targets_flat[v]:
                        hits.append(v)
        depth += 1
        if hits:
            return parent, depth, min(hits)
        level = nxt
    return parent, -1, None


def _backtrack(parent, w, hit):
    path = []
    u = hit
    while True:
        path.append(divmod(u, w))
        p = parent[u]
        if p == u:
            break
        u = p
    path.reverse()
    return [(int(r), int(c)) for r, c in path]


def reachable(tr: np.ndarray, pose: Pose) -> ReachableSet:
    """Full BFS tree over the traversable component containing the agent."""
    h, w = tr.shape
    if not tr[pose.row, pose.col]:
        raise AgentOffTraversable(f"agent cell {(pose.row, pose.col)} is not traversable")
    parent, _, _ = _flat_bfs(tr.ravel(), w, h, pose.row * w + pose.col)
    cells = set()
    parents = {}
    depths = {}
    order = np.flatnonzero(parent >= 0)
    # recover depths by walking up the tree; memoized via dict
    for u in order:
        cell = (int(u) // w, int(u) % w)
        cells.add(cell)
        p = int(parent[u])
        parents[cell] = (p // w, p % w)
    root = (pose.row, pose.col)
    parents[root] = root
    for cell in cells:
        chain = []
        cur = cell
        while cur not in depths and cur != root:
            chain.append(cur)
            cur = parents[cur]
        base = 0 if cur == root else depths[cur]
        for i, c in enumerate(reversed(chain)):
            depths[c] = base + i + 1
    depths[root] = 0
    return ReachableSet(cells=cells, parent=parents, depth=depths)


def _frontier_mask(belief: SemanticGrid, palette: Palette, comp: np.ndarray) -> np.ndarray:
    """Reachable cells adjacent (4-conn) to at least one unobserved cell."""
    unobs = belief.cells == palette.unobserved_id
    near_unobs = np.zeros_like(unobs)
    near_unobs[:-1, :] |= unobs[1:, :]
    near_unobs[1:, :] |= unobs[:-1, :]
    near_unobs[:, :-1] |= unobs[:, 1:]
    near_unobs[:, 1:] |= unobs[:, :-1]
    return comp & near_unobs


def _seen_from_mask(f_mask: np.ndarray, cfg: SensorConfig) -> np.ndarray:
    """Cells from which some marked cell is visible under at least one heading."""
    h, w = f_mask.shape
    drr, dcc = sweep_offsets(cfg.fov, cfg.range)
    fr, fc = np.nonzero(f_mask)
    rr = (fr[:, None] + drr[None, :]).ravel()
    cc = (fc[:, None] + dcc[None, :]).ravel()
    keep = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    out = np.zeros((h, w), dtype=bool)
    out[rr[keep], cc[keep]] = True
    return out


def frontiers(belief: SemanticGrid, reach: ReachableSet, cfg: SensorConfig, palette: Palette) -> FrontierSets:
    """Frontier cells of the reachable set and the cells that can see one."""
    h, w = belief.height, belief.width
    comp = np.zeros((h, w), dtype=bool)
    rows = [r for r, _ in reach.cells]
    cols = [c for _, c in reach.cells]
    comp[rows, cols] = True
    f_mask = _frontier_mask(belief, palette, comp)
    fe_mask = _seen_from_mask(f_mask, cfg) & comp
    to_set = lambda m: {(int(r), int(c)) for r, c in np.argwhere(m)}
    fe = to_set(fe_mask)
    return FrontierSets(frontier=to_set(f_mask), expanding=fe, reachable_expanding=fe)


def convert_action_plan(path: list[tuple[int, int]], heading: Heading) -> list[PlannerAction]:
    """Turn a 4-adjacent cell path into minimal turn+forward primitives."""
    actions = []
    for (r0, c0), (r1, c1) in zip(path, path[1:]):
        dr, dc = r1 - r0, c1 - c0
        if abs(dr) + abs(dc) != 1:
            raise NonAdjacentHop(f"hop {(r0, c0)} -> {(r1, c1)} is not 4-adjacent")
        want = _DIR_OF[(dr, dc)]
        delta = (want - heading) % 4
        if delta == 1:
            actions.append(PlannerAction.TURN_RIGHT)
        elif delta == 3:
            actions.append(PlannerAction.TURN_LEFT)
        elif delta == 2:
            actions.extend((PlannerAction.TURN_LEFT, PlannerAction.TURN_LEFT))
        actions.append(PlannerAction.FORWARD)
        heading = want
    return actions


_DIR_OF = {(-1, 0): Heading.N, (0, 1): Heading.E, (1, 0): Heading.S, (0, -1): Heading.W}


class _ExploringPlanner:
    """Shared survey / goal-phase / subgoal plumbing for belief-driven planners."""

    def __init__(self, palette: Palette, cfg: SensorConfig):
        self.palette = palette
        self.cfg = cfg
        self._swept: set[int] = set()
        self._last_observed = -1

    def plan(self, belief: SemanticGrid, pose: Pose) -> PlanOutcome:
        h, w = belief.height, belief.width
        trav = self.palette.traversable_table()[belief.cells]
        if not trav[pose.row, pose.col]:
            raise AgentOffTraversable(f"agent cell {(pose.row, pose.col)} is not traversable in the belief")
        labels, _ = ndimage.label(trav, structure=_PLUS)
        comp = labels == labels[pose.row, pose.col]
        start = pose.row * w + pose.col

        goal_mask = (belief.cells == self.palette.goal_id) & comp
        if goal_mask.any():
            parent, _, hit = _flat_bfs(comp.ravel(), w, h, start, goal_mask.ravel())
            path = _backtrack(parent, w, hit)
            return PlanOutcome(
                mode=PlanMode.GOAL,
                subgoal=path[-1],
                cell_path=path,
                actions=convert_action_plan(path, pose.heading),
            )

        f_mask = _frontier_mask(belief, self.palette, comp)
        n_frontier = int(np.count_nonzero(f_mask))
        if n_frontier == 0:
            return PlanOutcome(mode=PlanMode.GIVE_UP)

        observed = int(np.count_nonzero(belief.cells != self.palette.unobserved_id))
        if observed != self._last_observed:
            self._swept.clear()
            self._last_observed = observed

        outcome = self._explore(belief, pose, comp, f_mask, n_frontier)
        outcome.frontier_count = n_frontier
        return outcome

    def _explore(self, belief, pose, comp, f_mask, n_frontier) -> PlanOutcome:
        raise NotImplementedError

    def _choose_targets(self, cand: np.ndarray) -> np.ndarray | None:
        """Subset of candidate cells to BFS toward; None when cand is empty."""
        return cand if cand.any() else None

    def _plan_to_subgoal(self, belief, pose, comp, cand, n_frontier) -> PlanOutcome:
        """BFS to the best candidate (nearest, row-major ties) and emit actions.

        A subgoal equal to the agent's cell becomes a turn-in-place so the
        outcome always carries at least one action; a cell whose surroundings
        are already fully observed goes on a sweep blacklist (cleared on any
        new observation) and the selection repeats without it, so re-picking
        a spent subgoal cannot stall the episode.
        """
        h, w = belief.height, belief.width
        start = pose.row * w + pose.col
        cand = cand.copy()
        if self._swept:
            cand.ravel()[list(self._swept)] = False
        turn_here = PlanOutcome(
            mode=PlanMode.EXPLORE,
            subgoal=(pose.row, pose.col),
            cell_path=[(pose.row, pose.col)],
            actions=[PlannerAction.TURN_LEFT],
            frontier_count=n_frontier,
        )
        while True:
            targets = self._choose_targets(cand)
            if targets is None:
                # Unreachable in theory: a frontier cell always reveals new
                # cells when swept, so frontiers can never all be blacklisted.
                return turn_here
            parent, _, hit = _flat_bfs(comp.ravel(), w, h, start, targets.ravel())
            if hit is None:
                return PlanOutcome(mode=PlanMode.GIVE_UP)
            if hit != start:
                path = _backtrack(parent, w, hit)
                return PlanOutcome(
                    mode=PlanMode.EXPLORE,
                    subgoal=path[-1],
                    cell_path=path,
                    actions=convert_action_plan(path, pose.heading),
                    frontier_count=n_frontier,
                )
            if self._disk_has_unobserved(belief, pose):
                return turn_here
            self._swept.add(start)
            cand.ravel()[start] = False

    def _disk_has_unobserved(self, belief, pose) -> bool:
        stamp = sweep_footprint(self.cfg.fov, self.cfg.range)
        R = self.cfg.range
        h, w = belief.height, belief.width
        r0, r1 = max(0, pose.row - R), min(h, pose.row + R + 1)
        c0, c1 = max(0, pose.col - R), min(w, pose.col + R + 1)
        window = belief.cells[r0:r1, c0:c1] == self.palette.unobserved_id
        swin = stamp[r0 - (pose.row - R) : r1 - (pose.row - R), c0 - (pose.col - R) : c1 - (pose.col - R)]
        return bool((window & swin).any())


class FrontierPlanner(_ExploringPlanner):
    """Pure exploration: subgoal is the nearest frontier cell."""

    name = "frontier"
    estimator_name = ""

    def _explore(self, belief, pose, comp, f_mask, n_frontier):
        return self._plan_to_subgoal(belief, pose, comp, f_mask, n_frontier)


class DC2GPlanner(_ExploringPlanner):
    """Context-guided exploration scored by an estimated cost-to-go image."""

    name = "dc2g"

    def __init__(self, estimator: EstimatorHandle, palette: Palette, cfg: SensorConfig = SensorConfig()):
        super().__init__(palette, cfg)
        self.estimator = estimator
        self.estimator_name = getattr(estimator, "name", type(estimator).__name__)
        self._scores = None

    def _choose_targets(self, cand):
        # Highest-scoring candidates; nearer cells win ties via the BFS, and
        # row-major order settles equal depths.
        if not cand.any():
            return None
        masked = np.where(cand, self._scores, -np.inf)
        return masked == masked.max()

    def _explore(self, belief, pose, comp, f_mask, n_frontier):
        h, w = belief.height, belief.width
        fe_mask = _seen_from_mask(f_mask, self.cfg) & comp

        belief_img = resize_nearest(belief.to_rgb(self.palette), ESTIMATOR_SIZE, ESTIMATOR_SIZE)
        try:
            est_img = self.estimator.estimate(belief_img)
        except Exception as exc:
            raise PlannerEstimatorError(f"estimator failed: {exc}") from exc
        scores = decode_c2g(est_img, w, h)
        # Filtered (non-grayscale) cells stay eligible at the bottom of the
        # ordering; exploration progress must not hinge on estimator output.
        self._scores = np.where(np.isnan(scores), -1.0, scores)
        return self._plan_to_subgoal(belief, pose, comp, fe_mask, n_frontier)


class OraclePlanner:
    """Full-prior-map planner: turn-minimal among hop-optimal paths to the goal."""

    name = "oracle"
    estimator_name = ""

    def __init__(self, world: SemanticGrid, palette: Palette, goal: tuple[int, int]):
        self.world = world
        self.palette = palette
        self.goal = (int(goal[0]), int(goal[1]))
        tr = traversable_mask(world, palette)
        self.field = dijkstra_cost_to_go(tr, self.goal)
        self._turns = self._build_turn_table()
        self._cached: list[PlannerAction] = []
        self._expected: Pose | None = None

    def _build_turn_table(self) -> np.ndarray:
        """Min extra turn actions to the goal from (cell, heading) along
        distance-decreasing paths."""
        dist = self.field.dist
        h, w = dist.shape
        turns = np.full((h, w, 4), np.iinfo(np.int32).max, dtype=np.int64)
        finite = np.argwhere(dist >= 0)
        order = np.argsort(dist[dist >= 0], kind="stable")
        cells = finite[order]
        gr, gc = self.goal
        turns[gr, gc, :] = 0
        for r, c in cells:
            d = dist[r, c]
            if d == 0:
                continue
            for hd in Heading:
                best = turns[r, c, hd]
                for heading2, (dr, dc) in _HEAD_STEPS:
                    nr, nc = r + dr, c + dc
                    if not (0 <= nr < h and 0 <= nc < w) or dist[nr, nc] != d - 1:
                        continue
                    cost = _TURN_COST[(hd - heading2) % 4] + turns[nr, nc, heading2]
                    if cost < best:
                        best = cost
                turns[r, c, hd] = best
        return turns

    def plan_from(self, pose: Pose) -> PlanOutcome:
        dist = self.field.dist
        if dist[pose.row, pose.col] < 0:
            raise NoPath(f"no traversable path from {(pose.row, pose.col)} to goal {self.goal}")
        h, w = dist.shape
        r, c, hd = pose.row, pose.col, pose.heading
        path = [(r, c)]
        actions: list[PlannerAction] = []
        while dist[r, c] > 0:
            d = dist[r, c]
            best = None  # (total actions to goal, heading, cell, turn cost)
            for heading2, (dr, dc) in _HEAD_STEPS:
                nr, nc = r + dr, c + dc
                if not (0 <= nr < h and 0 <= nc < w) or dist[nr, nc] != d - 1:
                    continue
                tc = _TURN_COST[(hd - heading2) % 4]
                total = int(tc + self._turns[nr, nc, heading2])
                if best is None or (total, int(heading2)) < (best[0], int(best[1])):
                    best = (total, heading2, (nr, nc), tc)
            tc = best[3]
            if tc == 1:
                actions.append(PlannerAction.TURN_RIGHT if (best[1] - hd) % 4 == 1 else PlannerAction.TURN_LEFT)
            elif tc == 2:
                actions.extend((PlannerAction.TURN_LEFT, PlannerAction.TURN_LEFT))
            actions.append(PlannerAction.FORWARD)
            hd = best[1]
            r, c = best[2]
            path.append((r, c))
        return PlanOutcome(mode=PlanMode.GOAL, subgoal=self.goal, cell_path=path, actions=actions)

    def plan(self, belief: SemanticGrid, pose: Pose) -> PlanOutcome:
        # The oracle's knowledge never changes, so the cached plan stays valid
        # as long as the agent follows it.
        if self._expected == pose and self._cached:
            actions = self._cached
        else:
            outcome = self.plan_from(pose)
            actions = outcome.actions
            if not actions:
                return outcome
        self._cached = actions[1:]
        nxt = step(self.world, self.palette, pose, actions[0])
        self._expected = nxt
        return PlanOutcome(mode=PlanMode.GOAL, subgoal=self.goal, actions=actions)


_HEAD_STEPS = tuple((hd, hd.vector) for hd in Heading)
_TURN_COST = {0: 0, 1: 1, 2: 2, 3: 1}


def oracle_plan(world: SemanticGrid, palette: Palette, pose: Pose, goal: tuple[int, int]) -> PlanOutcome:
    """One-shot optimal plan with full map knowledge."""
    return OraclePlanner(world, palette, goal).plan_from(pose)


def dc2g_plan(
    belief: SemanticGrid,
    pose: Pose,
    estimator: EstimatorHandle,
    palette: Palette,
    cfg: SensorConfig = SensorConfig(),
) -> PlanOutcome:
    """Single planning step of the cost-to-go guided planner (stateless wrapper)."""
    return DC2GPlanner(estimator, palette, cfg).plan(belief, pose)


def frontier_plan(belief: SemanticGrid, pose: Pose, palette: Palette, cfg: SensorConfig = SensorConfig()) -> PlanOutcome:
    """Single planning step of the nearest-frontier baseline (stateless wrapper)."""
    return FrontierPlanner(palette, cfg).plan(belief, pose)


def run_episode(
    world: SemanticGrid,
    palette: Palette,
    goal: tuple[int, int],
    start: Pose,
    planner,
    cfg: SensorConfig = SensorConfig(),
    max_steps: int = 10000,
    trace: TraceWriter | None = None,
) -> EpisodeResult:
    """Sense-plan-act loop with per-step replanning.

    Terminates when the agent stands on the goal cell, the planner gives up,
    or max_steps actions have been taken.
    """
    if not palette.classes[world.cells[start.row, start.col]].traversable:
        raise AgentOffTraversable(f"start {start} is not on a traversable cell")
    belief = new_belief((world.height, world.width), palette)
    pose = start
    trajectory = [pose]
    subgoals: list[tuple[int, int] | None] = []
    plan_ms: list[float] = []
    steps = 0
    goal_id = palette.goal_id
    while True:
        observe(world, belief, pose, cfg)
        if world.cells[pose.row, pose.col] == goal_id:
            return EpisodeResult(steps, EpisodeStatus.REACHED_GOAL, trajectory, subgoals, plan_ms)
        if steps >= max_steps:
            return EpisodeResult(steps, EpisodeStatus.TIMEOUT, trajectory, subgoals, plan_ms)
        t0 = time.perf_counter()
        try:
            outcome = planner.plan(belief, pose)
        except PlannerEstimatorError as exc:
            return EpisodeResult(steps, EpisodeStatus.ERROR, trajectory, subgoals, plan_ms, error=str(exc))
        plan_ms.append((time.perf_counter() - t0) * 1e3)
        if outcome.mode is PlanMode.GIVE_UP:
            return EpisodeResult(steps, EpisodeStatus.GAVE_UP, trajectory, subgoals, plan_ms)
        subgoals.append(outcome.subgoal)
        action = outcome.next_action
        if trace is not None:
            trace.record(
                steps,
                pose,
                action,
                outcome.subgoal,
                outcome.frontier_count,
                int(np.count_nonzero(observed_mask(belief, palette))),
            )
        pose = step(world, palette, pose, action)
        steps += 1
        trajectory.append(pose)

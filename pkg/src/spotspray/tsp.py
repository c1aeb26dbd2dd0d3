"""Patch-sequencing tour construction and refinement.

Tours are closed sequences ``(0, p1, ..., pN, 0)`` over the transition
graph, node 0 being the field entrance.  Two deterministic initialisers
(nearest neighbour and its double-ended variant) and four refinement moves
are provided; the sampling-based ones (h1, h2, h3) run against a wall-clock
or move-count budget, h4 is a deterministic sweep.  The inner loops live in
the kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import monotonic
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ._core import kernels
from .geom import PARALLEL_TOL
from .model import TransitionGraph

_NO_MOVE_LIMIT = 2**62
_NO_TIME_LIMIT = 1e18


@dataclass(frozen=True)
class Budget:
    """Refinement budget: wall-clock seconds, move count, or both (first hit wins)."""

    seconds: Optional[float] = None
    moves: Optional[int] = None

    def __post_init__(self):
        if self.seconds is None and self.moves is None:
            raise ValueError("budget needs seconds and/or moves")
        if self.seconds is not None and self.seconds <= 0.0:
            raise ValueError("budget seconds must be > 0")
        if self.moves is not None and self.moves < 0:
            raise ValueError("budget moves must be >= 0")


@dataclass(frozen=True)
class TspTour:
    """Closed visiting order (0, p1, ..., pN, 0) and its length."""

    sequence: Tuple[int, ...]
    cost: float

    @property
    def n_patches(self) -> int:
        return len(self.sequence) - 2


@dataclass(frozen=True)
class RefineOutcome:
    tour: TspTour
    runtime: float
    iterations: int
    improvement_trace: Tuple[Tuple[float, float], ...]


def _check_sequence(graph: TransitionGraph, sequence: Sequence[int]) -> List[int]:
    seq = list(sequence)
    if len(seq) != graph.n + 1 or seq[0] != 0 or seq[-1] != 0:
        raise ValueError("tour must start and end at the entrance node 0")
    if sorted(seq[1:-1]) != list(range(1, graph.n)):
        raise ValueError("tour interior must be a permutation of the patch nodes")
    return seq[:-1]  # open form for the kernels


def tour_cost(graph: TransitionGraph, sequence: Sequence[int]) -> float:
    """Sum of edge costs along the closed tour, including the return edge."""
    open_seq = _check_sequence(graph, sequence)
    return float(kernels.tour_cost(graph.cost, open_seq))


def _close(open_seq: Sequence[int]) -> Tuple[int, ...]:
    return tuple(open_seq) + (0,)


def init_nn(graph: TransitionGraph) -> TspTour:
    """Nearest-neighbour construction from the entrance; ties take the lowest index."""
    n = graph.n
    if n < 2:
        raise ValueError("graph needs at least one patch")
    seq = [0]
    remaining = np.ones(n, dtype=bool)
    remaining[0] = False
    cur = 0
    for _ in range(n - 1):
        row = np.where(remaining, graph.cost[cur], np.inf)
        nxt = int(np.argmin(row))
        seq.append(nxt)
        remaining[nxt] = False
        cur = nxt
    return TspTour(_close(seq), tour_cost(graph, _close(seq)))


def init_denn(graph: TransitionGraph) -> TspTour:
    """Double-ended nearest neighbour: two branches grow from the entrance; each
    step extends the branch with the cheaper extension (ties: branch A, lowest
    index), and the branch ends are joined last."""
    n = graph.n
    if n < 2:
        raise ValueError("graph needs at least one patch")
    remaining = np.ones(n, dtype=bool)
    remaining[0] = False
    branch_a: List[int] = []
    branch_b: List[int] = []
    end_a = end_b = 0
    while remaining.any():
        row_a = np.where(remaining, graph.cost[end_a], np.inf)
        row_b = np.where(remaining, graph.cost[end_b], np.inf)
        cand_a = int(np.argmin(row_a))
        cand_b = int(np.argmin(row_b))
        if row_a[cand_a] <= row_b[cand_b]:
            branch_a.append(cand_a)
            remaining[cand_a] = False
            end_a = cand_a
        else:
            branch_b.append(cand_b)
            remaining[cand_b] = False
            end_b = cand_b
    seq = [0] + branch_a + branch_b[::-1]
    return TspTour(_close(seq), tour_cost(graph, _close(seq)))


def _run_sampler(kernel_fn, graph: TransitionGraph, tour: TspTour, seed: int,
                 budget: Budget) -> RefineOutcome:
    open_seq = _check_sequence(graph, tour.sequence)
    max_moves = budget.moves if budget.moves is not None else _NO_MOVE_LIMIT
    time_limit = budget.seconds if budget.seconds is not None else _NO_TIME_LIMIT
    t0 = monotonic()
    seq, cost, attempted, _accepted, trace = kernel_fn(
        graph.cost, open_seq, seed & ((1 << 64) - 1), max_moves, time_limit
    )
    runtime = monotonic() - t0
    return RefineOutcome(
        tour=TspTour(_close(seq), float(cost)),
        runtime=runtime,
        iterations=int(attempted),
        improvement_trace=tuple((float(t), float(c)) for t, c in trace),
    )


def refine_h1(graph: TransitionGraph, tour: TspTour, seed: int, budget: Budget) -> RefineOutcome:
    """Random pair swap: draw two positions, swap, keep on strict improvement."""
    return _run_sampler(kernels.h1_refine, graph, tour, seed, budget)


def refine_h2(graph: TransitionGraph, tour: TspTour, seed: int, budget: Budget) -> RefineOutcome:
    """Remove a random node and reinsert it at a random position, keep on strict improvement."""
    return _run_sampler(kernels.h2_refine, graph, tour, seed, budget)


def refine_h3(graph: TransitionGraph, tour: TspTour, seed: int, budget: Budget) -> RefineOutcome:
    """Flip a random adjacent node pair, keep on strict improvement."""
    return _run_sampler(kernels.h3_refine, graph, tour, seed, budget)


def refine_h4(graph: TransitionGraph, tour: TspTour,
              node_positions: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> RefineOutcome:
    """Deterministic crossing-removal sweep.

    Scans ordered edge pairs; where the straight lines between the nodes'
    representative points are not parallel, attempts the 2-opt reroute
    (reverse the enclosed subsequence) and keeps strict improvements,
    restarting the scan position after each accepted move.  Full passes
    repeat until one yields no update.
    """
    open_seq = _check_sequence(graph, tour.sequence)
    if node_positions is None:
        px, py = graph.representatives()
    else:
        px, py = node_positions
    px = np.ascontiguousarray(px, dtype=np.float64)
    py = np.ascontiguousarray(py, dtype=np.float64)
    max_passes = 10 * graph.n + 100
    t0 = monotonic()
    seq, cost, checks, accepted, _passes = kernels.h4_refine(
        graph.cost, open_seq, px, py, PARALLEL_TOL, max_passes
    )
    runtime = monotonic() - t0
    trace = ((0.0, tour.cost), (runtime, float(cost))) if accepted else ((0.0, tour.cost),)
    return RefineOutcome(
        tour=TspTour(_close(seq), float(cost)),
        runtime=runtime,
        iterations=int(checks),
        improvement_trace=trace,
    )


_REFINERS = {"h1": refine_h1, "h2": refine_h2, "h3": refine_h3, "h4": refine_h4}


def _stage_seed(seed: int, stage: int) -> int:
    return (seed + 0x9E3779B97F4A7C15 * (stage + 1)) & ((1 << 64) - 1)


def refine_pipeline(graph: TransitionGraph, tour: TspTour, heuristics: Sequence[str],
                    seed: int, budget: Budget) -> RefineOutcome:
    """Apply refinement heuristics in order; each sampler gets the full budget,
    h4 runs to convergence.  Runtime and iteration counts are summed."""
    if not heuristics:
        raise ValueError("need at least one refinement heuristic")
    current = tour
    total_runtime = 0.0
    total_iter = 0
    trace: List[Tuple[float, float]] = [(0.0, tour.cost)]
    for k, name in enumerate(heuristics):
        fn = _REFINERS[name.lower()]
        if name.lower() == "h4":
            out = fn(graph, current)
        else:
            out = fn(graph, current, _stage_seed(seed, k), budget)
        for t, c in out.improvement_trace:
            if c < trace[-1][1]:
                trace.append((total_runtime + t, c))
        total_runtime += out.runtime
        total_iter += out.iterations
        current = out.tour
    return RefineOutcome(tour=current, runtime=total_runtime, iterations=total_iter,
                         improvement_trace=tuple(trace))


def plan_tour(graph: TransitionGraph, config) -> Tuple[TspTour, RefineOutcome]:
    """Initialise per config and refine; returns (initial tour, refine outcome)."""
    init = init_nn(graph) if config.tsp_init == "nn" else init_denn(graph)
    if config.move_budget is not None:
        budget = Budget(moves=config.move_budget)
    else:
        budget = Budget(seconds=config.time_limit)
    outcome = refine_pipeline(graph, init, config.tsp_refine, config.seed, budget)
    return init, outcome

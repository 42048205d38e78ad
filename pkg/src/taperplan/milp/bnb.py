"""Branch and bound over LP relaxations solved by :func:`solve_lp`."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import MilpSolution, SparseMilp
from .simplex import solve_lp

INT_TOL = 1e-6
ROW_TOL = 1e-6
PRUNE_REL = 1e-9

Heuristic = Callable[[SparseMilp, np.ndarray], "np.ndarray | None"]


@dataclass(frozen=True)
class SolveOptions:
    """Branch-and-bound controls.

    ``gap_tol`` is relative: ``(incumbent - bound) / max(1, |incumbent|)``.
    ``heuristic`` receives the model and a fractional LP point and may return
    a full-length vector (or a 2-D stack of them) whose integral entries are
    tried as fixings.
    """

    gap_tol: float = 0.0
    time_limit_s: float = 3600.0
    node_limit: int | None = None
    dive_threshold: int = 64
    heuristic: Heuristic | None = None
    heuristic_every: int = 25
    backend: str | None = None

    def __post_init__(self):
        if self.gap_tol < 0:
            raise ValueError("gap_tol must be >= 0")
        if not self.time_limit_s > 0:
            raise ValueError("time_limit_s must be > 0")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")


@dataclass
class _Node:
    nid: int
    bound: float
    depth: int
    lo: np.ndarray
    hi: np.ndarray


def _rel_gap(inc: float, bound: float) -> float:
    if not np.isfinite(inc):
        return np.inf
    return max(0.0, inc - bound) / max(1.0, abs(inc))


def _most_fractional(x, int_idx):
    xi = x[int_idx]
    frac = np.abs(xi - np.round(xi))
    k = int(np.argmax(frac))  # first maximum -> lowest column index
    if frac[k] <= INT_TOL:
        return -1
    return int(int_idx[k])


class _Search:
    def __init__(self, milp: SparseMilp, opts: SolveOptions):
        self.milp = milp
        self.opts = opts
        self.int_idx = np.flatnonzero(milp.integrality)
        self.inc_x: np.ndarray | None = None
        self.inc_obj = np.inf
        self.lp_iters = 0
        self.lp_solves = 0

    def lp(self, lo, hi):
        r = solve_lp(self.milp, lo, hi, backend=self.opts.backend)
        self.lp_iters += r.iterations
        self.lp_solves += 1
        if r.status == "iteration_limit":
            raise RuntimeError("LP relaxation hit its iteration limit inside branch and bound")
        return r

    def cutoff(self) -> float:
        if not np.isfinite(self.inc_obj):
            return np.inf
        return self.inc_obj - PRUNE_REL * max(1.0, abs(self.inc_obj))

    def run_heuristic(self, x, lo, hi):
        cand = self.opts.heuristic(self.milp, x)
        if cand is None:
            return
        cand = np.asarray(cand, dtype=float)
        for c in cand if cand.ndim == 2 else cand[None]:
            self.try_fixing(c, lo, hi)

    def try_fixing(self, x, lo, hi) -> bool:
        """Fix integral columns at ``round(x)`` and re-solve the continuous part."""
        xi = np.round(x[self.int_idx])
        if np.any(xi < lo[self.int_idx] - INT_TOL) or np.any(xi > hi[self.int_idx] + INT_TOL):
            return False
        flo = lo.copy()
        fhi = hi.copy()
        flo[self.int_idx] = xi
        fhi[self.int_idx] = xi
        r = self.lp(flo, fhi)
        if r.status != "optimal":
            return False
        if self.milp.max_violation(r.x) > ROW_TOL:
            return False
        if r.objective < self.inc_obj - PRUNE_REL * max(1.0, abs(r.objective)):
            self.inc_obj = r.objective
            self.inc_x = r.x
            return True
        return False


def solve_milp(milp: SparseMilp, options: SolveOptions | None = None, **kw) -> MilpSolution:
    """Minimise ``milp`` by LP-based branch and bound.

    Node selection dives depth first (the child on the rounding side of the
    branching variable goes first) and switches to best-bound order whenever
    more than ``dive_threshold`` nodes are open. Ties go to the lower node id,
    so repeated runs visit nodes in the same order.

    Keyword arguments are forwarded to :class:`SolveOptions` when ``options``
    is omitted.
    """
    opts = options if options is not None else SolveOptions(**kw)
    t0 = time.perf_counter()
    S = _Search(milp, opts)

    def finish(status, bound, nodes):
        gap = _rel_gap(S.inc_obj, bound) if S.inc_x is not None else np.inf
        return MilpSolution(
            status=status,
            x=S.inc_x,
            objective=float(S.inc_obj) if S.inc_x is not None else np.nan,
            bound=float(bound),
            gap=float(gap),
            nodes=nodes,
            wall_time=time.perf_counter() - t0,
            lp_iterations=S.lp_iters,
        )

    lo0 = np.array(milp.col_lower, dtype=float)
    hi0 = np.array(milp.col_upper, dtype=float)
    if S.int_idx.size:
        lo0[S.int_idx] = np.ceil(lo0[S.int_idx] - INT_TOL)
        hi0[S.int_idx] = np.floor(hi0[S.int_idx] + INT_TOL)

    root = S.lp(lo0, hi0)
    if root.status == "infeasible":
        return finish("infeasible", np.inf, 1)
    if root.status == "unbounded":
        return finish("unbounded", -np.inf, 1)
    if opts.heuristic is not None and _most_fractional(root.x, S.int_idx) >= 0:
        S.run_heuristic(root.x, lo0, hi0)

    counter = 0
    stack: list[int] = []
    heap: list[tuple[float, int]] = []
    open_nodes: dict[int, _Node] = {}

    def push(node: _Node):
        open_nodes[node.nid] = node
        stack.append(node.nid)
        heapq.heappush(heap, (node.bound, node.nid))

    def pop() -> _Node:
        if len(open_nodes) > opts.dive_threshold:
            while True:
                _, nid = heapq.heappop(heap)
                if nid in open_nodes:
                    break
        else:
            while True:
                nid = stack.pop()
                if nid in open_nodes:
                    break
        return open_nodes.pop(nid)

    def open_bound():
        if not open_nodes:
            return np.inf
        while heap[0][1] not in open_nodes:
            heapq.heappop(heap)
        return heap[0][0]

    push(_Node(counter, root.objective, 0, lo0, hi0))
    counter += 1
    pending_root = root
    nodes = 0
    while open_nodes:
        bound = min(open_bound(), S.inc_obj)
        if S.inc_x is not None and _rel_gap(S.inc_obj, bound) <= opts.gap_tol and opts.gap_tol > 0:
            return finish("optimal", bound, nodes)
        if time.perf_counter() - t0 > opts.time_limit_s or (
            opts.node_limit is not None and nodes >= opts.node_limit
        ):
            return finish("feasible" if S.inc_x is not None else "limit", bound, nodes)

        node = pop()
        if node.bound >= S.cutoff():
            continue
        if pending_root is not None:
            r, pending_root = pending_root, None
        else:
            r = S.lp(node.lo, node.hi)
        nodes += 1
        if r.status == "infeasible" or r.objective >= S.cutoff():
            continue
        if r.status == "unbounded":
            # integral columns are bounded, so the ray is continuous; reported
            # as soon as any node relaxation has one
            return finish("unbounded", -np.inf, nodes)
        j = _most_fractional(r.x, S.int_idx)
        if j < 0:
            S.try_fixing(r.x, node.lo, node.hi)
            continue
        if opts.heuristic is not None and nodes % opts.heuristic_every == 0:
            S.run_heuristic(r.x, node.lo, node.hi)

        v = r.x[j]
        down_hi = node.hi.copy()
        down_hi[j] = np.floor(v)
        up_lo = node.lo.copy()
        up_lo[j] = np.ceil(v)
        down = _Node(counter, r.objective, node.depth + 1, node.lo, down_hi)
        up = _Node(counter + 1, r.objective, node.depth + 1, up_lo, node.hi)
        counter += 2
        # the child pushed last is dived into first
        if v - np.floor(v) >= 0.5:
            push(down)
            push(up)
        else:
            push(up)
            push(down)

    if S.inc_x is None:
        return finish("infeasible", np.inf, nodes)
    return finish("optimal", S.inc_obj, nodes)

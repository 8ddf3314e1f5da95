"""Exhaustive schedule search: permutations x tilings x buffering levels.

The search follows a two-step shape.  Step one (precompute_requirements)
derives, per loop ordering, the layer-independent structure of the
candidate space: which positions multiply into each array's footprint,
which positions can carry reuse of each array, and the short list of
buffering levels worth considering (raising a level between two carriers
never changes the buffer but never increases traffic, so only the level
just under each carrier, and the top, can win).  Step two evaluates that
structure for a concrete layer over all tile choices with vectorized
integer arithmetic, applies the budget, and reduces with a deterministic
tie-break.

Every nest is laid out on ten fixed positions: the six tile-body loops of
the ordering innermost-first, then controlling loops for SX, SY, IF, OF.
Untiled axes keep their controlling position with a trip count of one,
which never carries reuse and multiplies nothing, so the uniform layout is
exact; reported winners drop those unit loops again.

All traffic numbers here are exact int64; winners are re-materialized
through the scalar model as a cross-check before being reported.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .layers import LayerShape, LayerSuite, ValidationError
from .model import (
    Axis, BufferingAssignment, Schedule, Tiles, TrafficReport,
    ideal_traffic, schedule_to_json, traffic,
)
from .space import (
    Ordering, TilePolicy, enumerate_permutations, enumerate_tiles, instantiate,
)

_HUGE = np.iinfo(np.int64).max // 4

# Fixed positions of the controlling loops in the uniform ten-slot nest,
# innermost first (so the outermost-first order is OF, IF, SY, SX).
_POS_TSX, _POS_TSY, _POS_TIF, _POS_TOF = 6, 7, 8, 9
_CTRL_AXIS = {_POS_TSX: Axis.SX, _POS_TSY: Axis.SY,
              _POS_TIF: Axis.IF, _POS_TOF: Axis.OF}

_W_DIMS = {Axis.FX, Axis.FY, Axis.IF, Axis.OF}
_O_DIMS = {Axis.SX, Axis.SY, Axis.OF}

MODEL_ORDER = ("ours", "peemen", "cache", "hwc", "hwce", "ideal")

TIE_BREAK_DEFAULT = "traffic,buffer,acc,serial"


@dataclass(frozen=True)
class SearchConfig:
    budgets: tuple[int, ...] = tuple(1024 * 2 ** k for k in range(10))
    tile_policy: TilePolicy = field(default_factory=TilePolicy)
    prune: bool = True
    tie_break: str = TIE_BREAK_DEFAULT

    def __post_init__(self) -> None:
        if not self.budgets or list(self.budgets) != sorted(set(self.budgets)):
            raise ValidationError("budgets must be ascending, unique, and non-empty")
        if self.budgets[0] <= 0:
            raise ValidationError("budgets must be positive")
        if self.tie_break != TIE_BREAK_DEFAULT:
            raise ValidationError(f"unknown tie-break rule {self.tie_break!r}")


@dataclass(frozen=True)
class SearchResult:
    layer_name: str
    budget: int
    schedule: Schedule
    assignment: BufferingAssignment
    report: TrafficReport
    candidates: int

    @property
    def feasible(self) -> bool:
        return self.report.feasible


@dataclass(frozen=True)
class OrderingPlan:
    """Layer-independent candidate structure of one loop ordering."""

    ordering: Ordering
    # Potential reuse-carrying positions per array, ascending.  Whether a
    # position actually carries depends on the tile values (extent 1 never
    # carries); an input-side spatial carrier additionally needs a kernel
    # wider than one, which only the layer knows.
    carriers: dict[str, tuple[int, ...]]
    # Buffering levels worth evaluating per array: just under each
    # potential carrier, plus the top of the nest.
    cand_levels: dict[str, tuple[int, ...]]
    # Input spatial state per dim: (kernel body pos, spatial body pos).
    x_pair: tuple[int, int]
    y_pair: tuple[int, int]

    @property
    def body_pos(self) -> dict[Axis, int]:
        return {a: i for i, a in enumerate(self.ordering)}


def _make_plan(ordering: Ordering) -> OrderingPlan:
    pos = {a: i for i, a in enumerate(ordering)}
    carriers = {
        "I": tuple(sorted({max(pos[Axis.FX], pos[Axis.SX]),
                           max(pos[Axis.FY], pos[Axis.SY]),
                           pos[Axis.OF], _POS_TOF})),
        "W": tuple(sorted({pos[Axis.SX], pos[Axis.SY], _POS_TSX, _POS_TSY})),
        "O": tuple(sorted({pos[Axis.FX], pos[Axis.FY], pos[Axis.IF], _POS_TIF})),
    }
    cand = {
        a: tuple(sorted({p - 1 for p in carriers[a] if p >= 1} | {9}))
        for a in carriers
    }
    return OrderingPlan(
        ordering=ordering, carriers=carriers, cand_levels=cand,
        x_pair=(pos[Axis.FX], pos[Axis.SX]),
        y_pair=(pos[Axis.FY], pos[Axis.SY]),
    )


_PLANS: dict[Ordering, OrderingPlan] = {}


@dataclass(frozen=True)
class RequirementTable:
    """Memoized per-ordering plans; structure is layer-independent."""

    orderings: tuple[Ordering, ...]

    def plan(self, ordering: Ordering) -> OrderingPlan:
        if ordering not in _PLANS:
            _PLANS[ordering] = _make_plan(ordering)
        return _PLANS[ordering]

    def row_count(self, layer: LayerShape, policy: TilePolicy) -> int:
        menus = enumerate_tiles(layer, policy)
        combos = math.prod(len(m) for m in menus.values())
        return len(self.orderings) * combos


def precompute_requirements(orderings: tuple[Ordering, ...] | None = None,
                            prune: bool = True) -> RequirementTable:
    if orderings is None:
        orderings = enumerate_permutations(prune)
    table = RequirementTable(orderings=tuple(orderings))
    for o in table.orderings:
        table.plan(o)
    return table


@dataclass
class _Tables:
    """Vectorized per-(ordering, layer) candidate tables over tile combos."""

    ext: np.ndarray          # (10, T) loop extents
    suffix: np.ndarray       # (10, T) product of extents above each position
    ft: dict[str, np.ndarray]   # (11, T); ft[a][p] = footprint below position p
    carrier_masks: dict[str, list[tuple[int, np.ndarray]]]
    tiles: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]  # mss,css,iss,jss


def _tile_vectors(menus: dict[Axis, tuple[int, ...]]) -> tuple[np.ndarray, ...]:
    grids = np.meshgrid(
        np.asarray(menus[Axis.OF], dtype=np.int64),
        np.asarray(menus[Axis.IF], dtype=np.int64),
        np.asarray(menus[Axis.SY], dtype=np.int64),
        np.asarray(menus[Axis.SX], dtype=np.int64),
        indexing="ij",
    )
    return tuple(g.reshape(-1) for g in grids)


def _build_tables(plan: OrderingPlan, layer: LayerShape,
                  tiles: tuple[np.ndarray, ...]) -> _Tables:
    mss, css, iss, jss = tiles
    t = mss.size
    ones = np.ones(t, dtype=np.int64)
    body_extent = {
        Axis.OF: mss, Axis.IF: css, Axis.SY: iss, Axis.SX: jss,
        Axis.FY: ones * layer.k_h, Axis.FX: ones * layer.k_w,
    }
    ext = np.empty((10, t), dtype=np.int64)
    for p, axis in enumerate(plan.ordering):
        ext[p] = body_extent[axis]
    ext[_POS_TSX] = -(-layer.out_w // jss)
    ext[_POS_TSY] = -(-layer.out_h // iss)
    ext[_POS_TIF] = -(-layer.c_in // css)
    ext[_POS_TOF] = -(-layer.c_out // mss)

    cum = np.cumprod(ext, axis=0)
    total = cum[9]
    suffix = total // cum

    ft = {a: np.ones((11, t), dtype=np.int64) for a in ("I", "W", "O")}
    dims = {"W": _W_DIMS, "O": _O_DIMS}
    for a in ("W", "O"):
        for p in range(10):
            axis = plan.ordering[p] if p < 6 else _CTRL_AXIS[p]
            grow = ext[p] if axis in dims[a] else 1
            ft[a][p + 1] = ft[a][p] * grow

    # Inputs: channel product times a window factor per spatial dim.
    channels = np.ones(t, dtype=np.int64)
    x_state = {"k": False, "s": None, "trips": None}
    y_state = {"k": False, "s": None, "trips": None}

    def dim_factor(state, kernel: int) -> np.ndarray:
        if state["k"] and state["s"] is not None:
            base = (state["s"] - 1) * layer.stride + kernel
        elif state["k"]:
            base = ones * kernel
        elif state["s"] is not None:
            base = state["s"]
        else:
            base = ones
        return base * state["trips"] if state["trips"] is not None else base

    for p in range(10):
        axis = plan.ordering[p] if p < 6 else _CTRL_AXIS[p]
        if axis is Axis.IF and p < 6:
            channels = channels * css
        elif axis is Axis.IF:
            channels = channels * ext[_POS_TIF]
        elif p == plan.x_pair[0]:
            x_state["k"] = True
        elif p == plan.x_pair[1]:
            x_state["s"] = jss
        elif p == _POS_TSX:
            x_state["trips"] = ext[_POS_TSX]
        elif p == plan.y_pair[0]:
            y_state["k"] = True
        elif p == plan.y_pair[1]:
            y_state["s"] = iss
        elif p == _POS_TSY:
            y_state["trips"] = ext[_POS_TSY]
        ft["I"][p + 1] = channels * dim_factor(x_state, layer.k_w) \
            * dim_factor(y_state, layer.k_h)

    # A carrier position carries iff its extent exceeds one; the input
    # spatial carriers also need the kernel in that dim to exceed one.
    masks: dict[str, list[tuple[int, np.ndarray]]] = {}
    for a in ("I", "W", "O"):
        lst = []
        for p in plan.carriers[a]:
            m = ext[p] > 1
            if a == "I":
                if p == max(plan.x_pair) and layer.k_w == 1:
                    m = np.zeros(t, dtype=bool)
                if p == max(plan.y_pair) and layer.k_h == 1:
                    m = np.zeros(t, dtype=bool)
            lst.append((p, m))
        masks[a] = lst
    return _Tables(ext=ext, suffix=suffix, ft=ft, carrier_masks=masks,
                   tiles=tiles)


def _level_tables(tabs: _Tables, plan: OrderingPlan, array: str
                  ) -> tuple[np.ndarray, np.ndarray]:
    """(traffic-units, buffer-elements) per candidate level, each (nL, T)."""
    levels = plan.cand_levels[array]
    t = tabs.ext.shape[1]
    tr = np.empty((len(levels), t), dtype=np.int64)
    bf = np.empty((len(levels), t), dtype=np.int64)
    for i, lvl in enumerate(levels):
        tr[i] = tabs.ft[array][lvl + 1] * tabs.suffix[lvl]
        b = np.ones(t, dtype=np.int64)
        for p, mask in tabs.carrier_masks[array]:
            if p > lvl:
                break
            b = np.where(mask, tabs.ft[array][p], b)
        bf[i] = b
    return tr, bf


def _o_acc_table(tabs: _Tables, plan: OrderingPlan, layer: LayerShape
                 ) -> np.ndarray:
    """Partial-sum spill bytes per candidate O level, (nL, T).

    Each O-carrying loop above the level multiplies the accumulation
    passes; every pass beyond the first costs a write plus a read of all
    distinct outputs at accumulator precision.
    """
    levels = plan.cand_levels["O"]
    t = tabs.ext.shape[1]
    distinct = layer.c_out * layer.out_h * layer.out_w
    out = np.empty((len(levels), t), dtype=np.int64)
    for i, lvl in enumerate(levels):
        passes = np.ones(t, dtype=np.int64)
        for p, mask in tabs.carrier_masks["O"]:
            if p > lvl:
                passes = np.where(mask, passes * tabs.ext[p], passes)
        out[i] = 2 * layer.p_acc * distinct * (passes - 1)
    return out


def _compact_levels(layer: LayerShape, mss: int, css: int, iss: int, jss: int,
                    levels10: tuple[int, int, int]) -> tuple[list[Axis], tuple[int, int, int]]:
    """Drop unit controlling loops; remap ten-slot levels onto what's left."""
    trips = {
        _POS_TSX: -(-layer.out_w // jss), _POS_TSY: -(-layer.out_h // iss),
        _POS_TIF: -(-layer.c_in // css), _POS_TOF: -(-layer.c_out // mss),
    }
    kept = list(range(6)) + [p for p in (6, 7, 8, 9) if trips[p] > 1]
    ctrl = [_CTRL_AXIS[p] for p in (6, 7, 8, 9) if trips[p] > 1]

    def remap(lvl: int) -> int:
        return sum(1 for q in kept if q <= lvl) - 1

    return ctrl, tuple(remap(l) for l in levels10)


def _serialize_candidate(ordering: Ordering, layer: LayerShape,
                         mss: int, css: int, iss: int, jss: int,
                         levels10: tuple[int, int, int]) -> str:
    _, (li, lw, lo) = _compact_levels(layer, mss, css, iss, jss, levels10)
    doc = {
        "order": [a.name for a in ordering],
        "tiles": {"mss": mss, "css": css, "iss": iss, "jss": jss},
        "buffering": {"I": li, "W": lw, "O": lo},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass
class LayerEvaluation:
    """Everything one exhaustive pass over a layer's schedule space yields."""

    layer: LayerShape
    budgets: tuple[int, ...]
    results: tuple[SearchResult, ...]      # one per budget
    orderings: tuple[Ordering, ...]
    ordering_best: np.ndarray              # (orderings, budgets); -1 infeasible
    min_budget_ideal: int
    candidates: int


@dataclass(frozen=True)
class _Winner:
    total: int
    buffer: int
    acc: int
    serial: str
    ordering: Ordering
    tiles: tuple[int, int, int, int]
    levels10: tuple[int, int, int]

    def key(self):
        return (self.total, self.buffer, self.acc, self.serial)


def _reduce_budget(st_flat, sb_flat, toacc, shape, budget, plan, layer,
                   tiles, cand) -> _Winner | None:
    """Staged minimization: traffic, then buffer, then spill bytes, then the
    canonical serialization, over candidates whose buffers fit the budget."""
    st_f = np.where(sb_flat <= budget, st_flat, _HUGE)
    m1 = int(st_f.min())
    if m1 >= _HUGE:
        return None
    idx = np.flatnonzero(st_f == m1)
    sb_sub = sb_flat[idx]
    m2 = int(sb_sub.min())
    idx = idx[sb_sub == m2]

    n_i, n_w, n_o, n_t = shape
    ta_sub = toacc[(idx // n_t) % n_o, idx % n_t]
    m3 = int(ta_sub.min())
    idx = idx[ta_sub == m3]

    mss_v, css_v, iss_v, jss_v = tiles
    best = None
    for flat in idx:
        t = int(flat % n_t)
        k = int((flat // n_t) % n_o)
        j = int((flat // (n_t * n_o)) % n_w)
        i = int(flat // (n_t * n_o * n_w))
        tile = (int(mss_v[t]), int(css_v[t]), int(iss_v[t]), int(jss_v[t]))
        lv = (cand["I"][i], cand["W"][j], cand["O"][k])
        serial = _serialize_candidate(plan.ordering, layer, *tile, lv)
        if best is None or serial < best[0]:
            best = (serial, tile, lv)
    serial, tile, lv = best
    return _Winner(total=m1, buffer=m2, acc=m3, serial=serial,
                   ordering=plan.ordering, tiles=tile, levels10=lv)


def _materialize(winner: _Winner, layer: LayerShape, budget: int | None,
                 candidates: int) -> SearchResult:
    mss, css, iss, jss = winner.tiles
    _, (li, lw, lo) = _compact_levels(layer, mss, css, iss, jss,
                                      winner.levels10)
    schedule = instantiate(winner.ordering, Tiles(mss, css, iss, jss), layer)
    assignment = BufferingAssignment(level_i=li, level_w=lw, level_o=lo)
    report = traffic(schedule, assignment, budget)
    # The scalar model arbitrates: the engine must agree exactly.
    assert report.total == winner.total, (report.total, winner.total)
    assert report.buffer_bytes == winner.buffer
    assert report.t_o_acc == winner.acc
    assert schedule_to_json(schedule, assignment) == winner.serial
    return SearchResult(layer_name=layer.name, budget=budget,
                        schedule=schedule, assignment=assignment,
                        report=report, candidates=candidates)


def evaluate_layer(layer: LayerShape,
                   budgets: tuple[int, ...],
                   policy: TilePolicy | None = None,
                   prune: bool = True,
                   orderings: tuple[Ordering, ...] | None = None
                   ) -> LayerEvaluation:
    """Exhaustive search over the full space, all budgets in one pass."""
    policy = policy or TilePolicy()
    table = precompute_requirements(orderings, prune)
    orderings = table.orderings
    menus = enumerate_tiles(layer, policy)
    tiles = _tile_vectors(menus)
    ideal = ideal_traffic(layer)

    n_budgets = len(budgets)
    ordering_best = np.full((len(orderings), n_budgets), -1, dtype=np.int64)
    winners: list[_Winner | None] = [None] * n_budgets
    fallback: tuple | None = None  # smallest-buffer candidate overall
    min_ideal_sb = None
    candidates = 0

    for oi, ordering in enumerate(orderings):
        plan = table.plan(ordering)
        tabs = _build_tables(plan, layer, tiles)
        cand = plan.cand_levels
        ti, bi = _level_tables(tabs, plan, "I")
        tw, bw = _level_tables(tabs, plan, "W")
        _, bo = _level_tables(tabs, plan, "O")

        distinct = layer.c_out * layer.out_h * layer.out_w
        toacc = _o_acc_table(tabs, plan, layer)
        st = (layer.p_in * ti)[:, None, None, :] \
            + (layer.p_w * tw)[None, :, None, :] \
            + toacc[None, None, :, :] \
            + layer.p_out * distinct
        sb = (layer.p_in * bi)[:, None, None, :] \
            + (layer.p_w * bw)[None, :, None, :] \
            + (layer.p_acc * bo)[None, None, :, :]
        shape = st.shape
        st_flat, sb_flat = st.reshape(-1), sb.reshape(-1)
        candidates += st_flat.size

        ideal_sb = np.where(st_flat == ideal, sb_flat, _HUGE).min()
        if min_ideal_sb is None or ideal_sb < min_ideal_sb:
            min_ideal_sb = int(ideal_sb)

        flat = int(sb_flat.argmin())
        sb_floor = int(sb_flat[flat])
        fb = (sb_floor, int(st_flat[flat]), oi, flat)
        if fallback is None or fb[:2] < fallback[:2]:
            fallback = fb

        # Past the point where the unconstrained optimum fits, winner and
        # tie-break are budget-invariant: every newly admitted candidate has
        # a strictly larger buffer than the stage-two minimum.
        m1_inf = int(st_flat.min())
        plateau = int(sb_flat[st_flat == m1_inf].min())
        plateau_winner: _Winner | None = None

        for bidx, budget in enumerate(budgets):
            if budget < sb_floor:
                continue
            if budget >= plateau:
                if plateau_winner is None:
                    plateau_winner = _reduce_budget(
                        st_flat, sb_flat, toacc, shape, budget, plan, layer,
                        tiles, cand)
                winner = plateau_winner
            else:
                winner = _reduce_budget(st_flat, sb_flat, toacc, shape,
                                        budget, plan, layer, tiles, cand)
            if winner is None:
                continue
            ordering_best[oi, bidx] = winner.total
            cur = winners[bidx]
            if cur is None or winner.key() < cur.key():
                winners[bidx] = winner

    results = []
    for bidx, budget in enumerate(budgets):
        if winners[bidx] is not None:
            results.append(_materialize(winners[bidx], layer, budget, candidates))
        else:
            results.append(_materialize_fallback(fallback, table, layer,
                                                 budget, tiles, candidates))
    if min_ideal_sb is None or min_ideal_sb >= _HUGE:
        min_ideal_sb = -1  # explicit tile menus can exclude the untiled nest
    return LayerEvaluation(
        layer=layer, budgets=tuple(budgets), results=tuple(results),
        orderings=orderings, ordering_best=ordering_best,
        min_budget_ideal=min_ideal_sb, candidates=candidates,
    )


def _materialize_fallback(fallback, table, layer, budget, tiles, candidates
                          ) -> SearchResult:
    """No candidate fits: report the smallest-buffer one as infeasible."""
    _, _, oi, flat = fallback
    ordering = table.orderings[oi]
    plan = table.plan(ordering)
    cand = plan.cand_levels
    shape = (len(cand["I"]), len(cand["W"]), len(cand["O"]), tiles[0].size)
    i, j, k, t = np.unravel_index(flat, shape)
    mss, css, iss, jss = (int(v[t]) for v in tiles)
    lv = (cand["I"][i], cand["W"][j], cand["O"][k])
    _, (li, lw, lo) = _compact_levels(layer, mss, css, iss, jss, lv)
    schedule = instantiate(ordering, Tiles(mss, css, iss, jss), layer)
    assignment = BufferingAssignment(li, lw, lo)
    report = traffic(schedule, assignment, budget)
    assert not report.feasible
    return SearchResult(layer_name=layer.name, budget=budget,
                        schedule=schedule, assignment=assignment,
                        report=report, candidates=candidates)


def best_schedule(layer: LayerShape, budget: int,
                  config: SearchConfig | None = None) -> SearchResult:
    """Minimal-traffic feasible schedule for one layer and budget."""
    config = config or SearchConfig()
    if budget <= 0:
        raise ValidationError("budget must be positive")
    ev = evaluate_layer(layer, (budget,), config.tile_policy, config.prune)
    return ev.results[0]


def min_budget_for_ideal(layer: LayerShape,
                         policy: TilePolicy | None = None,
                         prune: bool = True) -> int:
    """Smallest buffer capacity at which some schedule reaches ideal traffic."""
    ev = evaluate_layer(layer, (1,), policy, prune)
    if ev.min_budget_ideal < 0:
        raise ValidationError("ideal traffic unreachable under this tile policy")
    return ev.min_budget_ideal


def ideal_report(layer: LayerShape) -> TrafficReport:
    """The per-array decomposition of the reuse floor, as a report row."""
    t_in = layer.p_in * layer.c_in * layer.eff_h * layer.eff_w
    t_w = layer.p_w * layer.c_out * layer.c_in * layer.k_h * layer.k_w
    t_o = layer.p_out * layer.c_out * layer.out_h * layer.out_w
    return TrafficReport(t_in=t_in, t_w=t_w, t_o_acc=0, t_o_final=t_o,
                         total=t_in + t_w + t_o, b_in=0, b_w=0, b_o=0,
                         feasible=True)


# ---------------------------------------------------------------------------
# Parallel evaluation and the sweep / distribution front-ends.

def worker_count() -> int:
    env = os.environ.get("CONVSCHED_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"CONVSCHED_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ValidationError("CONVSCHED_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _parallel_map(fn, tasks: list) -> list:
    """Order-preserving map, in processes when more than one worker helps."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _evaluate_task(args) -> LayerEvaluation:
    layer, budgets, policy, prune = args
    return evaluate_layer(layer, budgets, policy, prune)


def evaluate_layers(layers, budgets, policy: TilePolicy | None = None,
                    prune: bool = True) -> list[LayerEvaluation]:
    policy = policy or TilePolicy()
    tasks = [(layer, tuple(budgets), policy, prune) for layer in layers]
    return _parallel_map(_evaluate_task, tasks)


@dataclass(frozen=True)
class SweepRow:
    suite: str
    layer: str
    model: str
    budget: int
    report: TrafficReport | None   # None when the model has no schedule at all
    schedule_json: str | None
    candidates: int


@dataclass(frozen=True)
class AggregateRow:
    suite: str
    model: str
    budget: int
    t_in: int
    t_w: int
    t_o_acc: int
    t_o_final: int
    total: int
    buffer_bytes: int
    feasible: bool
    overhead_vs_ours_pct: float | None


@dataclass(frozen=True)
class SweepResult:
    suite_name: str
    budgets: tuple[int, ...]
    models: tuple[str, ...]
    rows: tuple[SweepRow, ...]
    aggregates: tuple[AggregateRow, ...]


def _sweep_task(args) -> list[tuple[TrafficReport | None, str | None, int]]:
    """Per-budget (report, schedule serialization, candidate count) rows."""
    layer, model, budgets, policy, prune = args
    if model == "ours":
        ev = evaluate_layer(layer, budgets, policy, prune)
        return [(r.report, schedule_to_json(r.schedule, r.assignment),
                 r.candidates) for r in ev.results]
    if model == "peemen":
        from . import baselines
        return [_result_row(baselines.peemen_best(layer, b, policy))
                for b in budgets]
    if model == "cache":
        from . import baselines
        return [_result_row(baselines.cache_best(layer, b, policy))
                for b in budgets]
    if model == "hwc":
        from . import casestudy
        out = []
        for b in budgets:
            cfg = casestudy.HwcConfig(budget=b)
            sch, asg, rep = casestudy.hwc_schedule(layer, cfg)
            out.append((rep, schedule_to_json(sch, asg), 0))
        return out
    if model == "hwce":
        from . import casestudy
        out = []
        for b in budgets:
            cfg = casestudy.HwcConfig(budget=b)
            sch, asg, rep = casestudy.hwce_schedule(layer, cfg)
            serial = schedule_to_json(sch, asg) if sch is not None else None
            out.append((rep, serial, 0))
        return out
    raise ValidationError(f"unknown model {model!r}")


def _result_row(res: SearchResult):
    return (res.report, schedule_to_json(res.schedule, res.assignment),
            res.candidates)


def sweep(suite: LayerSuite, config: SearchConfig | None = None,
          models: tuple[str, ...] = ("ours", "peemen", "cache")) -> SweepResult:
    """Per-layer results and per-suite aggregate totals for several models.

    "ideal" rows (the full-reuse floor, budget-independent) are always
    included.  Aggregates sum traffic over the suite's layers; the peemen
    aggregate carries its percentage overhead against ours when both ran.
    """
    config = config or SearchConfig()
    for m in models:
        if m not in MODEL_ORDER:
            raise ValidationError(f"unknown model {m!r}")
    run_models = [m for m in MODEL_ORDER if m in models and m != "ideal"]
    budgets = config.budgets

    tasks = [(layer, model, budgets, config.tile_policy, config.prune)
             for layer in suite for model in run_models]
    outcomes = _parallel_map(_sweep_task, tasks)
    by_key = {}
    for (layer, model, *_), rows in zip(tasks, outcomes):
        by_key[layer.name, model] = rows

    all_models = run_models + ["ideal"]
    rows: list[SweepRow] = []
    for layer in suite:
        for model in all_models:
            for bidx, budget in enumerate(budgets):
                if model == "ideal":
                    rep, serial, cand = ideal_report(layer), None, 0
                else:
                    rep, serial, cand = by_key[layer.name, model][bidx]
                rows.append(SweepRow(suite=suite.name, layer=layer.name,
                                     model=model, budget=budget, report=rep,
                                     schedule_json=serial, candidates=cand))

    aggregates: list[AggregateRow] = []
    totals: dict[tuple[str, int], int] = {}
    for model in all_models:
        for budget in budgets:
            cell = [r for r in rows if r.model == model and r.budget == budget]
            present = [r.report for r in cell if r.report is not None]
            agg = {f: sum(getattr(r, f) for r in present)
                   for f in ("t_in", "t_w", "t_o_acc", "t_o_final", "total",
                             "buffer_bytes")}
            feasible = all(r.report is not None and r.report.feasible
                           for r in cell)
            totals[model, budget] = agg["total"]
            overhead = None
            if model == "peemen" and ("ours", budget) in totals \
                    and totals["ours", budget] > 0:
                ours = totals["ours", budget]
                overhead = 100.0 * (agg["total"] - ours) / ours
            aggregates.append(AggregateRow(
                suite=suite.name, model=model, budget=budget,
                feasible=feasible, overhead_vs_ours_pct=overhead, **agg))
    return SweepResult(suite_name=suite.name, budgets=budgets,
                       models=tuple(all_models), rows=tuple(rows),
                       aggregates=tuple(aggregates))


# ---------------------------------------------------------------------------
# Permutation-quality distribution.

DISTRIBUTION_BINS = ("optimal", "within+10%", "within+20%", "within+50%",
                     "within2x", "over2x")


def _bin_index(per_best: int, global_best: int) -> int:
    # Integer-exact thresholds; per_best >= global_best >= 1 always.
    if per_best == global_best:
        return 0
    if per_best * 10 <= global_best * 11:
        return 1
    if per_best * 5 <= global_best * 6:
        return 2
    if per_best * 2 <= global_best * 3:
        return 3
    if per_best <= 2 * global_best:
        return 4
    return 5


@dataclass(frozen=True)
class DistributionTable:
    budgets: tuple[int, ...]
    bins: tuple[str, ...]
    fractions: tuple[tuple[float, ...], ...]  # per budget, summing to 1
    layer_count: int
    ordering_count: int


def distribution_from(evaluations: list[LayerEvaluation]) -> DistributionTable:
    """Bin each ordering by its summed-over-layers best traffic per budget.

    Each of the 180 orderings gets one aggregate number per budget: the sum
    over the layer set of its best-achievable traffic there.  Bins compare
    that against the best aggregate with integer-exact thresholds.  An
    ordering infeasible on any layer lands in the worst bin.
    """
    budgets = evaluations[0].budgets
    n_ord = len(evaluations[0].orderings)
    rows = []
    for bidx in range(len(budgets)):
        agg = np.zeros(n_ord, dtype=np.int64)
        broken = np.zeros(n_ord, dtype=bool)
        for ev in evaluations:
            assert ev.budgets == budgets and len(ev.orderings) == n_ord
            col = ev.ordering_best[:, bidx]
            broken |= col < 0
            agg += np.where(col < 0, 0, col)
        counts = np.zeros(len(DISTRIBUTION_BINS), dtype=np.int64)
        ok = ~broken
        counts[5] += int(broken.sum())
        if ok.any():
            gb = int(agg[ok].min())
            for v in agg[ok]:
                counts[_bin_index(int(v), gb)] += 1
        rows.append(tuple(counts / n_ord))
    return DistributionTable(
        budgets=budgets, bins=DISTRIBUTION_BINS, fractions=tuple(rows),
        layer_count=len(evaluations), ordering_count=n_ord,
    )


def distribution(layers, budgets, policy: TilePolicy | None = None,
                 prune: bool = True) -> DistributionTable:
    evals = evaluate_layers(layers, tuple(budgets), policy, prune)
    return distribution_from(evals)

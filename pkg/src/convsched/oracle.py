"""Brute-force trace oracle for the analytical traffic model.

Walks every iteration of a scheduled nest and counts actual off-buffer
transfers under the buffering-level semantics: a read of I or W misses the
local buffer exactly when that element has not been touched before within
the current execution instance of the array's buffering loop, and an output
element spills a partial sum (one write plus one later read, at accumulator
precision) whenever its accumulation spans more than one instance of O's
buffering loop.

The walk counts distinct (instance, element) pairs directly with no closed
forms, so it is an independent check of model.py, not a restatement of it.
Work is O(total iterations); a cap refuses layers beyond desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ARRAYS, Axis, BufferingAssignment, Schedule, traffic

_CHUNK = 1 << 18

_AXIS_SLOT = {Axis.OF: 0, Axis.IF: 1, Axis.SY: 2, Axis.SX: 3,
              Axis.FY: 4, Axis.FX: 5}


class OracleCapError(RuntimeError):
    """The nest is too large to simulate; carries the required iteration count."""

    def __init__(self, required: int, cap: int):
        super().__init__(
            f"simulation needs {required} iterations, over the cap of {cap}")
        self.required = required
        self.cap = cap


@dataclass(frozen=True)
class TraceStats:
    """Measured off-buffer transfer counts for one simulated nest."""

    loads_i: int
    loads_w: int
    writes_o_partial: int
    reads_o_partial: int
    writes_o_final: int
    bytes_total: int
    iterations: int

    def __post_init__(self) -> None:
        assert self.reads_o_partial == self.writes_o_partial
        assert min(self.loads_i, self.loads_w, self.writes_o_partial,
                   self.writes_o_final, self.bytes_total, self.iterations) >= 0


@dataclass(frozen=True)
class ValidationReport:
    """Model-vs-oracle relative errors; positive means the model overcounts."""

    model: "object"
    oracle: TraceStats
    rel_err_i: float
    rel_err_w: float
    rel_err_o: float
    rel_err_total: float
    undercounts: tuple[str, ...]


def simulate(schedule: Schedule, assignment: BufferingAssignment,
             cap: int = 10 ** 8) -> TraceStats:
    assignment.check(schedule)
    layer = schedule.layer
    loops = schedule.loops
    n = len(loops)
    extents = [l.extent for l in loops]
    total = math.prod(extents)
    if total > cap:
        raise OracleCapError(required=total, cap=cap)

    strides = [1] * n
    for j in range(1, n):
        strides[j] = strides[j - 1] * extents[j - 1]

    # Per-loop weight into each global axis index: a tile-body counter adds
    # itself, a controlling counter adds counter * tile size.
    weights = np.zeros((n, 6), dtype=np.int64)
    for j, loop in enumerate(loops):
        slot = _AXIS_SLOT[loop.axis]
        weights[j, slot] = 1 if loop.is_tile_loop else \
            schedule.tiles.for_axis(loop.axis, layer)

    eff_h, eff_w = layer.eff_h, layer.eff_w
    sizes = {
        "I": layer.c_in * eff_h * eff_w,
        "W": layer.c_out * layer.c_in * layer.k_h * layer.k_w,
        "O": layer.c_out * layer.out_h * layer.out_w,
    }
    blocks = {}
    for array, lvl in (("I", assignment.level_i), ("W", assignment.level_w),
                       ("O", assignment.level_o)):
        blocks[array] = strides[lvl] * extents[lvl]
        if total // blocks[array] * sizes[array] >= 1 << 62:
            raise OracleCapError(required=total, cap=cap)

    merged = {a: np.empty(0, dtype=np.int64) for a in ARRAYS}
    valid_iterations = 0

    for lo in range(0, total, _CHUNK):
        it = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        counters = np.empty((n, it.size), dtype=np.int64)
        for j in range(n):
            counters[j] = (it // strides[j]) % extents[j]
        idx = weights.T @ counters  # rows: m, c, y, x, ky, kx
        m, c, y, x, ky, kx = idx

        valid = (m < layer.c_out) & (c < layer.c_in) \
            & (y < layer.out_h) & (x < layer.out_w)
        valid_iterations += int(valid.sum())
        itv = it[valid]
        m, c, y, x, ky, kx = (a[valid] for a in idx)

        elems = {
            "I": (c * eff_h + (y * layer.stride + ky)) * eff_w
                 + (x * layer.stride + kx),
            "W": ((m * layer.c_in + c) * layer.k_h + ky) * layer.k_w + kx,
            "O": (m * layer.out_h + y) * layer.out_w + x,
        }
        for array in ARRAYS:
            keys = (itv // blocks[array]) * sizes[array] + elems[array]
            merged[array] = np.union1d(merged[array], keys)

    loads_i = len(merged["I"])
    loads_w = len(merged["W"])
    pairs_o = len(merged["O"])
    distinct_o = len(np.unique(merged["O"] % sizes["O"]))
    assert distinct_o == sizes["O"]
    spills = pairs_o - distinct_o

    bytes_total = (layer.p_in * loads_i + layer.p_w * loads_w
                   + layer.p_acc * 2 * spills + layer.p_out * distinct_o)
    return TraceStats(
        loads_i=loads_i, loads_w=loads_w,
        writes_o_partial=spills, reads_o_partial=spills,
        writes_o_final=distinct_o,
        bytes_total=bytes_total, iterations=valid_iterations,
    )


def validate(schedule: Schedule, assignment: BufferingAssignment,
             cap: int = 10 ** 8) -> ValidationReport:
    """Relative model error per array and in total, plus undercount flags.

    The model is meant to overestimate or match; any array where it counts
    fewer bytes than the oracle is reported in `undercounts`.
    """
    stats = simulate(schedule, assignment, cap=cap)
    layer = schedule.layer
    report = traffic(schedule, assignment)
    oracle_bytes = {
        "I": layer.p_in * stats.loads_i,
        "W": layer.p_w * stats.loads_w,
        "O": layer.p_acc * (stats.writes_o_partial + stats.reads_o_partial)
             + layer.p_out * stats.writes_o_final,
    }
    model_bytes = {
        "I": report.t_in,
        "W": report.t_w,
        "O": report.t_o_acc + report.t_o_final,
    }
    undercounts = tuple(a for a in ARRAYS if model_bytes[a] < oracle_bytes[a])
    rel = {a: (model_bytes[a] - oracle_bytes[a]) / oracle_bytes[a] for a in ARRAYS}
    total_oracle = sum(oracle_bytes.values())
    assert total_oracle == stats.bytes_total
    return ValidationReport(
        model=report, oracle=stats,
        rel_err_i=rel["I"], rel_err_w=rel["W"], rel_err_o=rel["O"],
        rel_err_total=(report.total - total_oracle) / total_oracle,
        undercounts=undercounts,
    )

"""Shared fixtures: a desk-scale layer and the (expensive) corpus sweep.

The corpus fixtures run the exhaustive search plus both baselines over
every built-in layer at the nine budgets 1 kB..256 kB.  That is a couple
of minutes of work, so they are session-scoped and only the acceptance
tests touch them; the unit-test modules stay fast on their own.
"""
from __future__ import annotations

import pytest

from convsched import (
    Axis,
    LayerShape,
    Tiles,
    builtin_suite,
    BUILTIN_SUITE_NAMES,
    cache_results,
    evaluate_layer,
    instantiate,
    peemen_best,
)

# Innermost-first: the untiled nest of the reference formulation.
CANONICAL_ORDER = (Axis.FX, Axis.FY, Axis.SX, Axis.SY, Axis.IF, Axis.OF)

SWEEP_BUDGETS = tuple(1024 * 2 ** k for k in range(9))  # 1 kB .. 256 kB


def make_tiny() -> LayerShape:
    """6x6 outputs, 3x3 kernel, stride 1, 2 in / 4 out maps, 1-byte data."""
    return LayerShape(name="tiny", out_h=6, out_w=6, k_h=3, k_w=3,
                      stride=1, c_in=2, c_out=4)


def untiled(layer: LayerShape, order=CANONICAL_ORDER):
    tiles = Tiles(mss=layer.c_out, css=layer.c_in,
                  iss=layer.out_h, jss=layer.out_w)
    return instantiate(order, tiles, layer)


@pytest.fixture
def tiny() -> LayerShape:
    return make_tiny()


@pytest.fixture(scope="session")
def corpus_evaluations():
    """{suite name: [LayerEvaluation at SWEEP_BUDGETS, one per layer]}."""
    out = {}
    for name in BUILTIN_SUITE_NAMES:
        out[name] = [evaluate_layer(layer, SWEEP_BUDGETS)
                     for layer in builtin_suite(name)]
    return out


@pytest.fixture(scope="session")
def corpus_baselines():
    """{suite name: {(layer name, budget): (peemen result, cache result)}}."""
    out = {}
    for name in BUILTIN_SUITE_NAMES:
        rows = {}
        for layer in builtin_suite(name):
            cache = cache_results(layer, SWEEP_BUDGETS)
            for budget, c_res in zip(SWEEP_BUDGETS, cache):
                rows[layer.name, budget] = (peemen_best(layer, budget), c_res)
        out[name] = rows
    return out

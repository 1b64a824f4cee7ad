"""Regenerate the regression fixtures under tests/fixtures.

    python3 scripts/make_fixtures.py argmin      # 50-start ring minimum, a few minutes
    python3 scripts/make_fixtures.py reference   # kink-tracking value of that argmin
    python3 scripts/make_fixtures.py stats       # two-sample test data
    python3 scripts/make_fixtures.py series      # controller error time series
    python3 scripts/make_fixtures.py extrema     # target extrema bounds
"""
import argparse
import json
import math
from pathlib import Path

import numpy as np

from swarmcov import io as sio
from swarmcov.density import default_ring
from swarmcov.extrema import OptimizerSettings, minimize_error
from swarmcov.metric import reference_error
from swarmcov.statistics import settling_analysis

FIX = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

RING_SEED = 1
# target summary numbers the synthetic fixtures are built to reproduce
SAMPLED = dict(n=1000, mean=0.4933, sd=0.02484)
F_STAT, T_STAT = 1.0831, 8.5888
CI = (0.00717, 0.01141)
E_MINUS, E_PLUS, E_Q3 = 0.28205, 1.9867, 0.5157


def exact_moments(gen, n, mean, sd):
    x = gen.standard_normal(n)
    x = (x - x.mean()) / x.std(ddof=1)
    return mean + sd * x


def make_argmin():
    res = minimize_error(default_ring(), 200, 2.0, OptimizerSettings(starts=50, seed=RING_SEED))
    sio.write_swarm(FIX / "ring_argmin.csv", res.config)
    print("e_minus", res.value, "best start", res.best_record)


def make_reference():
    cfg = sio.read_swarm(FIX / "ring_argmin.csv")
    value, est = reference_error(cfg, default_ring())
    (FIX / "ring_argmin_reference.json").write_text(
        json.dumps({"value": value, "error_estimate": est, "method": "reference_error rtol=1e-10"}, indent=2) + "\n")
    print("reference", value, est)


def make_stats():
    gen = np.random.default_rng(20)
    var_c = SAMPLED["sd"] ** 2 * F_STAT
    half = 0.5 * (CI[1] - CI[0])
    se = half / 1.959964  # large-sample t quantile
    n_c = round(var_c / (se * se - SAMPLED["sd"] ** 2 / SAMPLED["n"]))
    se = math.sqrt(var_c / n_c + SAMPLED["sd"] ** 2 / SAMPLED["n"])
    diff = T_STAT * se
    sampled = exact_moments(gen, SAMPLED["n"], SAMPLED["mean"], SAMPLED["sd"])
    ctrl = exact_moments(gen, n_c, SAMPLED["mean"] + diff, math.sqrt(var_c))
    sio.write_values(FIX / "sampled_errors.csv", sampled, label="e")
    sio.write_values(FIX / "controller_errors.csv", ctrl, label="e")
    print("controller n", n_c, "mean", ctrl.mean(), "sd", ctrl.std(ddof=1))


def make_series():
    gen = np.random.default_rng(7)
    t = np.arange(0.0, 600.0, 1.0)
    e = 0.51 + 1.15 * np.exp(-t / 25.0) + 0.025 * gen.standard_normal(t.size)
    sa = settling_analysis(t, e)
    e = e + (E_Q3 - sa.e_q3)
    sio.write_series(FIX / "controller_series.csv", t, e)
    print(settling_analysis(t, e))


def make_extrema():
    sio.write_rows(FIX / "target_result.csv", ["mode", "start", "seed", "converged", "iterations", "value", "delta", "reason"],
                   [["min", 0, 0, 1, 0, E_MINUS, 2.0, "target"], ["max", 0, 0, 1, 0, E_PLUS, 2.0, "target"]])


if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("what", nargs="+", choices=["argmin", "reference", "stats", "series", "extrema"])
    for w in p.parse_args().what:
        globals()[f"make_{w}"]()

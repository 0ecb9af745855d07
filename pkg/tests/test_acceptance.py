"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest (lines are printed even with output capture on) or as a
script: ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import math
import os
import subprocess
import sys
import time
from typing import Callable, Dict, List, NamedTuple

import numpy as np
import pytest

from collarflow.collar import collar_from_width, max_collar_width
from collarflow.errors import BranchBoundaryDegenerate
from collarflow.oracle import (
    Branch,
    MeasureConstants,
    collar_section_measures,
    derived_section_measures,
    symmetry_check,
    verify_report,
)
from collarflow.stats import ExperimentConfig, run_experiment

LENGTH_A = 2.0 * math.acosh(1.5)
AREA = 2.0 * math.pi
CONSTS = MeasureConstants(area_s=AREA, epsilon=1.0)
SEED = 1

# tolerances pinned from the acceptance list
TOL_QUAD = 1e-8
TOL_RATE = 0.03
TOL_RETURN = 0.05
TOL_LENGTH = 0.03
TOL_GAP = 0.03
TOL_DEPTH = 0.02
MIN_DEPTH_SAMPLE = 10_000


class Line(NamedTuple):
    label: str
    ok: bool
    detail: str

    def render(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.label}: {self.detail}"


def _rel(a, b):
    return abs(a - b) / abs(b)


@functools.lru_cache(maxsize=None)
def desk_run(r_frac: float) -> dict:
    cfg = ExperimentConfig(r_frac=r_frac, r0_frac=0.8, time=2.0e4, n_traj=64, seed=SEED)
    start = time.perf_counter()
    report = run_experiment(cfg)
    report["_seconds"] = time.perf_counter() - start
    return report


# -- 1: thickened geodesic section -------------------------------------------------------------


def criterion_1() -> List[Line]:
    lines = []
    for length in (0.5, 1.0, 2.0, LENGTH_A):
        start = time.perf_counter()
        rep = verify_report(length, 0.3 * max_collar_width(length), CONSTS)
        secs = time.perf_counter() - start
        thick = rep["thick_section"]
        ok = thick["rel_error"] <= TOL_QUAD and secs < 1.0
        lines.append(Line(f"1 thick section l={length:.6f}", ok, f"rel_error={thick['rel_error']:.2e} time={secs:.2f}s"))
    return lines


# -- 2: collar section pieces ---------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _collar_cases():
    """Ten (length, width) pairs, five in each branch, from a fixed seed."""
    rng = np.random.default_rng(2024)
    want = {Branch.ZETA_A_SMALL: 5, Branch.ZETA_A_LARGE: 5}
    start = time.perf_counter()
    out = []
    while any(want.values()):
        length = float(rng.uniform(0.3, 5.0))
        r = float(rng.uniform(0.05, 0.95)) * max_collar_width(length)
        try:
            rep = collar_section_measures(collar_from_width(length, r), CONSTS)
        except BranchBoundaryDegenerate:
            continue
        if want[rep.branch]:
            want[rep.branch] -= 1
            out.append((length, r, rep))
    return out, time.perf_counter() - start


def _worst(values):
    return max(values) if values else math.nan


def criterion_2a() -> List[Line]:
    """Outer pieces against the printed closed forms."""
    cases, _ = _collar_cases()
    errs = []
    for _, _, rep in cases:
        printed = dict(rep.printed_pieces)
        nums = {p.name: p.numeric for p in rep.pieces}
        errs += [_rel(nums[k], printed[k]) for k in ("M1", "M3") if k in printed]
    return [Line("2a M1, M3 vs printed closed forms", _worst(errs) <= TOL_QUAD, f"max rel_error={_worst(errs):.2e} over {len(errs)} pieces")]


def criterion_2b() -> List[Line]:
    """Middle piece against the printed closed form."""
    cases, _ = _collar_cases()
    errs = []
    for _, _, rep in cases:
        printed = dict(rep.printed_pieces)
        if "M2" in printed:
            num = next(p.numeric for p in rep.pieces if p.name == "M2")
            errs.append(_rel(num, printed["M2"]))
    return [Line("2b M2 vs printed closed form", _worst(errs) <= TOL_QUAD, f"max rel_error={_worst(errs):.2e} over {len(errs)} pieces")]


def criterion_2c() -> List[Line]:
    cases, secs = _collar_cases()
    errs = [rep.rel_error for _, _, rep in cases]
    branches = {rep.branch for _, _, rep in cases}
    ok = _worst(errs) <= TOL_QUAD and len(cases) == 10 and len(branches) == 2 and secs < 10.0
    return [Line("2c sum vs eps(1+cosh r)l/(2 pi area), both branches", ok,
                 f"max rel_error={_worst(errs):.2e} cases={len(cases)} branches={sorted(b.value for b in branches)} time={secs:.2f}s")]


def criterion_2d() -> List[Line]:
    cases, _ = _collar_cases()
    errs = [p.rel_error for _, _, rep in cases for p in rep.pieces]
    return [Line("2d all pieces vs derived closed forms", _worst(errs) <= TOL_QUAD, f"max rel_error={_worst(errs):.2e} over {len(errs)} pieces")]


# -- 3: derived identities ---------------------------------------------------------------------------


def criterion_3() -> List[Line]:
    spec = collar_from_width(LENGTH_A, 0.4 * max_collar_width(LENGTH_A))
    d = derived_section_measures(spec, CONSTS)
    identity = d.identity_residual()
    errs = [_rel(d.J0_numeric, d.J0), _rel(d.J1_numeric, d.J1), _rel(d.J3_numeric, d.J3)]
    ok_sym, failures = symmetry_check(spec, n=10_000)
    return [
        Line("3 J0 = 2 J1 + J3 in closed form", identity == 0.0, f"residual={identity:.1e}"),
        Line("3 numeric J0, J1, J3", max(errs) <= TOL_QUAD, f"max rel_error={max(errs):.2e}"),
        Line("3 symmetry_check on 1e4 samples", ok_sym and failures == 0, f"failures={failures}"),
    ]


# -- 4-8: desk-scale simulation -------------------------------------------------------------------


def criterion_4() -> List[Line]:
    rep = desk_run(0.4)
    emp = rep["empirical"]["crossing_rate_total"][0]
    expect = 2 * LENGTH_A / (2 * math.pi ** 2)
    err = _rel(emp, expect)
    return [Line("4 crossing rate vs 2l/(2 pi^2)", err <= TOL_RATE,
                 f"empirical={emp:.5f} theory={expect:.5f} rel_error={err:.4f} runtime={rep['_seconds']:.0f}s")]


def criterion_5() -> List[Line]:
    rep = desk_run(0.4)
    r = rep["geometry"]["r"]
    n0 = LENGTH_A * math.cosh(r) / (2 * math.pi ** 2)
    n1 = LENGTH_A * (math.cosh(r) - 1) / (2 * math.pi ** 2)
    lines = []
    for s in ("A", "B"):
        e0 = rep["empirical"][f"entry_rate_{s}"][0]
        e1 = rep["empirical"][f"return_rate_{s}"][0]
        lines.append(Line(f"5 entry rate N0 side {s}", _rel(e0, n0) <= TOL_RATE, f"empirical={e0:.5f} theory={n0:.5f} rel_error={_rel(e0, n0):.4f}"))
        lines.append(Line(f"5 return rate N1 side {s}", _rel(e1, n1) <= TOL_RETURN, f"empirical={e1:.5f} theory={n1:.5f} rel_error={_rel(e1, n1):.4f}"))
    return lines


def criterion_6() -> List[Line]:
    lines = []
    for frac in (0.2, 0.4, 0.6):
        rep = desk_run(frac)
        r = rep["geometry"]["r"]
        emp = rep["empirical"]["excursion_length"][0]
        expect = 2 * math.pi * math.tanh(r)
        err = _rel(emp, expect)
        lines.append(Line(f"6 excursion length vs 2 pi tanh r, r={frac}R", err <= TOL_LENGTH,
                          f"empirical={emp:.5f} theory={expect:.5f} rel_error={err:.4f}"))
    return lines


def criterion_7() -> List[Line]:
    rep = desk_run(0.4)
    emp = rep["empirical"]["gap_length"][0]
    expect = math.pi ** 2 / LENGTH_A
    err = _rel(emp, expect)
    return [Line("7 gap between core crossings vs pi^2/l", err <= TOL_GAP, f"empirical={emp:.4f} theory={expect:.4f} rel_error={err:.4f}")]


def criterion_8() -> List[Line]:
    rep = desk_run(0.4)
    emp = rep["empirical"]
    r0 = rep["geometry"]["r0"]
    cdf = emp["depth_cdf"]
    sup = max(abs(row["empirical"] - math.cosh(row["r"]) / math.cosh(r0)) for row in cdf)
    ok = sup <= TOL_DEPTH and len(cdf) == 20 and emp["depth_count"] >= MIN_DEPTH_SAMPLE
    return [Line("8 depth CDF vs cosh r / cosh R0", ok, f"sup={sup:.4f} grid={len(cdf)} excursions={emp['depth_count']}")]


# -- 9: property suites ------------------------------------------------------------------------------------


def criterion_9() -> List[Line]:
    here = os.path.dirname(os.path.abspath(__file__))
    cmd = [sys.executable, "-m", "pytest", "-m", "properties", "-q", "-p", "no:cacheprovider",
           here, "--ignore", os.path.abspath(__file__)]
    res = subprocess.run(cmd, capture_output=True, text=True)
    tail = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else res.stderr.strip()[-200:]
    return [Line("9 property suites", res.returncode == 0, tail)]


CRITERIA: Dict[str, Callable[[], List[Line]]] = {
    "1": criterion_1,
    "2a": criterion_2a,
    "2b": criterion_2b,
    "2c": criterion_2c,
    "2d": criterion_2d,
    "3": criterion_3,
    "4": criterion_4,
    "5": criterion_5,
    "6": criterion_6,
    "7": criterion_7,
    "8": criterion_8,
    "9": criterion_9,
}


@pytest.mark.slow
@pytest.mark.parametrize("key", list(CRITERIA))
def test_criterion(key, capsys):
    lines = CRITERIA[key]()
    with capsys.disabled():
        print()
        for line in lines:
            print(line.render())
    assert all(line.ok for line in lines), [line.render() for line in lines if not line.ok]


@pytest.mark.slow
def test_excursion_length_is_mean_chord():
    """Not an acceptance line: the measured mean excursion length sits on
    pi tanh r, half the value in criterion 6."""
    for frac in (0.2, 0.4, 0.6):
        rep = desk_run(frac)
        r = rep["geometry"]["r"]
        assert rep["empirical"]["excursion_length"][0] == pytest.approx(math.pi * math.tanh(r), rel=TOL_LENGTH)


if __name__ == "__main__":
    failed = 0
    for fn in CRITERIA.values():
        for line in fn():
            print(line.render(), flush=True)
            failed += not line.ok
    sys.exit(1 if failed else 0)

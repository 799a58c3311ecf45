"""Acceptance criteria AC1-AC11 at their stated sizes and tolerances.

Statistical criteria run through the ``mwpt`` command itself, so the
numbers checked here are the rows those commands write.  Each test records
a PASS/FAIL line; the summary is printed at the end of the session.
"""
import json
import time

import numpy as np
import pytest

from mwpt.cli import main
from mwpt.filter_bank import builtin_bank, builtin_names, check_paraunitary
from mwpt.path_algebra import NodeIndex, band, gray_permute, gray_table
from mwpt.wpt import decompose, decompose_shannon, reconstruct

SEED = "20240601"
EXPERIMENTS = {
    "whiten": ["--K", "262144", "--R", "64", "--j_range", "3,7", "--L", "32",
               "--oracle.J", "4", "--oracle.lags", "8"],
    "clt": ["--K", "262144", "--R", "64", "--j_range", "2,7", "--noise", "uniform"],
    "converge": ["--K", "262144", "--R", "64", "--J", "4", "--L", "8", "--r_list", "1,2,4,8,16"],
    "spectrum": ["--K", "262144", "--R", "64", "--J", "5"],
}
COMMON = ["--M", "2", "--spec.name", "raised-cosine", "--path.cycle", "1", "--seed", SEED]
REPORT_FILES = {
    "whiten": ["whiten.csv", "whiten_oracle.csv", "whiten.json"],
    "clt": ["clt.csv", "clt.json"],
    "converge": ["converge.csv", "converge.json"],
    "spectrum": ["spectrum.csv", "spectrum.json"],
    "selftest": ["selftest.csv", "selftest.json"],
}


def run_command(name, out, threads):
    args = [name] + ([] if name == "selftest" else COMMON + EXPERIMENTS[name])
    t0 = time.perf_counter()
    code = main(args + ["--out", str(out), "--threads", str(threads)])
    elapsed = time.perf_counter() - t0
    report = json.loads((out / f"{name}.json").read_text())
    return {"code": code, "report": report, "seconds": elapsed, "out": out}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = run_command(name, base / name, threads=1)
        return cache[name]

    return get


# --- AC1 ----------------------------------------------------------------------


def test_ac1_perfect_reconstruction(record):
    t0 = time.perf_counter()
    cases = [("haar", 4096), ("db4", 4096), ("db8", 4096),
             ("shannon:2", 4096), ("shannon:3", 2 * 3**6), ("shannon:4", 4096)]
    worst = 0.0
    rng = np.random.default_rng(1)
    for name, K in cases:
        bank = builtin_bank(name)
        x = rng.standard_normal(K)
        y = reconstruct(decompose(x, bank, 4), bank)
        worst = max(worst, np.linalg.norm(y - x) / np.linalg.norm(x))
    elapsed = time.perf_counter() - t0
    ok = record("AC1", "round trip", worst <= 1e-10, f"max rel err {worst:.2e}")
    ok &= record("AC1", "runtime", elapsed < 5, f"{elapsed:.2f}s < 5s")
    assert ok


# --- AC2 ----------------------------------------------------------------------


def test_ac2_gray_bijection_and_tiling(record):
    t0 = time.perf_counter()
    perm = tiling = True
    for M in (2, 3, 5):
        for j in range(9):
            g = gray_table(M, j)
            perm &= bool(np.array_equal(np.sort(g), np.arange(M**j)))
            bands = [band(j, p, M) for p in range(M**j)]
            tiling &= bands[0].lo_frac == 0 and bands[-1].hi_frac == 1
            tiling &= all(a.hi_frac == b.lo_frac for a, b in zip(bands, bands[1:]))
    elapsed = time.perf_counter() - t0
    ok = record("AC2", "permutation", perm)
    ok &= record("AC2", "exact tiling", tiling)
    ok &= record("AC2", "runtime", elapsed < 5, f"{elapsed:.2f}s < 5s")
    assert ok


# --- AC3 ----------------------------------------------------------------------


def test_ac3_paraunitarity(record):
    t0 = time.perf_counter()
    names = [n for n in builtin_names() if "<" not in n]
    names += [f"shannon:{M}" for M in range(2, 9)]
    devs = {n: check_paraunitary(builtin_bank(n), gridsize=1024).max_deviation for n in names}
    elapsed = time.perf_counter() - t0
    worst = max(devs, key=devs.get)
    ok = record("AC3", "unitarity", devs[worst] <= 1e-8,
                f"worst {worst} deviation {devs[worst]:.2e}")
    ok &= record("AC3", "runtime", elapsed < 5, f"{elapsed:.2f}s < 5s")
    assert ok


# --- AC4 ----------------------------------------------------------------------


def test_ac4_frequency_ordering(record):
    t0 = time.perf_counter()
    worst = 1.0
    j = 4
    for M in (2, 3):
        K = 8 * M**j
        t = np.arange(K)
        for n in range(M**j):
            p = gray_permute(NodeIndex.from_int(M, j, n)).n
            tree = decompose_shannon(np.cos(band(j, p, M).midpoint * t), M, j)
            e = {k: float(np.sum(c**2)) for k, c in tree.level(j).items()}
            worst = min(worst, e[n] / sum(e.values()))
    elapsed = time.perf_counter() - t0
    ok = record("AC4", "energy in G-predicted node", worst >= 0.999, f"min fraction {worst:.6f}")
    ok &= record("AC4", "runtime", elapsed < 30, f"{elapsed:.2f}s < 30s")
    assert ok


# --- AC5 / AC6 (whiten) -------------------------------------------------------


def test_ac5_variance_at_j7(runs, record):
    run = runs("whiten")
    row = run["report"]["tables"]["whiten"][-1]
    assert row["j"] == 7
    dev = abs(row["pooled_variance"] - row["band_average"])
    ok = record("AC5", "variance", dev <= 3 * row["variance_se"],
                f"|{row['pooled_variance']:.5f} - {row['band_average']:.5f}| "
                f"<= 3*{row['variance_se']:.5f}")
    assert ok


def test_ac5_whiteness_at_j7(runs, record):
    run = runs("whiten")
    row = run["report"]["tables"]["whiten"][-1]
    thr = 4 / np.sqrt(262144 / 2**7)
    ok = record("AC5", "whiteness", row["pooled_max_rho"] <= thr,
                f"max rho {row['pooled_max_rho']:.4f} <= {thr:.4f}")
    assert ok


def test_ac5_median_lag_trend(runs, record):
    run = runs("whiten")
    med = run["report"]["summary"]["median_max_norm_lag"]
    mono = all(b <= a for a, b in zip(med, med[1:]))
    ok = record("AC5", "median trend j=3..7", mono, "medians " + ", ".join(f"{m:.4f}" for m in med))
    ok &= record("AC5", "runtime", run["seconds"] < 180, f"{run['seconds']:.1f}s < 180s")
    assert ok


def test_ac6_exact_finite_level_identity(runs, record):
    run = runs("whiten")
    orc = run["report"]["summary"]["oracle"]
    rows = run["report"]["tables"]["whiten_oracle"]
    assert orc["J"] == 4 and orc["lags"] == 8 and len(rows) == 31 * 9
    within = sum(abs(r["empirical"] - r["exact"]) <= 4 * r["stderr"] for r in rows)
    frac = within / len(rows)
    ok = record("AC6", "oracle agreement", frac >= 0.95, f"{within}/{len(rows)} pairs within 4 SE")
    # shares its realizations with AC5; the whole command is held to the tighter budget
    ok &= record("AC6", "runtime", run["seconds"] < 120, f"{run['seconds']:.1f}s < 120s")
    assert ok


# --- AC7 ----------------------------------------------------------------------


def test_ac7_filter_convergence(runs, record):
    run = runs("converge")
    rows = [r for r in run["report"]["tables"]["converge"] if r["r"] != "shannon"]
    assert [r["r"] for r in rows] == [1, 2, 4, 8, 16]
    d = [r["sup_distance"] for r in rows]
    l2 = [r["response_l2"] for r in rows]
    ok = record("AC7", "dist(16) < dist(1)/4", d[-1] < d[0] / 4, f"{d[-1]:.4f} < {d[0] / 4:.4f}")
    ok &= record("AC7", "non-increasing (10%)", all(b <= 1.1 * a for a, b in zip(d, d[1:])),
                 "dists " + ", ".join(f"{v:.4f}" for v in d))
    ok &= record("AC7", "L2 decreasing", all(b < a for a, b in zip(l2, l2[1:])),
                 "l2 " + ", ".join(f"{v:.4f}" for v in l2))
    ok &= record("AC7", "runtime", run["seconds"] < 120, f"{run['seconds']:.1f}s < 120s")
    assert ok


# --- AC8 / AC9 (clt) ----------------------------------------------------------


def test_ac8_median_kurtosis_trend(runs, record):
    run = runs("clt")
    rows = run["report"]["tables"]["clt"]
    assert [r["j"] for r in rows] == [2, 3, 4, 5, 6, 7]
    med = [r["median_abs_excess_kurtosis"] for r in rows]
    ok = record("AC8", "median trend j=2..7", all(b <= a for a, b in zip(med, med[1:])),
                "medians " + ", ".join(f"{m:.4f}" for m in med))
    assert ok


def test_ac8_kurtosis_level_at_j7(runs, record):
    run = runs("clt")
    last = run["report"]["tables"]["clt"][-1]
    ok = record("AC8", "median at j=7 <= 0.05", last["median_abs_excess_kurtosis"] <= 0.05,
                f"{last['median_abs_excess_kurtosis']:.4f}")
    ok &= record("AC8", "runtime", run["seconds"] < 180, f"{run['seconds']:.1f}s < 180s")
    assert ok


def test_ac9_gaussianization(runs, record):
    run = runs("clt")
    last = run["report"]["tables"]["clt"][-1]
    frac = last["gaussian_pass_fraction"]
    ok = record("AC9", "z-scores within 4", frac >= 0.9, f"fraction {frac:.3f} >= 0.90")
    assert ok


# --- AC10 ---------------------------------------------------------------------


def test_ac10_spectrum_estimator(runs, record):
    run = runs("spectrum")
    s = run["report"]["summary"]
    rows = run["report"]["tables"]["spectrum"]
    assert len(rows) == 32
    rel = max(abs(r["value"] - r["band_average"]) / r["band_average"] for r in rows)
    ok = record("AC10", "band error", rel <= 0.05, f"max rel {rel:.4f} <= 0.05")
    ok &= record("AC10", "total power", s["total_power_rel_error"] <= 1e-6,
                 f"rel {s['total_power_rel_error']:.1e}")
    ok &= record("AC10", "runtime", run["seconds"] < 120, f"{run['seconds']:.1f}s < 120s")
    assert ok


# --- AC11 ---------------------------------------------------------------------


@pytest.mark.parametrize("name", ["selftest", "whiten", "clt", "converge", "spectrum"])
def test_ac11_determinism(runs, record, tmp_path, name):
    first = runs(name)
    again = run_command(name, tmp_path / name, threads=2)
    same = all(
        (first["out"] / f).read_bytes() == (again["out"] / f).read_bytes()
        for f in REPORT_FILES[name]
    )
    m1 = json.loads((first["out"] / "manifest.json").read_text())["outputs"]
    m2 = json.loads((again["out"] / "manifest.json").read_text())["outputs"]
    ok = record("AC11", name, same and m1 == m2 and first["code"] == again["code"],
                "byte-identical reports across reruns (1 vs 2 threads)")
    assert ok

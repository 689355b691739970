"""Smoke test for the mcal_py extension module.

Build and install the module first, e.g. with maturin:

    maturin develop -m crates/python/Cargo.toml --release

or build the shared library with cargo and put it on the path:

    cargo build -p mcal-py --release --features extension-module
    cp target/release/libmcal_py.so python/mcal_py.so

then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import mcal_py


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL {what}")
    print(f"ok   {what}")


def main():
    cfg = mcal_py.Config(intervals=30, moments=6)
    check(cfg.moments == 6 and cfg.kernel == "softcore", "config defaults")

    try:
        mcal_py.Config(moments=1)
    except ValueError:
        check(True, "invalid config rejected")
    else:
        check(False, "invalid config rejected")

    b = mcal_py.target_moments(cfg)
    check(len(b) == 6 and abs(sum(b) - 2.0) < 1e-12, "target moments sum to the particle number")

    report = mcal_py.run(cfg)
    check(report.status == "converged", f"small run converges ({report})")
    check(report.bracket_width <= 1e-6 * (1 + abs(report.upper)), "bracket closes")
    rows = report.history
    check(rows[0][0] == 0 and rows[-1][0] == report.iterations, "history covers every iteration")
    check(len(report.density) == len(report.nodes) == 31, "density sampled at the mesh nodes")
    check(max(abs(r) for r in report.moment_residuals) < 1e-7, "moments reproduced")

    # free pair in a box of half-width 10: 5 pi^2 / 800
    e0 = mcal_py.ground_energy([0.0, 0.0], intervals=100, kernel="none")
    want = 5 * math.pi**2 / 800
    check(abs(e0 - want) < 1e-3 * want, "free pair ground energy")

    sol = mcal_py.solve_sdp([[1.0, 0.0], [0.0, 2.0]], [[[1.0, 0.0], [0.0, 1.0]]], [1.0])
    check(sol["status"] == "Optimal" and abs(sol["primal_value"] - 1.0) < 1e-8, "trace-constrained SDP")

    checks = mcal_py.selftest("fem")
    check(all(passed for _, passed, _ in checks), "fem self-test")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()

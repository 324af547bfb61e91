"""Smoke test for the gshift Python module.

Build and run from the repository root:

    cargo build -p gshift-py --release
    cp target/release/libgshift_py.so crates/py/python/gshift.so
    python3 crates/py/python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import gshift  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    close(gshift.std_normal_cdf(1.0), 0.8413447460685429, 1e-14)
    close(gshift.ratio_r(1.0, 1.0), 0.6990731123718361, 1e-14)
    assert gshift.ratio_r(2.0, math.inf) == 1.0
    g, dg = gshift.slab_g(1.0, 1.0)
    close(g, 0.4772498680518208, 1e-14)
    close(dg, -0.3449513138882446, 1e-14)
    close(gshift.regularized_gamma_p(0.5, 0.5), 0.6826894921370859, 1e-12)
    close(gshift.oracle_ball(2, 2.0, 0.0), 1.0 - math.exp(-2.0), 1e-9)

    sigma = gshift.Covariance([[2.0, 0.3], [0.3, 1.0]])
    assert sigma.dim == 2
    slab = gshift.ConvexBody.from_json(
        json.dumps({"kind": "slab", "normal": [1, 0], "halfwidth": 1}), 2
    )
    assert slab.contains([0.5, 10.0]) and not slab.contains([1.5, 0.0])
    value, exact = slab.support([0.0, 1.0])
    assert value == math.inf and exact

    identity = gshift.Covariance.identity(2)
    report = gshift.ratio_bounds(identity, slab, [1.0, 0.0], 1.0)
    close(report.upper, 0.6990731123718361, 1e-12)
    close(report.lower, math.exp(-0.5), 1e-15)

    power = gshift.power_envelope(identity, slab, [0.0, 1.0], 2.0, 0.05)
    close(power.beta_upper, 0.8714314809252179, 1e-12)

    est = gshift.estimate_shift_prob(identity, slab, [1.0, 0.0], 1.0, 200_000, 7)
    assert abs(est.value - g) <= 4 * est.stderr, est

    ball = gshift.ConvexBody.from_json('{"kind": "lp_ball", "p": "inf", "radius": 1}', 2)
    verdict = gshift.verify_sandwich(sigma, ball, [1.0, 1.0], 1.0, 200_000, 3)
    assert verdict.passed, verdict

    config = {
        "dim": 2,
        "u": [1, 0],
        "t_grid": [0, 1, 2],
        "body": {"kind": "slab", "normal": [1, 0], "halfwidth": 1},
    }
    out = json.loads(gshift.run_command("bounds", json.dumps(config)))
    assert out["status"]["pass"] and len(out["records"]) == 3

    try:
        gshift.Covariance([[1.0, 2.0], [2.0, 1.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("indefinite covariance accepted")

    print(f"gshift {gshift.__version__} python smoke test: ok")


if __name__ == "__main__":
    main()

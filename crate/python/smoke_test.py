"""Smoke test for the skelstop_py extension.

Build and install first, for example:

    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml
"""

import math
import tempfile

import skelstop_py as sp


def main():
    assert sp.num_steps(0.25) == 16
    k_star, eps, steps = sp.plan_steps(0.40, 0.15, hurst=0.6)
    assert (round(k_star, 2), steps) == (1.88, 14), (k_star, steps)

    draws = sp.sample_exit_times(200_000, seed=3)
    mean = sum(draws) / len(draws)
    assert abs(mean - 1.0) < 0.01, mean
    assert abs(sp.exit_mgf(-1.0) - 1.0 / math.cosh(math.sqrt(2.0))) < 1e-12

    s = sp.Skeleton.sample(0.125, 64, seed=1)
    assert len(s) == 64 and len(s.walk()) == 65
    assert all(b > a for a, b in zip(s.times, s.times[1:]))
    driver = sp.fbm_driver(s, 0.7)
    assert len(driver) == 65 and driver[0] == 0.0

    assert abs(sp.kernel_k(0.75, 1.0, 0.5, norm_const=1.0) - sp.kernel_k(0.75, 2.0, 1.0, norm_const=1.0) / 2**0.25) < 1e-10

    value, residual = sp.exact_tree_put(0.25, 12, 36.0, 40.0, 0.06, 0.2)
    assert residual <= 1e-12 and 3.5 < value < 5.0, (value, residual)
    crr = sp.crr_american_put(36.0, 40.0, 0.06, 0.2, 1.0, 2000)
    assert abs(crr - 4.4867) < 2e-3, crr

    config = (
        sp.default_config()
        .replace("k_list = [2, 3, 4]", "k_list = [1, 2]")
        .replace("train_paths = 20000", "train_paths = 2000")
        .replace("fresh_paths = 20000", "fresh_paths = 2000")
        .replace("crr_steps = 20000", "crr_steps = 1000")
    )
    with tempfile.TemporaryDirectory() as out:
        rows = sp.run_experiment(config, output_dir=out)
    assert [r["k"] for r in rows] == [1, 2]
    assert all(r["reference_kind"] == "crr" and r["value"] > 0 for r in rows)

    checks = sp.verify()
    assert all(passed for _, passed, _ in checks), [c for c in checks if not c[1]]

    try:
        sp.kernel_k(0.4, 1.0, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("H below 1/2 must be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()

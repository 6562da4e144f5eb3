"""Smoke test for the stoprule extension module."""

import json
import math

import stoprule as sr


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    sol = sr.solve_odds([0.25, 0.25, 0.25])
    assert sol.s == 1
    close(sol.v, 0.421875, 1e-15)
    close(sr.bound_b(3), 4 / 9, 1e-15)
    close(sr.classical_secretary_value(4).v, 11 / 24, 1e-12)

    u = sr.Distribution.uniform(0.0, 1.0)
    assert u.kind == "uniform"
    close(u.cdf(0.3), 0.3, 1e-15)
    close(u.quantile(0.7), 0.7, 1e-15)
    assert u.sample(5, seed=1) == u.sample(5, seed=1)

    inst = sr.ProblemInstance.iid(u, 3)
    value, policy = sr.solve(inst)
    close(value, 0.68428, 1e-4)
    close(policy.thresholds[0], (1 + math.sqrt(6)) / 5, 1e-5)
    assert sr.ProblemInstance.from_json(inst.to_json()).to_json() == inst.to_json()

    for n in range(2, 7):
        close(sr.optimal_value(sr.make_extremal_instance(n)), sr.bound_b(n), 1e-4)

    report = sr.verify_reduction(inst)
    assert report["inequality_holds"]
    close(report["value_reduced"], policy.thresholds[0] ** 2, 1e-4)

    close(sr.v_sequence_value([0.5, 0.5, 1 / 3, 0.25]), 11 / 24, 1e-12)

    d = sr.ProblemInstance([
        sr.Distribution.point_mass(0.0),
        sr.Distribution.discrete([(-1.0, 0.5), (1.0, 0.5)]),
        sr.Distribution.discrete([(-2.0, 0.75), (2.0, 0.25)]),
    ])
    exact = sr.oracle_optimal_value(d)
    assert exact["exact"] and exact["value_rational"] == "1/2"

    two = sr.ProblemInstance.iid(u, 2)
    sim = sr.simulate(two, sr.ThresholdPolicy([0.5]), trials=200_000, seed=42)
    assert abs(sim.estimate - 0.75) < 4 * sim.stderr
    assert sim.wins == sr.simulate(two, sr.ThresholdPolicy([0.5]), trials=200_000, seed=42).wins

    checks = sr.run_checks(instances=4, grid_points=512)
    assert checks["passed"], json.dumps(checks)

    for bad in (lambda: sr.solve_odds([1.5]), lambda: sr.Distribution.uniform(1.0, 0.0)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("stoprule", sr.__version__, "smoke test passed")


if __name__ == "__main__":
    main()

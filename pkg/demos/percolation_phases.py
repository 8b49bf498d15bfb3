"""Largest-cluster fractions on tori across the percolation transition.

With bounded weights the largest cluster stays a vanishing fraction until
lambda passes a positive threshold, bounded below by a lattice-sum formula.
With gamma < 2 a positive fraction appears already at small lambda.

    python3 demos/percolation_phases.py
"""

from sfperc import (
    ModelParams,
    WeightDistribution,
    crossing_lambda_estimate,
    lambda_c_lower_bound,
    percolation_curve,
)


def show(curve):
    for side in curve.sides():
        cells = "  ".join(f"{r.lam:g}:{r.mean_fraction:.3f}" for r in curve.for_side(side))
        print(f"  L = {side:>4}  {cells}")


def finite_variance():
    params = ModelParams(2, 4.0, 1.0, WeightDistribution.constant(1.0))
    bound = lambda_c_lower_bound(params)
    curve = percolation_curve(params, [16, 32], [0.1, 0.2, 0.3, 0.4, 0.6, 1.0], 20, 3)
    print(f"constant weights, d = 2, alpha = 4: lambda_c >= {bound:.4f}")
    show(curve)
    crossings, note = crossing_lambda_estimate(curve, 0.5)
    for c in crossings:
        print(f"  crossing of 1/2 at L = {c.side}: {c.lam:.4f} +- {c.stderr:.4f}")
    print(f"  {note}")


def infinite_variance():
    params = ModelParams(2, 2.5, 1.0, WeightDistribution.pareto(2.0))
    curve = percolation_curve(params, [50, 100], [0.01, 0.02, 0.05, 0.1], 10, 5)
    print("\nPareto(2) weights, d = 2, alpha = 2.5 (gamma = 1.25): no positive threshold")
    show(curve)


if __name__ == "__main__":
    finite_variance()
    infinite_variance()

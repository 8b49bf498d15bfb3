"""Graph distances on a 2048 x 2048 torus, revealed lazily.

With gamma < 2 hubs are so well connected that distances barely grow with
the separation (log log scaling); with gamma > 2 and alpha > 2d they grow
steadily, closer to long-range percolation.

    python3 demos/distance_growth.py
"""

from sfperc import LatticeBox, ModelParams, WeightDistribution, distance_regressions, distance_scaling

NORMS = [32, 64, 128, 256, 512]


def report(name, params, max_hops, seed, pairs=20):
    table = distance_scaling(params, LatticeBox(2, 2048), NORMS, pairs, max_hops, seed)
    print(name)
    for r in table.rows:
        print(f"  |x| = {r.norm:>4}  median {r.median_hops:5.1f}  mean {r.mean_hops:6.2f}"
              f"  connected {r.connected_fraction:.2f}")
    fits = distance_regressions(table)
    print(f"  RMS residual: vs log log |x| {fits['loglog'].residual:.3f}, vs log |x| {fits['log'].residual:.3f}")


if __name__ == "__main__":
    report("gamma = 1.5 (alpha = 3, tau = 2)", ModelParams(2, 3.0, 1.0, WeightDistribution.pareto(2.0)), 60, 1)
    report("gamma = 3 (alpha = 5, tau = 2.2)", ModelParams(2, 5.0, 1.0, WeightDistribution.pareto(2.2)), 400, 2)

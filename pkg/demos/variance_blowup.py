"""Why single-query gradients help near the boundary of [0,1]^d.

One coordinate, Q(0) = 0, Q(1) = 1.  The score-function (REINFORCE)
gradient has variance (1 - x)/x, which explodes as x -> 0.  The
single-query estimator with the long-jump tuple keeps variance exactly
1 at every x: its gradient is +-2 Q(key) with a coin-flip key, whatever
the state.  Run:

    python3 demos/variance_blowup.py
"""

import numpy as np

from sqgrad import TableOracle, estimate_mean_and_variance

N = 400_000


def main():
    oracle = TableOracle([0.0, 1.0])
    rng = np.random.default_rng(17)
    print(f"{'x':>6} {'reinforce var':>14} {'(1-x)/x':>9} {'esg:longjump var':>17}")
    for x in (0.5, 0.25, 0.1, 0.05, 0.02):
        r = estimate_mean_and_variance("reinforce", np.array([x]), oracle, N, rng)
        e = estimate_mean_and_variance("esg:longjump", np.array([x]), oracle, N, rng)
        print(
            f"{x:>6.2f} {r.gradient_variance[0]:>14.3f} {(1 - x) / x:>9.3f} "
            f"{e.gradient_variance[0]:>17.3f}"
        )
    print("\nboth estimators stay unbiased (true derivative is 1):")
    for x in (0.5, 0.05):
        r = estimate_mean_and_variance("reinforce", np.array([x]), oracle, N, rng)
        e = estimate_mean_and_variance("esg:longjump", np.array([x]), oracle, N, rng)
        print(f"  x={x:.2f}: reinforce mean {r.mean_gradient[0]:+.4f}, "
              f"esg:longjump mean {e.mean_gradient[0]:+.4f}")


if __name__ == "__main__":
    main()

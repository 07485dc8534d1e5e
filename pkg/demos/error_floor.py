"""Compare constant, low-degree and target hypotheses, then the large-noise variant.

Run: python demos/error_floor.py
"""

from massart_sq.experiments import floor_experiment, hidden_direction
from massart_sq.massart_measures import build_pair, opt_error
from massart_sq.presets import preset_params


def main():
    pair = build_pair(preset_params("desk"))
    table = floor_experiment(pair, hidden_direction(6, 0), 100_000, seed=0)
    print("desk preset, 1e5 samples, m = 6")
    for key in ("min_p", "constant_error", "battery_error", "target_error", "opt_error",
                "tau_measured", "error_floor"):
        print(f"  {key:15s} {table[key]:.6g}")

    big = build_pair(preset_params("large-eta"))
    print("large-noise preset")
    print(f"  p = {big.p:.4f}, l1 ratio = {big.l1_plus / big.l1_minus:.4f}, optimal error = {opt_error(big):.3g}")


if __name__ == "__main__":
    main()

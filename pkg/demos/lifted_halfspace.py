"""Lift the coarse preset into a degree-10 monomial space and check the halfspace.

The coarse preset has a five-interval J, so the sign of the degree-10
polynomial vanishing at its endpoints realizes J exactly.  A degree-3 moment
battery sees nothing, while the hidden-direction Hermite probe at the best
degree does.

Run: python demos/lifted_halfspace.py
"""

import numpy as np

from massart_sq.experiments import hidden_direction, lift_experiment
from massart_sq.hermite_correlation import hermite_coefficients
from massart_sq.hidden_direction import HiddenDirectionInstance, sample_labeled, stream_rng
from massart_sq.massart_measures import build_pair
from massart_sq.presets import LIFT_D, LIFT_M, preset_params
from massart_sq.sq_harness import moment_test_battery, predicted_probe_z


def main():
    pair = build_pair(preset_params("lift"))
    v = hidden_direction(LIFT_M, 0)
    target, rep = lift_experiment(pair, v, LIFT_D, 10_000, seed=0)
    print(f"lifted dimension M = {target.basis.M}")
    print(f"sign agreement with interval membership: {rep.agreement:.4f}")
    print(f"worst flip rate {rep.max_flip:.4g} <= eta {rep.eta}; optimal error {rep.opt_error:.4g}")

    inst = HiddenDirectionInstance.from_pair(pair, v)
    n = 100_000
    data = sample_labeled(inst, n, stream_rng(0, 1))
    a_plus = hermite_coefficients(pair.plus).normalized
    a_minus = hermite_coefficients(pair.minus).normalized
    pred = {deg: predicted_probe_z(inst, deg, n, a_plus, a_minus) for deg in range(1, 41)}
    best = max(pred, key=lambda d: abs(pred[d]))
    bat = moment_test_battery(data, 3, probe_direction=v, probe_degrees=(best,))
    print(f"degree-3 battery: max |z| = {bat.max_abs_z:.3g} over {bat.n_statistics} statistics")
    print(f"probe h{best}(v.x): predicted z {pred[best]:.3g}, measured z {bat.probe_z[best]:.3g}")
    print(f"first degree with |predicted z| > 5: "
          f"{next((d for d in sorted(pred) if abs(pred[d]) > 5), None)}")
    assert np.isfinite(bat.max_abs_z)


if __name__ == "__main__":
    main()

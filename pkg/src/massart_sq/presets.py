"""Named parameter sets used by the demos, the CLI and the acceptance suite."""

from __future__ import annotations

from .massart_measures import LARGE_ETA, ConstructionParams

#: Standard construction; checks every property at a scale that runs in seconds.
DESK = {"s": 0.25, "eps": 0.01, "eta": 0.3}

#: Coarse construction whose J has five intervals, so a degree-10 lift realizes it.
#: The s/eps floor is relaxed to make that possible.
LIFT = {"s": 0.9, "eps": 0.36, "eta": 0.3, "ratio_floor": 2.0}

#: Noise rate near one half.  At s = 0.5 no piece pairs three plus intervals
#: with four minus intervals, which with C = 4/3 would land in the forbidden band.
LARGE_ETA_PRESET = {"s": 0.5, "eps": 0.01, "eta": 0.49, "variant": LARGE_ETA, "m0": 3}

PRESETS = {"desk": DESK, "lift": LIFT, "large-eta": LARGE_ETA_PRESET}

#: Dimension of the hidden-direction space and lift degree for the lift preset.
LIFT_M = 6
LIFT_D = 5


def preset_params(name: str, **overrides) -> ConstructionParams:
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ConstructionParams(**base)

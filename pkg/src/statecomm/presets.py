"""Built-in channels, designs and parameter bundles for the worked examples.

Every CLI preset lives here so tests and golden files need no hand-built
input files.  Curve presets cover the additive Gaussian channel, the
binary channel with and without noise, and the injective pair channel;
simulation presets cover the zero-distortion regime, the lossless-
communication trend check, and a deliberately overdriven rate point.
"""

from __future__ import annotations

import numpy as np

from .blockmarkov import CodeRates, TypicalityParams
from .cdsolve import JointDesign
from .errors import ValidationError
from .estimator import DistortionTable
from .probcore import SimplexVector, StateChannel, StochasticTable, bsc_channel


def state_identity_design(channel: StateChannel, card_u: int | None = None) -> JointDesign:
    """The U = S design: describe the state itself, uniform channel input."""
    card_u = card_u if card_u is not None else channel.card_s
    if card_u < channel.card_s:
        raise ValidationError("card_u must be at least card_s for the identity design")
    rows = np.zeros((channel.card_x * channel.card_s, card_u))
    for x in range(channel.card_x):
        for s in range(channel.card_s):
            rows[x * channel.card_s + s, s] = 1.0
    return JointDesign(SimplexVector.uniform(channel.card_x), StochasticTable(rows), card_u)


#: Simulation presets: channel parameters, code rates, typicality slacks and
#: defaults chosen so each preset exercises its regime at desk scale.
SIM_PRESETS = {
    # zero-distortion regime: noiseless binary channel, injective in the state
    "noiseless-xor": {
        "channel": lambda: bsc_channel(0.0, 0.3),
        "rates": CodeRates(0.0, 0.1, 1.0),
        "typ": TypicalityParams(0.5, 0.35),
        "n": 16,
        "b": 8,
        "trials": 20,
    },
    # lossless-communication regime: H(S) sits ~10% inside Delta*
    "lossless-bsc": {
        "channel": lambda: bsc_channel(0.03, 0.2),
        "rates": CodeRates(0.0, 0.23, 0.78),
        "typ": TypicalityParams(0.6, 0.35),
        "n": 12,
        "b": 6,
        "trials": 50,
    },
    # bin rate driven to twice the channel capacity: packing must fail
    "overdriven-bsc": {
        "channel": lambda: bsc_channel(0.03, 0.2),
        "rates": CodeRates(0.0, 0.49, 0.85),
        "typ": TypicalityParams(0.6, 0.35),
        "n": 12,
        "b": 6,
        "trials": 20,
    },
}

#: Lossless-feasibility presets (the feasible/infeasible pair).
LOSSLESS_PRESETS = {
    "corollary1-feasible": lambda: bsc_channel(0.03, 0.2),
    "corollary1-infeasible": lambda: bsc_channel(0.25, 0.5),
}


def sim_preset(name: str):
    if name not in SIM_PRESETS:
        raise ValidationError(
            f"unknown simulation preset {name!r}; available: {sorted(SIM_PRESETS)}"
        )
    spec = SIM_PRESETS[name]
    channel = spec["channel"]()
    return {
        "channel": channel,
        "design": state_identity_design(channel),
        "distortion": DistortionTable.hamming(channel.card_s),
        "rates": spec["rates"],
        "typ": spec["typ"],
        "n": spec["n"],
        "b": spec["b"],
        "trials": spec["trials"],
    }


def lossless_preset(name: str) -> StateChannel:
    if name not in LOSSLESS_PRESETS:
        raise ValidationError(
            f"unknown lossless preset {name!r}; available: {sorted(LOSSLESS_PRESETS)}"
        )
    return LOSSLESS_PRESETS[name]()

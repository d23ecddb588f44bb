"""Named reference scenarios ``fig3`` .. ``fig12``.

All presets start at p0 = 10 with a 100-step random-walk bootstrap and run
to t = 500 with w = 0.01.  Two of them have a parameter with two reported
values; the default uses one, ``alternate=True`` the other, and the
scenario's ``comment`` says which.
"""

from __future__ import annotations

from .dynamics import ManipulatorSchedule, Scenario, TraderGroup
from .errors import ConfigError
from .indicators import FeatureParams

P0 = 10.0
BOOTSTRAP = 100
HORIZON = 500
N_STAR = 100


def _ma(strength: float, kind: str = "ed1") -> TraderGroup:
    return TraderGroup(kind, strength, FeatureParams(m=1, n=5))


def _sr(kind: str, strength: float) -> TraderGroup:
    return TraderGroup(kind, strength, FeatureParams(n_star=N_STAR))


def _scenario(groups, sigma, keep_noise=False, comment=None, seed=0) -> Scenario:
    return Scenario(
        sigma=sigma,
        bootstrap_len=BOOTSTRAP,
        horizon=HORIZON,
        groups=groups,
        p0=P0,
        seed=seed,
        keep_noise=keep_noise,
        comment=comment,
    )


def _fig3(alt):
    a1 = 0.2 if alt else 0.03
    note = "a1 = 0.03 (default); a1 = 0.2 is also reported and selected by alternate=True."
    if alt:
        note = "a1 = 0.2 (alternate); the default is a1 = 0.03."
    return _scenario([_ma(a1)], 0.037, comment="fig3: moving-average group only. " + note)


def _fig4(alt):
    sigma = 0.005 if alt else 0.05
    note = "sigma = 0.05 (default); sigma = 0.005 is also reported and selected by alternate=True."
    if alt:
        note = "sigma = 0.005 (alternate); the default is sigma = 0.05."
    return _scenario([_ma(0.2), _sr("ed2", 1.0)], sigma, comment="fig4: moving-average + breakout groups. " + note)


def _fig5(alt):
    return _scenario(
        [_sr("ed2", 0.5)], 0.05, keep_noise=True, comment="fig5: random walk plus breakout group (noise kept)."
    )


def _fig6(alt):
    return _scenario(
        [_ma(0.2), _sr("ed2", 1.0), _sr("ed3", 1.0)],
        0.05,
        comment="fig6: moving-average + breakout + support/resistance revisit groups.",
    )


def _fig7(alt):
    return _scenario([_ma(0.02), _sr("ed4", 1.0)], 0.05, comment="fig7: moving-average + trend-line continuation.")


def _fig8(alt):
    return _scenario(
        [_ma(0.02), _sr("ed5", 1.0)],
        0.05,
        comment="fig8: moving-average + trend reversal. The strength 1 listed as a4 for this "
        "set-up is applied to the reversal group (a5).",
    )


def _fig9(alt):
    return _scenario([_ma(0.2), _ma(0.02, "ed6")], 0.04, comment="fig9: moving-average + big seller.")


def _fig10(alt):
    return _scenario([_ma(0.2), _ma(0.02, "ed7")], 0.04, comment="fig10: moving-average + big buyer.")


def _fig12(alt):
    group = TraderGroup("ed9", 0.2, FeatureParams(n=5))
    return _scenario([group], 0.04, keep_noise=True, comment="fig12: random walk plus band-breakout group.")


PRESETS = {
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
    "fig10": _fig10,
    "fig12": _fig12,
}


def manipulator_example(seed: int = 0) -> Scenario:
    """Pump-and-dump example.  The push window t in [200, 220) is the
    reference one; every other number here is made up for illustration."""
    return Scenario(
        sigma=0.04,
        bootstrap_len=BOOTSTRAP,
        horizon=HORIZON,
        groups=[_ma(0.2), TraderGroup("ed8", 0.1, FeatureParams(m=1, n=5))],
        p0=P0,
        seed=seed,
        manipulator=ManipulatorSchedule((100, 200), (200, 220), (220, 500)),
        comment="manipulator example: invented parameters (a1 = 0.2, a8 = 0.1, sigma = 0.04, "
        "phases [100,200) [200,220) [220,500)); only the push window is a reference value.",
    )


def figure_preset(name: str, alternate: bool = False, seed: int = 0) -> Scenario:
    if name == "fig11":
        raise ConfigError(
            "fig11 has no known parameter set; use the 'manipulator' preset, "
            "an invented pump-and-dump example"
        )
    if name == "manipulator":
        return manipulator_example(seed)
    try:
        build = PRESETS[name]
    except KeyError:
        known = ", ".join(list(PRESETS) + ["manipulator"])
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}") from None
    scenario = build(alternate)
    return scenario.with_seed(seed) if seed else scenario

"""Per-state safety readings along a scripted hard-braking scenario.

Prints TTC-family times, PICUD, DRAC and the Boolean envelope checks for
every second of the scenario, then cross-checks MTTC against the rollout
oracle at each printed state.
"""
from pathlib import Path

import numpy as np

from leadsafety import metrics_boolean as mb
from leadsafety import metrics_state as ms
from leadsafety import oracle as orc
from leadsafety.ingest import load_scenario, synth_scenario
from leadsafety.registry import default_variants

V = {v.variant: v for v in default_variants()}
HERE = Path(__file__).parent


def main():
    inc = synth_scenario(load_scenario(HERE / "scenarios" / "hard_brake.yaml"))
    print(f"{inc.id}: {len(inc)} states, collision={inc.states[-1].collision}")
    print(f"{'t':>4} {'dhw':>6} {'TTC':>6} {'MTTC':>6} {'oracle':>6} {'PICUD':>7} {'DRAC':>5}  RSS3   FSM    MPrISM")
    step = int(round(inc.frequency))
    for s in inc.states[::step] + (inc.states[-1],):
        mttc = float(ms.mttc(s))
        ref = orc.ttc_by_rollout(s, orc.constant_accel(s.a_sv), orc.constant_accel(s.a_pov))
        ref = np.inf if ref is None else ref
        print(f"{s.t / inc.frequency:4.1f} {s.dhw:6.2f} {float(ms.ttc(s)):6.2f} {mttc:6.2f} {ref:6.2f} "
              f"{float(ms.picud(s, V['PICUD1'])):7.2f} {float(ms.drac(s)):5.2f}  "
              f"{'safe' if mb.rss_long_check(s, V['RSS3'])[0] else 'UNSAFE':7}"
              f"{'safe' if mb.fsm_check(s, V['FSM']) else 'UNSAFE':7}"
              f"{'safe' if mb.mprism_bool(s, V['MPrISM_B']) else 'UNSAFE'}")


if __name__ == "__main__":
    main()

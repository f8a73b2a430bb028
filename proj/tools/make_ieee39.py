#!/usr/bin/env python3
"""Regenerate data/ieee39.json from MATPOWER case39 (via pypower).

The power-flow solution is computed once here and stored as input data; the
simulator itself never solves a power flow.

    pip install pypower
    python3 tools/make_ieee39.py > data/ieee39.json
"""
import json
import math

from pypower.api import case39, ppoption, runpf

# Dynamic data on 100 MVA base, keyed by generator bus:
# H (s), x_d, xp_d, x_q, Tp_d0 (s), Tp_q0 (s).
# xp_q is set equal to xp_d (network carries a single internal reactance).
# The bus-30 unit has no q-axis transient circuit in the source table; 0.4 s is used.
DYN = {
    30: (42.0, 0.1, 0.031, 0.069, 10.2, 0.4),
    31: (30.3, 0.295, 0.0697, 0.282, 6.56, 1.5),
    32: (35.8, 0.2495, 0.0531, 0.237, 5.7, 1.5),
    33: (28.6, 0.262, 0.0436, 0.258, 5.69, 1.5),
    34: (26.0, 0.67, 0.132, 0.62, 5.4, 0.44),
    35: (34.8, 0.254, 0.05, 0.241, 7.3, 0.4),
    36: (26.4, 0.295, 0.049, 0.292, 5.66, 1.5),
    37: (24.3, 0.290, 0.057, 0.280, 6.7, 0.41),
    38: (34.5, 0.2106, 0.057, 0.205, 4.79, 1.96),
    39: (500.0, 0.02, 0.006, 0.019, 7.0, 0.7),
}


def main():
    res, ok = runpf(case39(), ppoption(VERBOSE=0, OUT_ALL=0))
    assert ok
    base = res["baseMVA"]
    buses = []
    for b in res["bus"]:
        buses.append({
            "id": int(b[0]),
            "vm": float(b[7]),
            "va_deg": float(b[8]),
            "p_load": float(b[2]) / base,
            "q_load": float(b[3]) / base,
            "g_shunt": float(b[4]) / base,
            "b_shunt": float(b[5]) / base,
        })
    branches = []
    for br in res["branch"]:
        branches.append({
            "from": int(br[0]),
            "to": int(br[1]),
            "r": float(br[2]),
            "x": float(br[3]),
            "b": float(br[4]),
            "tap": float(br[8]),
            "shift_deg": float(br[9]),
        })
    machines = []
    for g in res["gen"]:
        bus = int(g[0])
        H, xd, xpd, xq, td0, tq0 = DYN[bus]
        machines.append({
            "bus": bus,
            "H": H,
            "D": H,
            "x_d": xd,
            "x_q": xq,
            "xp_d": xpd,
            "xp_q": xpd,
            "Tp_d0": td0,
            "Tp_q0": tq0,
            "R_a": 0.0,
            "p_gen": float(g[1]) / base,
            "q_gen": float(g[2]) / base,
        })
    doc = {
        "name": "ieee39",
        "notes": [
            "MATPOWER case39 network and solved power flow, loads as constant impedance.",
            "Machine data on 100 MVA base; D_i = H_i (p.u. power per p.u. speed); xp_q = xp_d; R_a = 0.",
            "Bus-30 unit Tp_q0 set to 0.4 s.",
            "Fault: three-phase at bus 3 at t = 1 s, cleared after 5 cycles by tripping line 3-4.",
        ],
        "base_frequency": 60.0,
        "base_mva": base,
        "machines": machines,
        "network": {"buses": buses, "branches": branches},
        "event": {
            "t_fault": 1.0,
            "t_clear": 1.0 + 5.0 / 60.0,
            "faulted_bus": 3,
            "tripped_branch": [3, 4],
        },
        "fault_shunt": 1e7,
    }
    print(json.dumps(doc, indent=1))


if __name__ == "__main__":
    main()

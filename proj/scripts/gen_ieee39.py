#!/usr/bin/env python3
"""Write scenarios/ieee39.scn from the pypower New England 39-bus case.

Linearized swing model around the power-flow solution, angles relative to
bus 30.  Generators:  d(delta_i)/dt = omega_i - omega_30,
M_i d(omega_i)/dt = -D_i omega_i - sum_j K_ij (delta_i - delta_j) + u_i.
Loads (first order, unit damping):  d(delta_i)/dt = -sum_j K_ij (delta_i - delta_j) - omega_30.
K_ij = V_i V_j |B_ij| cos(theta_i - theta_j) from the bus admittance matrix.
Bus 30 keeps only omega_30; bus 39 (the lost actuator) is written last.
"""
import argparse
import pathlib

import numpy as np
from pypower.api import case39, ppoption, runpf
from pypower.makeYbus import makeYbus
from pypower.ext2int import ext2int

# Inertia constants (s, 100 MVA base) of the ten machines, keyed by bus.
H = {30: 42.0, 31: 30.3, 32: 35.8, 33: 28.6, 34: 26.0, 35: 34.8, 36: 26.4, 37: 24.3, 38: 34.5, 39: 500.0}
M_SCALE = 1.0 / 111.0   # M_i = H_i / 111, gives M_39 = 4.5045 and 1/M_39 = 0.222
DAMP_RATIO = 11.22      # D_i = 11.22 M_i
LOAD_DAMPING = 1.0
REF = 30
LOST = 39


def coupling_matrix():
    ppc = case39()
    res, ok = runpf(ppc, ppoption(VERBOSE=0, OUT_ALL=0))
    if not ok:
        raise SystemExit("power flow did not converge")
    res = ext2int(res)
    Ybus, _, _ = makeYbus(res["baseMVA"], res["bus"], res["branch"])
    Y = np.asarray(Ybus.todense())
    V = res["bus"][:, 7]
    th = np.deg2rad(res["bus"][:, 8])
    n = len(V)
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and abs(Y[i, j]) > 0:
                K[i, j] = V[i] * V[j] * abs(Y[i, j].imag) * np.cos(th[i] - th[j])
    return K


def fmt_row(r):
    return "[" + ", ".join(repr(float(x)) for x in r) + "]"


def fmt_mat(m):
    return "[" + ", ".join(fmt_row(r) for r in m) + "]"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "ieee39.scn"))
    args = ap.parse_args()

    K = coupling_matrix()
    buses = list(range(1, 40))
    order = [b for b in buses if b != LOST] + [LOST]
    gens = set(H)

    def dim(b):
        return 1 if (b not in gens or b == REF) else 2

    def M(b):
        return H[b] * M_SCALE

    subs = []
    for b in order:
        i = b - 1
        ksum = K[i].sum()
        if b == REF:
            A = [[-DAMP_RATIO]]
            B = [[1.0 / M(b)]]
        elif b in gens:
            A = [[0.0, 1.0], [-ksum / M(b), -DAMP_RATIO]]
            B = [[0.0], [1.0 / M(b)]]
        else:
            A = [[-ksum / LOAD_DAMPING]]
            B = [[]]
        couplings = []
        for nb in order:
            if nb == b:
                continue
            j = nb - 1
            D = np.zeros((dim(b), dim(nb)))
            if nb == REF:
                # omega_30 enters every relative-angle row
                D[0, 0] = -1.0
            elif K[i, j] != 0.0:
                if b == REF:
                    D[0, 0] = K[i, j] / M(b)
                elif b in gens:
                    D[1, 0] = K[i, j] / M(b)
                else:
                    D[0, 0] = K[i, j] / LOAD_DAMPING
            if np.any(D != 0.0):
                couplings.append((nb, D))
        subs.append((b, A, B, couplings))

    n_total = sum(dim(b) for b in order)
    x0 = [1.0] * (n_total - 2) + [0.0, 0.0]

    lines = [
        "# Linearized New England 39-bus system, regenerated by scripts/gen_ieee39.py.",
        "# One subsystem per bus, ids are bus numbers; states are angles relative to bus 30",
        "# plus generator frequencies (bus 30 keeps only its frequency).  The actuator of",
        "# generator 39 is lost.",
        "name: ieee39",
        "description: IEEE 39-bus swing linearization, actuator of generator 39 lost",
        "subsystems:",
    ]
    for b, A, B, couplings in subs:
        lines.append(f"  - id: {b}")
        lines.append(f"    A: {fmt_mat(A)}")
        lines.append(f"    B: {fmt_mat(B) if B != [[]] else '[[]]'}")
        lines.append("    couplings:")
        for nb, D in couplings:
            lines.append(f"      - {{neighbor: {nb}, D: {fmt_mat(D)}}}")
    lines += [
        "loss:",
        f"  - {{subsystem: {LOST}, actuators: [0]}}",
        "control:",
        "  mode: under",
        "simulation:",
        f"  x0: {fmt_row(x0)}",
        "  t_end: 20",
        "  dt: 0.001",
        "  policy_hat: linear_feedback",
        "  policy_u: zero",
        "  policy_w: constant",
        "  w_N: [1]",
    ]
    pathlib.Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out}: {n_total} states")


if __name__ == "__main__":
    main()

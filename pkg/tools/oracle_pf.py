#!/usr/bin/env python3
"""Independent textbook polar Newton-Raphson power flow.

Operates directly on the raw bus/gen/branch tables of a parsed case file,
sharing no modelling code with the package's rectangular current-injection
solver.  Used to freeze reference voltage fixtures for regression tests.

Usage: python3 tools/oracle_pf.py <case.m> [out.json]
"""

import json
import sys

import numpy as np

from gridsim.parsers import load_case


def oracle_ybus(case):
    n = case.n_bus
    ids = {int(b): i for i, b in enumerate(case.bus[:, 0])}
    y = np.zeros((n, n), dtype=complex)
    for row in case.branch:
        if row[10] == 0:
            continue
        f, t = ids[int(row[0])], ids[int(row[1])]
        ys = 1.0 / complex(row[2], row[3])
        bc = 1j * row[4] / 2.0
        tau = row[8] if row[8] != 0 else 1.0
        tap = tau * np.exp(1j * np.deg2rad(row[9]))
        y[f, f] += (ys + bc) / (tau * tau)
        y[t, t] += ys + bc
        y[f, t] += -ys / np.conj(tap)
        y[t, f] += -ys / tap
    for i, row in enumerate(case.bus):
        y[i, i] += complex(row[4], row[5]) / case.base_mva
    return y, ids


def oracle_solve(case, tol=1e-10, max_iter=30):
    y, ids = oracle_ybus(case)
    n = case.n_bus
    btype = case.bus[:, 1].astype(int)
    vm = np.where(case.bus[:, 7] > 0, case.bus[:, 7], 1.0).astype(float)
    va = np.zeros(n)

    s_inj = -(case.bus[:, 2] + 1j * case.bus[:, 3]) / case.base_mva
    for row in case.gen:
        if row[7] <= 0:
            continue
        i = ids[int(row[0])]
        s_inj[i] += complex(row[1], row[2]) / case.base_mva
        if btype[i] in (2, 3):
            vm[i] = row[5]

    sl = np.flatnonzero(btype == 3)
    pv = np.flatnonzero(btype == 2)
    pq = np.flatnonzero(btype == 1)
    ang_idx = np.concatenate([pv, pq])
    mag_idx = pq

    for it in range(max_iter):
        v = vm * np.exp(1j * va)
        s_calc = v * np.conj(y @ v)
        mis = s_calc - s_inj
        f = np.concatenate([mis[ang_idx].real, mis[mag_idx].imag])
        if np.max(np.abs(f)) < tol:
            return vm, va, it, True

        dv = np.diag(v)
        dvn = np.diag(v / vm)
        ibus = y @ v
        ds_dva = 1j * dv @ np.conj(np.diag(ibus) - y @ dv)
        ds_dvm = dv @ np.conj(y @ dvn) + np.conj(np.diag(ibus)) @ dvn

        j11 = ds_dva[np.ix_(ang_idx, ang_idx)].real
        j12 = ds_dvm[np.ix_(ang_idx, mag_idx)].real
        j21 = ds_dva[np.ix_(mag_idx, ang_idx)].imag
        j22 = ds_dvm[np.ix_(mag_idx, mag_idx)].imag
        jac = np.block([[j11, j12], [j21, j22]])

        dx = np.linalg.solve(jac, -f)
        va[ang_idx] += dx[: len(ang_idx)]
        vm[mag_idx] += dx[len(ang_idx):]
    return vm, va, max_iter, False


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        sys.exit(2)
    case = load_case(sys.argv[1])
    vm, va, iters, ok = oracle_solve(case)
    if not ok:
        print("did not converge", file=sys.stderr)
        sys.exit(1)
    doc = {
        "case": case.name,
        "bus_id": [int(b) for b in case.bus[:, 0]],
        "vm_pu": [round(float(x), 12) for x in vm],
        "va_deg": [round(float(x), 12) for x in np.degrees(va)],
        "iterations": iters,
    }
    out = json.dumps(doc, indent=1)
    if len(sys.argv) > 2:
        with open(sys.argv[2], "w") as fh:
            fh.write(out + "\n")
        print(f"wrote {sys.argv[2]} ({iters} iterations)")
    else:
        print(out)


if __name__ == "__main__":
    main()

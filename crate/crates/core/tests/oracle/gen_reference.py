#!/usr/bin/env python3
"""Arbitrary-precision reference values for the key-length evaluators.

Writes ../fixtures/reference.json. Run from any directory:

    python3 crates/core/tests/oracle/gen_reference.py

Everything is computed with mpmath at 50 significant digits. The six-state
infimum is a brute-force grid search (endpoints included) that makes no
assumption about where the minimum lies; draws whose grid minimum moves
when the grid is refined are discarded, so every kept value is exact.
"""

import json
import math
import pathlib
import random

import mpmath as mp

mp.mp.dps = 50
SEED = 20261016
DRAWS = 100
OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "reference.json"


def h(p):
    p = mp.mpf(p)
    if p == 0 or p == 1:
        return mp.mpf(0)
    return -p * mp.log(p, 2) - (1 - p) * mp.log(1 - p, 2)


def xlog(x):
    return mp.mpf(0) if x == 0 else x * mp.log(x, 2)


def ln_inv(k):
    """ln(1/eps) for eps = 2^-k."""
    return mp.mpf(k) * mp.log(2)


def xi(k, n, m):
    n, m = mp.mpf(n), mp.mpf(m)
    return mp.sqrt((n + m) * (m + 1) / (8 * n * m * m) * ln_inv(k))


def eta(k, d, m):
    m = mp.mpf(m)
    return mp.sqrt((ln_inv(k) + d * mp.log(m + 1)) / (8 * m))


def eps(k):
    return mp.power(2, -mp.mpf(k))


def neg_log2(e):
    return -mp.log(e, 2)


def six_core(px, pz):
    a = 1 - pz / 2 - px
    b = px - pz / 2
    c = 1 - pz
    if a < 0 or b < 0 or pz < 0 or pz > 1:
        return None
    return xlog(a) + xlog(b) + c * (1 - (mp.log(c, 2) if c > 0 else 0))


def grid(lo, hi, k):
    if lo == hi:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k - 1)] + [hi]


def grid_inf(xb, zb, k):
    vals = [v for px in grid(*xb, k) for pz in grid(*zb, k) if (v := six_core(px, pz)) is not None]
    return min(vals) if vals else None


def counts(kind, L, p):
    m = math.floor(float(L) * p)
    return m, L - 2 * m, m // 2


def eps_rob_terms(e_pe, N):
    e_rob = 2 * (N - 1) * e_pe
    if e_rob >= 1:
        return None
    return e_rob


def ec_term(N, k_ec):
    return mp.log(2 * (N - 1) / eps(k_ec), 2)


def pa_term(e_rob, k_pa):
    return 2 * mp.log((1 - e_rob) / (2 * eps(k_pa)), 2)


def bb84_case(rng):
    N = rng.randint(2, 8)
    L = int(10 ** rng.uniform(4, 12))
    p = rng.uniform(0.005, 0.3)
    m, n, mp_ = counts("bb84", L, p)
    if m < 1 or n < 1:
        return None
    q_ab = [rng.uniform(0, 0.08) for _ in range(N - 1)]
    q_x = rng.uniform(0, 0.08)
    k = {name: rng.uniform(8, 90) for name in ("eps_z", "eps_x", "eps_ec", "eps_pa")}
    xi_z, xi_x = xi(k["eps_z"], n, m), xi(k["eps_x"], n, m)
    h_x = h(min(mp.mpf(q_x) + 2 * xi_x, mp.mpf("0.5")))
    h_ab = max(h(min(mp.mpf(q) + 2 * xi_z, mp.mpf("0.5"))) for q in q_ab)
    e_pe = mp.sqrt((N - 1) * eps(k["eps_z"]) + eps(k["eps_x"]))
    e_rob = eps_rob_terms(e_pe, N)
    if e_rob is None:
        return None
    ell = n * (1 - h_x - h_ab) - ec_term(N, k["eps_ec"]) - pa_term(e_rob, k["eps_pa"])
    if abs(ell) < mp.mpf("1e-3") * n:
        return None
    e_tot = 2 * e_pe + eps(k["eps_ec"]) + eps(k["eps_pa"])
    return {
        "parties": N, "total_rounds": L, "p": p, "m": m, "n": n,
        "q_ab": q_ab, "q_x": q_x, "q_z": 0.0, "neg_log2": k,
        "raw_length": float(ell), "eps_tot_neg_log2": float(neg_log2(e_tot)),
    }


def six_case(rng):
    N = rng.randint(2, 5)
    L = int(10 ** rng.uniform(6, 13))
    p = rng.uniform(0.005, 0.3)
    m, n, mp_ = counts("six", L, p)
    if mp_ < 1 or n < 1:
        return None
    q_ab = [rng.uniform(0, 0.06) for _ in range(N - 1)]
    q_x = rng.uniform(0, 0.08)
    q_z = rng.uniform(0, 0.15)
    k = {name: rng.uniform(8, 90) for name in ("eps_bar", "eps_z", "eps_x", "eps_z_prime", "eps_ec", "eps_pa")}
    w_z, w_x, w_zp = 2 * eta(k["eps_z"], 2, m), 2 * eta(k["eps_x"], 2, mp_), 2 * eta(k["eps_z_prime"], 2, m)
    half = mp.mpf("0.5")
    ab_boxes = [(max(mp.mpf(q) - w_z, 0), min(mp.mpf(q) + w_z, half)) for q in q_ab]
    xb = (max(mp.mpf(q_x) - w_x, 0), min(mp.mpf(q_x) + w_x, half))
    zb = (max(mp.mpf(q_z) - w_zp, 0), min(mp.mpf(q_z) + w_zp, mp.mpf(1)))
    if any(lo > hi for lo, hi in ab_boxes + [xb, zb]):
        return None
    h_ab = max(h(v) for box in ab_boxes for v in grid(*box, 11))
    coarse, fine = grid_inf(xb, zb, 41), grid_inf(xb, zb, 97)
    if coarse is None or fine is None or abs(coarse - fine) > mp.mpf("1e-40"):
        return None
    e_pe = eps(k["eps_z_prime"]) + (N - 1) * eps(k["eps_z"]) + eps(k["eps_x"])
    e_rob = eps_rob_terms(e_pe, N)
    if e_rob is None:
        return None
    per_round = (fine - h_ab - 5 * mp.sqrt(mp.mpf(k["eps_bar"]) / n)
                 - mp.log(5, 2) * mp.sqrt(2 * mp.log(1 / (2 * e_pe), 2) / n))
    ps = 2 * (4 ** N - 1) * mp.log(L + 1, 2)
    ell = n * per_round - ec_term(N, k["eps_ec"]) - pa_term(e_rob, k["eps_pa"]) - ps
    if abs(ell) < mp.mpf("1e-3") * n:
        return None
    inner = 2 * eps(k["eps_bar"]) + e_pe + eps(k["eps_ec"]) + eps(k["eps_pa"])
    e_tot_neg = neg_log2(inner) - (4 ** N - 1) * mp.log(L + 1, 2)
    return {
        "parties": N, "total_rounds": L, "p": p, "m": m, "n": n,
        "q_ab": q_ab, "q_x": q_x, "q_z": q_z, "neg_log2": k,
        "raw_length": float(ell), "eps_tot_neg_log2": float(e_tot_neg),
        "gamma_core": float(fine),
    }


def draws(make, rng):
    out = []
    while len(out) < DRAWS:
        case = make(rng)
        if case is not None:
            out.append(case)
    return out


def scalars():
    half_root = mp.findroot(lambda p: 1 - 2 * h(p), mp.mpf("0.11"))

    def six_global_n2(p):
        return six_core(p, p) - h(p)

    six_root = mp.findroot(six_global_n2, mp.mpf("0.126"))
    k60 = mp.mpf(60)
    e_pe6 = 3 * eps(k60)
    inner = 2 * eps(k60) + e_pe6 + 2 * eps(k60)
    return {
        "h_0_11": float(h(mp.mpf("0.11"))),
        "xi_1e9_1e5_1e5": float(mp.sqrt(mp.mpf(2 * 100001) / (8 * mp.mpf(10) ** 10) * mp.log(mp.mpf(10) ** 9))),
        "eta_1e9_2_1e5": float(mp.sqrt((mp.log(mp.mpf(10) ** 9) + 2 * mp.log(100001)) / (8 * mp.mpf(10) ** 5))),
        "eps_sum_3x2m1000_plus_2m1002": float(neg_log2(3 * eps(1000) + eps(1002))),
        "eps_tot_bb84_n3_all_2m60": float(neg_log2(2 * mp.sqrt(2 * eps(k60) + eps(k60)) + 2 * eps(k60))),
        "eps_tot_six_n2_l1e6_all_2m60": float(neg_log2(inner) - 15 * mp.log(10 ** 6 + 1, 2)),
        "six_expression_005_005_005": float(six_core(mp.mpf("0.05"), mp.mpf("0.05")) - h(mp.mpf("0.05"))),
        "bb84_root": float(half_root),
        "six_state_root_n2_global": float(six_root),
    }


def main():
    rng = random.Random(SEED)
    data = {
        "generator": "gen_reference.py",
        "precision_digits": mp.mp.dps,
        "seed": SEED,
        "scalars": scalars(),
        "bb84": draws(bb84_case, rng),
        "six_state": draws(six_case, rng),
    }
    OUT.write_text(json.dumps(data, indent=1) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

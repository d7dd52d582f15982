#!/usr/bin/env python3
"""Independent high-precision evaluation of the success lower bound.

For every grid point prints `m k t r conf n_min bound(n_min) bound(n_min-1)`
using 50-digit arithmetic. The probabilities are taken as the exact values of
the IEEE doubles the Rust code sees. n_min is found by direct search, not by
the closed form. Output is pasted into crates/core/tests/theory_oracle.rs.
"""
from mpmath import mp, mpf, exp, log, ceil

mp.dps = 50


def bound(m, k, t, r, n):
    gap = mpf(t) - mpf(r)
    log_c = gap * gap / 4
    return 1 - mpf(m) * k * exp(-n * log_c)


def n_min(m, k, t, r, conf):
    gap = mpf(t) - mpf(r)
    log_c = gap * gap / 4
    n = int(ceil(log(mpf(m) * k / (1 - mpf(conf))) / log_c)) - 3
    n = max(n, 0)
    while bound(m, k, t, r, n) < mpf(conf):
        n += 1
    while n > 0 and bound(m, k, t, r, n - 1) >= mpf(conf):
        n -= 1
    return n


def main():
    for m in [10, 100, 1000, 10**6]:
        for k in [2, 3, 10]:
            if m < k + 1:
                continue
            for gap in [0.05, 0.3, 0.9]:
                t, r = 1.0, 1.0 - gap
                for conf in [0.5, 0.95, 0.999]:
                    n = n_min(m, k, t, r, conf)
                    hi = bound(m, k, t, r, n)
                    lo = bound(m, k, t, r, n - 1)
                    print(f"({m}, {k}, {t!r}, {r!r}, {conf!r}, {n}, {mp.nstr(hi, 20)}, {mp.nstr(lo, 20)}),")
    print("# worked value", n_min(1000, 3, 1.0, 0.1, 0.95), mp.nstr(bound(1000, 3, 1.0, 0.1, 55), 20))


if __name__ == "__main__":
    main()

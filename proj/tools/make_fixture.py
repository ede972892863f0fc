#!/usr/bin/env python3
"""Generate the synthetic China daily-emissions fixture used by the test suite.

The original Carbon Monitor extract is not redistributed with this project.
This script builds a stand-in with the same calendar span (2020-01-01 ..
2022-09-30, 1004 days), a plausible daily shape (winter heating peak,
Spring Festival troughs, the early-2020 lockdown dip, summer cooling load,
weekly cycle, autocorrelated noise) and marginal statistics pinned to the
reference summary values: count 1004, max 38.1, min 20.6, median 30.2,
total 30013.4, standard deviation 3.14, skewness -0.42, excess kurtosis 0.68.

The shape is generated first; its ranks are then mapped onto a value set
solved to hit the target statistics, so ordering (and hence all temporal
structure) comes from the shape model while the marginal distribution is
exact.

Output is Carbon Monitor raw format: country,date,sector,value with
DD/MM/YYYY dates and six sector rows per day.
"""

import argparse
import datetime as dt

import numpy as np
from scipy import optimize, stats

START = dt.date(2020, 1, 1)
END = dt.date(2022, 9, 30)
SECTORS = ["Power", "Industry", "Ground Transport", "Residential",
           "Domestic Aviation", "International Aviation"]

TARGET = dict(n=1004, minimum=20.6, maximum=38.1, median=30.2,
              total=30013.4, std=3.14, skew=-0.42, kurt=0.68)


def bump(t, centre, width):
    return np.exp(-0.5 * ((t - centre) / width) ** 2)


def shape(rng):
    days = (END - START).days + 1
    dates = [START + dt.timedelta(days=i) for i in range(days)]
    t = np.arange(days, dtype=float)
    doy = np.array([d.timetuple().tm_yday for d in dates], dtype=float)
    dow = np.array([d.weekday() for d in dates])

    y = 29.0 + 0.0012 * t
    y += 1.8 * np.cos(2 * np.pi * (doy - 10) / 365.25)        # heating season
    y += 1.6 * bump(doy, 215, 28)                              # summer cooling load
    for festival in (dt.date(2020, 1, 25), dt.date(2021, 2, 12), dt.date(2022, 2, 1)):
        c = (festival - START).days
        rel = t - c
        dip = np.where(rel < 0, bump(rel, 0, 4), np.exp(-np.clip(rel, 0, None) / 9))
        y -= 3.5 * dip
    covid = (dt.date(2020, 2, 10) - START).days
    rel = t - covid
    y -= np.where(rel < 0, 5.0 * bump(rel, 0, 8), 5.0 * np.exp(-np.clip(rel, 0, None) / 28))
    y -= 1.4 * bump(t, (dt.date(2021, 10, 5) - START).days, 14)   # power rationing
    y -= 1.6 * bump(t, (dt.date(2022, 4, 25) - START).days, 20)   # spring 2022 lockdowns
    y += 1.2 * bump(t, (dt.date(2022, 8, 15) - START).days, 10)   # 2022 heat wave
    y -= np.where(dow >= 5, 0.25, 0.0)

    noise = np.zeros(days)
    eps = rng.normal(0.0, 0.45, days)
    for i in range(days):
        noise[i] = (0.75 * noise[i - 1] if i else 0.0) + eps[i]
    return dates, y + noise


def solve_values():
    """Sorted value set with the target statistics.

    Quantiles (at plotting positions) of a two-component beta mixture supported on the target
    [minimum, maximum]: a main body plus a low cluster standing in for holiday and lockdown days.
    Extremes are pinned to the bounds; five mixture parameters solve the remaining five equations.
    """
    n = TARGET["n"]
    mean = TARGET["total"] / n
    probs = (np.arange(n) + 0.5) / n
    lo, hi = TARGET["minimum"], TARGET["maximum"]
    grid = np.linspace(0.0, 1.0, 400001)

    def values(params):
        weight, a_lo, b_lo, a_hi, b_hi = params
        w = 1.0 / (1.0 + np.exp(-weight))
        cdf = (w * stats.beta.cdf(grid, np.exp(a_lo), np.exp(b_lo))
               + (1 - w) * stats.beta.cdf(grid, np.exp(a_hi), np.exp(b_hi)))
        v = lo + (hi - lo) * np.interp(probs, cdf, grid)
        v[0] = TARGET["minimum"]
        v[-1] = TARGET["maximum"]
        return v

    def equations(params):
        v = values(params)
        return [
            v.mean() - mean,
            v.std(ddof=1) - TARGET["std"],
            stats.skew(v, bias=False) - TARGET["skew"],
            stats.kurtosis(v, bias=False) - TARGET["kurt"],
            np.median(v) - TARGET["median"],
        ]

    params, info, ok, msg = optimize.fsolve(equations, [-1.5, np.log(4.0), np.log(8.0), np.log(8.0), np.log(6.0)],
                                            xtol=1e-13, full_output=True)
    v = values(params)
    if np.any(np.diff(v) < 0) or np.max(np.abs(equations(params))) > 1e-9:
        raise RuntimeError(f"could not reach target statistics: {msg} {equations(params)} {v[:3]} {v[-3:]}")
    return v


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20221001)
    ap.add_argument("--output", required=True)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    dates, y = shape(rng)
    values = solve_values()
    ranks = np.argsort(np.argsort(y, kind="stable"), kind="stable")
    series = np.round(values[ranks], 6)

    micro = np.rint(series * 1e6).astype(np.int64)
    with open(args.output, "w") as out:
        out.write("country,date,sector,value\n")
        for d, total in zip(dates, micro):
            doy = d.timetuple().tm_yday
            winter = np.cos(2 * np.pi * (doy - 10) / 365.25)
            shares = np.array([0.43 + 0.02 * winter, 0.0, 0.085, 0.075 + 0.03 * winter, 0.011, 0.004])
            parts = [int(round(total * s)) for s in shares]
            parts[1] = int(total) - sum(parts)
            for sector, part in zip(SECTORS, parts):
                out.write(f"China,{d.strftime('%d/%m/%Y')},{sector},{part // 10**6}.{part % 10**6:06d}\n")

    s = micro / 1e6
    print(f"n={len(s)} min={s.min():.6f} max={s.max():.6f} mean={s.mean():.6f} median={np.median(s):.6f} "
          f"total={s.sum():.6f} std={s.std(ddof=1):.6f} skew={stats.skew(s, bias=False):.6f} "
          f"kurt={stats.kurtosis(s, bias=False):.6f}")


if __name__ == "__main__":
    main()

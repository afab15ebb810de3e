#!/usr/bin/env python3
"""Writes the synthetic daily price and hash-rate histories used by the backtest
regression test. Output is fully determined by the seed."""
import argparse
import datetime as dt
import math
import random
from pathlib import Path

SEED = 20190609
START = dt.date(2016, 1, 1)
DAYS = 4 * 365

PRICE0 = 430.0
PRICE_DRIFT = 0.55     # per year
PRICE_VOL = 0.65       # per sqrt(year)
HASH0 = 7.5e17
HASH_GROWTH = 0.0032   # per day
HASH_NOISE = 0.02      # daily log noise


def generate(seed=SEED):
    rng = random.Random(seed)
    dt_year = 1.0 / 365.0
    price = PRICE0
    log_trend = math.log(HASH0)
    rows = []
    for day in range(DAYS):
        date = START + dt.timedelta(days=day)
        hash_rate = math.exp(log_trend + rng.gauss(0.0, HASH_NOISE))
        rows.append((date.isoformat(), price, hash_rate))
        z = rng.gauss(0.0, 1.0)
        price *= math.exp((PRICE_DRIFT - 0.5 * PRICE_VOL ** 2) * dt_year + PRICE_VOL * math.sqrt(dt_year) * z)
        log_trend += HASH_GROWTH
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args()
    rows = generate(args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "synthetic_prices.csv", "w", newline="\n") as f:
        f.write("date,price_usd\n")
        for d, p, _ in rows:
            f.write(f"{d},{p:.10g}\n")
    with open(args.out_dir / "synthetic_hashrate.csv", "w", newline="\n") as f:
        f.write("date,hashrate_hs\n")
        for d, _, h in rows:
            f.write(f"{d},{h:.10g}\n")


if __name__ == "__main__":
    main()

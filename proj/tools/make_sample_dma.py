#!/usr/bin/env python3
"""Writes the bundled synthetic DMA inputs (data/sample_dma/).

The real DMA-level panel this tool chain was designed for is proprietary, so
the repository ships a synthetic stand-in with the same shape: 79 DMAs, five
census-style covariates, a 60-day outcome series and daily snowfall. Outcome
levels are log-normal across DMAs (median near 13, 95th percentile near 60);
DMAs in the snow belt see one to three storms above 1 kg/m^2, and their
outcome series carry an anticipation bump in the days before each storm
followed by a dip on the storm day. The remaining DMAs never exceed
0.3 kg/m^2, so every DMA is either treatment-eligible or a control.

Usage: python3 tools/make_sample_dma.py [--seed 20160601] [--out data/sample_dma]
"""
import argparse
import pathlib

import numpy as np

N_DMA = 79
N_SNOW_BELT = 40
DAYS = 60
# Anticipation profile around a storm on day s, as a fraction of baseline:
# offsets -3, -2, -1, 0, +1.
STORM_PROFILE = {-3: 0.03, -2: 0.10, -1: 0.30, 0: -0.15, 1: -0.05}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20160601)
    ap.add_argument("--out", default="data/sample_dma")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    snow_belt = np.zeros(N_DMA, dtype=bool)
    snow_belt[rng.choice(N_DMA, N_SNOW_BELT, replace=False)] = True

    log_pop = rng.normal(np.log(1.2e6), 0.9, N_DMA)
    population = np.clip(np.exp(log_pop), 2.0e5, 2.0e7).round().astype(int)

    belt = snow_belt.astype(float)
    income = rng.normal(55000 + 4000 * belt, 9000, N_DMA).clip(30000, 95000)
    bachelor = rng.normal(28 + 2 * belt, 6, N_DMA).clip(12, 55)
    median_age = rng.normal(37 + 1.5 * belt, 2.5, N_DMA).clip(29, 47)
    urban = rng.normal(78 - 5 * belt, 10, N_DMA).clip(45, 99.5)
    household = rng.normal(2.55 - 0.05 * belt, 0.15, N_DMA).clip(2.1, 3.3)

    z = 0.35 * (log_pop - log_pop.mean()) / log_pop.std() + np.sqrt(1 - 0.35**2) * rng.normal(size=N_DMA)
    baseline = 13.0 * np.exp(1.15 * z)

    days = np.arange(1, DAYS + 1)
    weekly = 1.0 + 0.08 * np.sin(2 * np.pi * days / 7.0)

    dma_rows, panel_rows = [], []
    for i in range(N_DMA):
        dma_id = f"dma{i + 1:02d}"
        snow = np.zeros(DAYS)
        mu = baseline[i] * weekly * np.exp(rng.normal(0, 0.04, DAYS))
        if snow_belt[i]:
            n_storms = rng.integers(1, 4)
            storm_days = np.sort(rng.choice(np.arange(12, 56), n_storms, replace=False))
            for s in storm_days:
                size = rng.uniform(1.2, 12.0)
                snow[s - 1] = size
                for nb in (s - 1, s + 1):
                    if 1 <= nb <= DAYS and snow[nb - 1] == 0:
                        snow[nb - 1] = rng.uniform(0.0, 0.9)
                gain = np.clip(size / 6.0, 0.5, 1.5)
                for off, frac in STORM_PROFILE.items():
                    t = s + off
                    if 1 <= t <= DAYS:
                        mu[t - 1] += baseline[i] * gain * frac
        else:
            flurries = rng.random(DAYS) < 0.1
            snow[flurries] = rng.uniform(0.0, 0.25, flurries.sum())
        mu = np.maximum(mu, 0.0)

        dma_rows.append(
            f"{dma_id},{population[i]},{income[i]:.0f},{bachelor[i]:.2f},{median_age[i]:.2f},"
            f"{urban[i]:.2f},{household[i]:.3f}"
        )
        for t in days:
            panel_rows.append(f"{dma_id},{t},{mu[t - 1]:.3f},{snow[t - 1]:.3f}")

    (out / "dma.csv").write_text(
        "dma_id,population,median_income,pct_bachelor,median_age,pct_urban,persons_per_household\n"
        + "\n".join(dma_rows) + "\n"
    )
    (out / "dma_panel.csv").write_text(
        "dma_id,day,outcome,snowfall_kg_m2\n" + "\n".join(panel_rows) + "\n"
    )


if __name__ == "__main__":
    main()

"""
Reproducible experiments
========================

Every trial's noise comes from ``(master_seed, trial, link)``, so results
depend on the configuration alone.  The same harness backs the
``infovelocity`` command.
"""

from dataclasses import replace

from infovelocity.cli import main
from infovelocity.simulator import (SimConfig, bound_table_for, compare_to_bounds, run_trials,
                                    sweep)

# %%
cfg = SimConfig("onebit", 256, "1/48", trials=5000, master_seed=7)
summary = run_trials(cfg)
print(summary.estimate)
print(compare_to_bounds(summary, bound_table_for(cfg)))

# %%
# Worker count has no effect on the numbers.
print(run_trials(replace(cfg, parallelism=2)).estimate == summary.estimate)

# %%
for row in sweep(replace(cfg, trials=1000), m=[16, 64, 256, 1024]):
    print(row.config.m, row.estimate.rate, round(row.ratio_m_over_n, 3))

# %%
# The command-line front end writes the same rows as CSV.
main(["sweep", "--protocol", "p1", "--m", "64,256", "--p", "0.1", "--trials", "20"])

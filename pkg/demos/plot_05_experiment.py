"""
Batch experiments from a YAML file
==================================

The experiment runner sweeps protocol settings, seeds every run from
(seed_base, configuration, run) and aggregates accept rates with Wilson
intervals. The same file drives ``mmqss run``.
"""

from mmqss.experiment import loads_spec, report_to_table, run_experiment

spec = loads_spec("""
protocol:
  m: 2
  n: 2
  block_size: 512
  error_threshold: 0.1
  attack_plan:
    A2->B1: {kind: intercept_resend_random, coverage: 0.0}
runs: 50
seed_base: 11
sweep:
  - param: attack_plan.A2->B1.coverage
    values: [0.0, 0.05, 0.2, 1.0]
""")

report, records = run_experiment(spec)
print(report_to_table(report))

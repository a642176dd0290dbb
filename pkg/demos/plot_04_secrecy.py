"""
Who can learn the key
=====================

For a small accepted run we enumerate every symbol the missing parties could
have used and ask how well a coalition could guess each key bit. Coalitions
without a full group are left with one full bit of uncertainty.
"""

from mmqss.protocol import ProtocolConfig, run_protocol
from mmqss.secrecy import conditional_key_distribution, proper_coalitions, secrecy_check

outcome = run_protocol(ProtocolConfig(m=2, n=2, block_size=8, sample_fraction=0.1, rng_seed=5))
print("key bits:", outcome.key_bits)

for coalition in proper_coalitions(2, 2):
    report = secrecy_check(outcome, coalition)
    name = "+".join(report.coalition) or "(public only)"
    print(f"{name:<14} P(bit=1) {report.prob_one}  min-entropy {report.min_entropy:.2f}")

for group in (["A1", "A2"], ["B1", "B2"]):
    report = conditional_key_distribution(outcome, group)
    print(f"{'+'.join(group):<14} P(bit=1) {report.prob_one}  min-entropy {report.min_entropy:.2f}")

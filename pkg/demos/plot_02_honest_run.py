"""
An honest run
=============

Three Alices and two Bobs share one block of qubits. Each relay encodes its
private symbols, every hop sacrifices a random sample to estimate the error
rate, and at the end both groups reconstruct the same key.
"""

from mmqss.protocol import ProtocolConfig, run_protocol

config = ProtocolConfig(m=3, n=2, block_size=128, rng_seed=2024)
outcome = run_protocol(config)

print("verdict:", outcome.verdict)
for check in outcome.checks:
    print(f"  {check.stage:>6} at {check.party}: {check.samples:3d} samples, "
          f"{check.usable:3d} usable, error rate {check.error_rate:.3f}")

print("key positions:", len(outcome.key_positions))
print("Alice side:", "".join(map(str, outcome.alice_side_key.values)))
print("Bob side:  ", "".join(map(str, outcome.bob_side_key.values)))
print("agree:", outcome.keys_agree)

# The whole run is a pure function of the config, seed included
again = run_protocol(config)
print("transcript events:", len(outcome.transcript),
      "identical on rerun:", again.transcript.to_jsonl() == outcome.transcript.to_jsonl())

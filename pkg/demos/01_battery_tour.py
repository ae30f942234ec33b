"""Score a few sequences with the statistical test battery.

Run with ``python demos/01_battery_tour.py``.
"""
import numpy as np

from rlprng import sequence
from rlprng.nist import CALIBRATED_CONFIG, DEFAULT_CONFIG, eligibility_table, run_battery

rng = np.random.default_rng(0)

# which of the 15 tests can run on 80 bits
table = eligibility_table(80)
print("eligible at 80 bits:", [str(t) for t, ok in table.items() if ok])

fair = rng.integers(0, 2, 80).astype(np.uint8)
biased = (rng.random(80) < 0.8).astype(np.uint8)
ones = np.ones(80, dtype=np.uint8)

# a decimal sequence of ten signed bytes is 80 bits once encoded
decimal = [22, -113, 34, -111, 44, 42, 63, 114, -63, -41]
encoded = sequence.to_bits(decimal)
assert sequence.to_decimal(encoded).tolist() == decimal

for label, bits in [("fair", fair), ("biased", biased), ("all ones", ones),
                    ("decimal row", encoded)]:
    report = run_battery(bits)
    calibrated = run_battery(bits, CALIBRATED_CONFIG)
    print(f"{label:12s} score {report.score:.3f} (alpha 0.01)  "
          f"{calibrated.score:.3f} (alpha 0.35)")

# per-test detail for the fair sequence
for outcome in run_battery(fair, DEFAULT_CONFIG).outcomes:
    if outcome.p_values:
        print(f"  {str(outcome.test):28s} min P = {min(outcome.p_values):.4f}  "
              f"score {outcome.score:.3f}")

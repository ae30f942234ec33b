"""Walk through the two sequence-navigation environments by hand.

Run with ``python demos/02_navigation.py``.
"""
import numpy as np

from rlprng import mdp
from rlprng.nist import CALIBRATED_CONFIG

# decimal formulation: 10 signed bytes, 21 actions (+1 / -1 per position, or pass)
df = mdp.EnvConfig(mdp.Formulation.DECIMAL, mdp.RewardMode.EVERY_STEP,
                   length=10, horizon=30, battery=CALIBRATED_CONFIG)
state = mdp.reset(df)
print("DF actions:", mdp.action_set_size(df))
for action in (0, 0, 3, 20):
    tr = mdp.step(state, action, df)
    print(f"  action {action:2d} -> {tr.next_state.values.tolist()}  reward {tr.reward:.3f}")
    state = tr.next_state

# binary formulation: 80 bits, action 2n sets bit n to 1 and 2n + 1 sets it to 0
bf = mdp.EnvConfig(mdp.Formulation.BINARY, mdp.RewardMode.TERMINAL,
                   length=80, horizon=100, battery=CALIBRATED_CONFIG)
env = mdp.NavigationEnv(bf)
env.reset()
rng = np.random.default_rng(0)
total = 0.0
for t in range(bf.horizon):
    obs, reward, done = env.step(int(rng.integers(env.n_actions)))
    total += reward
print("BF random walk final bits:", "".join(map(str, env.final_bits())))
print(f"  only the last step is rewarded: total {total:.3f}")

"""Train the synthetic two-stream alignment task and print its trajectory.

Run: python3 notebooks/03_toy_alignment.py
"""

from hyro import toy

cfg = toy.ToyTaskConfig()
result = toy.train(cfg, 2000)
log = result.log
for t in (0, 1, 10, 100, 500, 1000, 2000):
    print(f"step {t:5d}  loss={log.loss[t]:.3e}  acc={log.accuracy[t]:.3f}  "
          f"angle={log.mean_angle[t]:.4f}  drift={log.radius_drift[t]:.1e}")
print("smoothed loss at T/2 and T:", log.smoothed_loss()[1000], log.smoothed_loss()[-1])

# freezing S keeps every radius where it started
frozen = toy.train(cfg, 500, train_scaling=False).log
print("rotation-only max radius drift:", max(frozen.radius_drift))

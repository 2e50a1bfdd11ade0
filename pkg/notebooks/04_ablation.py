"""Four-way ablation of the radius and rotation factors.

The default task is easy enough that every trained variant is perfect, so a
harder variant (more classes, bigger hidden rotation, more noise, diagonal S)
is shown as well. Takes about a minute.

Run: python3 notebooks/04_ablation.py
"""

from dataclasses import replace

from hyro import toy

base = toy.ToyTaskConfig()
tasks = {
    "default": base,
    "hard": replace(base, num_classes=32, samples_per_class=8, rotation_budget=2.0, noise=0.2, diagonal_scaling=True),
}
for name, cfg in tasks.items():
    print(f"== {name}")
    print(toy.format_ablation(toy.ablate(cfg, 2000)))

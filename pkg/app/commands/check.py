"""
Gradient Check Command
======================
Draws small seeded networks with mixed transfers and random datasets and
compares gradient_sd, 2 J^T q and the finite-difference oracles on each.
"""

from typing import Tuple

import numpy as np

from app.backprop import GradientCheck, gradient_check
from app.network import Dataset, LayerSpec, Mlp, Transfer, init_mlp

MAX_PARAMS = 30
MAX_PATTERNS = 10


def random_problem(seed: int) -> Tuple[Mlp, Dataset]:
    """A network with at most 30 parameters and a dataset of at most 10 patterns."""
    rng = np.random.default_rng(seed)
    kinds = list(Transfer)
    while True:
        input_size = int(rng.integers(1, 4))
        units = [int(u) for u in rng.integers(1, 4, size=int(rng.integers(1, 4)))]
        specs = [LayerSpec(units=u, transfer=kinds[int(rng.integers(len(kinds)))]) for u in units]
        sizes = [input_size, *units]
        if sum(sizes[i + 1] * (sizes[i] + 1) for i in range(len(units))) <= MAX_PARAMS:
            break

    mlp = init_mlp(input_size, specs, seed=seed, half_range=1.0)
    m = int(rng.integers(2, MAX_PATTERNS + 1))
    dataset = Dataset(
        patterns=rng.normal(size=(m, input_size)),
        targets=rng.uniform(-1.0, 1.0, size=(m, units[-1])),
    )
    return mlp, dataset


def check_gradients(instances: int = 20, seed: int = 0) -> int:
    worst = GradientCheck(0.0, 0.0, 0.0, 0.0)
    failures = 0
    for i in range(instances):
        mlp, dataset = random_problem(seed + i)
        result = gradient_check(mlp, dataset)
        if not result.passes():
            failures += 1
            print(f"instance {seed + i} failed: {result}")
        worst = GradientCheck(
            sd_vs_gn=max(worst.sd_vs_gn, result.sd_vs_gn),
            sd_vs_fd=max(worst.sd_vs_fd, result.sd_vs_fd),
            gn_vs_fd=max(worst.gn_vs_fd, result.gn_vs_fd),
            jacobian_vs_fd=max(worst.jacobian_vs_fd, result.jacobian_vs_fd),
        )

    print(f"checked {instances} networks, {failures} failed")
    print(f"max relative error  sd vs 2J^Tq: {worst.sd_vs_gn:.3e}")
    print(f"max relative error  sd vs fd:    {worst.sd_vs_fd:.3e}")
    print(f"max relative error  2J^Tq vs fd: {worst.gn_vs_fd:.3e}")
    print(f"max relative error  J vs fd:     {worst.jacobian_vs_fd:.3e}")
    return 0 if failures == 0 else 1

"""Random valid model configs for shape property tests."""

import numpy as np

from emoscale.model import ModelConfig, derive_shapes

RATIO_POOL = (0.5, 0.25, 0.2, 0.125, 0.0625, 0.05, 0.03125)


def random_valid_config(rng: np.random.Generator) -> ModelConfig:
    """Sample configs until one passes the build-time geometry checks."""
    while True:
        n_ratios = int(rng.integers(1, 5))
        ratios = tuple(sorted(rng.choice(RATIO_POOL, size=n_ratios, replace=False), reverse=True))
        cfg_kwargs = dict(
            fs=int(rng.integers(8, 65)),
            channels=int(rng.choice((4, 6, 8, 10, 12, 14))),
            window_samples=int(rng.integers(16, 97)),
            ratios=ratios,
            num_temporal_maps=int(rng.integers(1, 5)),
            num_spatial_maps=int(rng.integers(1, 5)),
            temporal_pool=int(rng.integers(1, 5)),
            spatial_pool=int(rng.integers(1, 4)),
            fusion_pool=int(rng.integers(1, 4)),
            hidden_units=int(rng.integers(1, 9)),
            dropout_rate=float(rng.choice((0.0, 0.3))),
        )
        if rng.random() < 0.25:
            cfg_kwargs["fusion_kernel_override"] = 7 + int(rng.integers(0, 3))
        try:
            cfg = ModelConfig(**cfg_kwargs)
            derive_shapes(cfg)
        except ValueError:
            continue
        return cfg

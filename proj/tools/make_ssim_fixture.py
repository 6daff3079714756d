#!/usr/bin/env python3
# Copyright 2026 The gs4d Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes two images and their SSIM as computed by scikit-image."""

import pathlib
import sys

import numpy as np
from skimage.metrics import structural_similarity


def main(out):
    out = pathlib.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20261014)
    a = rng.uniform(0, 1, (19, 23, 3))
    b = np.clip(a + rng.normal(0, 0.15, a.shape), 0, 1)
    s = structural_similarity(a, b, gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
                              data_range=1.0, channel_axis=2)
    (out / "ssim_a.f64").write_bytes(a.astype("<f8").tobytes())
    (out / "ssim_b.f64").write_bytes(b.astype("<f8").tobytes())
    (out / "ssim_value.txt").write_text(f"{s:.17g}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")

#!/usr/bin/env python3
# Copyright 2026 The gs4d Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the recorded prior-service exchange used by the wire-protocol tests.

The request images are defined by integer formulas that the C++ tests repeat;
the response payload is arbitrary and only ever compared bit for bit.
"""

import base64
import json
import pathlib
import sys

import numpy as np

W, H = 5, 4


def pattern(mul, mod, div, shift):
    img = np.zeros((H, W, 3), dtype=np.float64)
    for y in range(H):
        for x in range(W):
            for c in range(3):
                img[y, x, c] = ((x * mul[0] + y * mul[1] + c * mul[2]) % mod) / div - shift
    return img


def encode(img):
    return base64.b64encode(img.astype("<f4").tobytes()).decode("ascii")


def main(out):
    out = pathlib.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    x_t = pattern((7, 13, 29), 97, 48.0, 1.0)
    ref = pattern((3, 5, 11), 31, 30.0, 0.0)
    request = {
        "image": encode(x_t),
        "height": H,
        "width": W,
        "noise_level": 437,
        "condition": {
            "reference_image": encode(ref),
            "delta_azimuth_deg": 30.5,
            "delta_elevation_deg": -12.25,
            "delta_radius": 0.0,
        },
    }
    eps = np.sin(0.37 * np.arange(H * W * 3) + 0.1).reshape(H, W, 3).astype("<f4")
    response = {"epsilon_hat": encode(eps), "height": H, "width": W}
    (out / "prior_request.json").write_text(json.dumps(request, indent=1) + "\n")
    (out / "prior_response.json").write_text(json.dumps(response) + "\n")
    (out / "prior_epsilon.f32").write_bytes(eps.tobytes())


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures")

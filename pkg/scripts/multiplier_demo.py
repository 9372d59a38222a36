"""Ergodicity of products: rotations and odometers, checked against the direct fixed-vector search."""

import math

from ergolab import spaces, spectral


def rotation(alpha, K=30):
    return spaces.build_fourier_rotation(1, K, [alpha])[1]


def odometer(n, p):
    return spaces.koopman_of(spaces.build_odometer(n, p)[1])


CASES = {
    "rot(sqrt2-1) x rot(sqrt3-1)": (rotation(math.sqrt(2) - 1), rotation(math.sqrt(3) - 1)),
    "rot(a) x rot(2a)": (rotation(math.sqrt(2) - 1), rotation(2 * (math.sqrt(2) - 1))),
    "odometer(0.3) x odometer(0.5)": (odometer(4, 0.3), odometer(4, 0.5)),
    "odometer(0.3) x rot(sqrt2-1)": (odometer(4, 0.3), rotation(math.sqrt(2) - 1)),
}

if __name__ == "__main__":
    for name, (T, S) in CASES.items():
        v = spectral.multiplier_test(T, S)
        extra = f" witness {v.witness['mode']}" if v.witness else ""
        print(f"{name:32s} {v.verdict:12s} oracle agrees: {v.agrees_with_oracle}{extra}")

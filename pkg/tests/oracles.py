"""Independent reference computations used by the tests.

Nothing here imports from ``cohspec``.
"""
import cmath
import math

import numpy as np


def naive_dft(x):
    """O(L^2) one-sided amplitude-normalized DFT, bins 1 .. L/2, pure Python."""
    L = len(x)
    out = []
    for k in range(1, L // 2 + 1):
        acc = 0j
        for n, xn in enumerate(x):
            acc += xn * cmath.exp(-2j * math.pi * k * n / L)
        out.append(acc * (1.0 / L if k == L // 2 else 2.0 / L))
    return np.array(out)


def multisine_direct(amplitude, freqs_hz, phases, t):
    """``U0 * sum sin(2 pi f t + phi)`` evaluated straightforwardly."""
    t = np.asarray(t, dtype=float)
    return amplitude * sum(np.sin(2 * np.pi * f * t + p) for f, p in zip(freqs_hz, phases))

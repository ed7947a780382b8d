"""Periodized orthogonal discrete wavelet transform.

Only the Daubechies family members needed for denoising are tabulated.
Each analysis level is an orthogonal matrix, so the inverse is its
transpose and reconstruction is exact up to rounding.
"""

import numpy as np

# decomposition low-pass filters (minimum-phase spectral factors, to double precision)
_FILTERS = {
    "haar": np.array([0.7071067811865476, 0.7071067811865476]),
    "db2": np.array([-0.12940952255126037, 0.2241438680420134, 0.8365163037378079, 0.48296291314453416]),
    "db4": np.array(
        [
            -0.010597401785069032,
            0.0328830116668852,
            0.030841381835560764,
            -0.18703481171909309,
            -0.027983769416859854,
            0.6308807679298589,
            0.7148465705529157,
            0.2303778133088965,
        ]
    ),
}
_FILTERS["db1"] = _FILTERS["haar"]


def wavelet_filters(name):
    """Return ``(lowpass, highpass)`` analysis filters for ``name``."""
    try:
        h = _FILTERS[name]
    except KeyError:
        raise ValueError(f"unsupported wavelet {name!r}; choose from {sorted(_FILTERS)}") from None
    g = h[::-1] * (-1.0) ** np.arange(len(h))
    return h, g


def _indices(n, taps):
    return (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :]) % n


def dwt_step(x, wavelet="db4"):
    h, g = wavelet_filters(wavelet)
    x = np.asarray(x, dtype=float)
    if len(x) % 2:
        raise ValueError("periodized DWT needs an even-length input")
    idx = _indices(len(x), len(h))
    seg = x[idx]
    return seg @ h, seg @ g


def idwt_step(approx, detail, wavelet="db4"):
    h, g = wavelet_filters(wavelet)
    n = 2 * len(approx)
    idx = _indices(n, len(h))
    out = np.zeros(n)
    # transpose of the analysis operator; within one tap column the targets are distinct
    for j in range(len(h)):
        out[idx[:, j]] += approx * h[j] + detail * g[j]
    return out


def wavedec(x, wavelet="db4", level=5):
    """Multi-level decomposition: ``[cA_level, cD_level, ..., cD_1]``.

    ``len(x)`` must be divisible by ``2**level``.
    """
    x = np.asarray(x, dtype=float)
    if len(x) % (2**level):
        raise ValueError(f"length {len(x)} not divisible by 2**{level}")
    details = []
    a = x
    for _ in range(level):
        a, d = dwt_step(a, wavelet)
        details.append(d)
    return [a] + details[::-1]


def waverec(coeffs, wavelet="db4"):
    a = coeffs[0]
    for d in coeffs[1:]:
        a = idwt_step(a, d, wavelet)
    return a


def soft_threshold(x, thr):
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)

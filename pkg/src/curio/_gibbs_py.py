"""Pure-Python/numpy Gibbs sweeps; the reference the compiled kernels must match.

Both backends consume the same pre-drawn uniforms and perform the same
floating-point operations in the same order, so results are bit-identical.
"""

import numpy as np


def _draw(p, u):
    cum = np.cumsum(p)
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return k if k < p.shape[0] else p.shape[0] - 1


def train_sweep(words, docs, z, nwk, ndk, nk, alpha, beta, u):
    """One collapsed Gibbs sweep over every token, updating counts in place.

    ``nwk`` is word-major (V x K).
    """
    vbeta = nwk.shape[0] * beta
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        k = z[i]
        nwk[w, k] -= 1
        ndk[d, k] -= 1
        nk[k] -= 1
        p = (ndk[d] + alpha) * (nwk[w] + beta) / (nk + vbeta)
        k = _draw(p, u[i])
        z[i] = k
        nwk[w, k] += 1
        ndk[d, k] += 1
        nk[k] += 1


def foldin_sweep(words, docs, z, phi_wk, ndk, alpha, u):
    """One fold-in sweep against a frozen word-major topic-word matrix."""
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        ndk[d, z[i]] -= 1
        p = (ndk[d] + alpha) * phi_wk[w]
        k = _draw(p, u[i])
        z[i] = k
        ndk[d, k] += 1

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gibbs sweeps. Semantics mirror curio._gibbs_py exactly."""

from libc.stdlib cimport malloc, free


cdef inline Py_ssize_t _draw(double* p, double* cum, Py_ssize_t K, double u) noexcept nogil:
    # same as searchsorted(cumsum(p), u * total, side="right"), clamped
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(K):
        acc = acc + p[k]
        cum[k] = acc
    cdef double target = u * cum[K - 1]
    for k in range(K):
        if cum[k] > target:
            return k
    return K - 1


def train_sweep(const long long[::1] words, const long long[::1] docs, long long[::1] z,
                long long[:, ::1] nwk, long long[:, ::1] ndk, long long[::1] nk,
                double alpha, double beta, const double[::1] u):
    cdef Py_ssize_t N = words.shape[0]
    cdef Py_ssize_t K = nk.shape[0]
    cdef double vbeta = nwk.shape[0] * beta
    cdef Py_ssize_t i, k, j
    cdef long long w, d
    cdef double* p = <double*> malloc(2 * K * sizeof(double))
    if p == NULL:
        raise MemoryError()
    cdef double* cum = p + K
    try:
        with nogil:
            for i in range(N):
                w = words[i]
                d = docs[i]
                k = z[i]
                nwk[w, k] -= 1
                ndk[d, k] -= 1
                nk[k] -= 1
                for j in range(K):
                    p[j] = (<double> ndk[d, j] + alpha) * (<double> nwk[w, j] + beta) / (<double> nk[j] + vbeta)
                k = _draw(p, cum, K, u[i])
                z[i] = k
                nwk[w, k] += 1
                ndk[d, k] += 1
                nk[k] += 1
    finally:
        free(p)


def foldin_sweep(const long long[::1] words, const long long[::1] docs, long long[::1] z,
                 const double[:, ::1] phi_wk, long long[:, ::1] ndk, double alpha,
                 const double[::1] u):
    cdef Py_ssize_t N = words.shape[0]
    cdef Py_ssize_t K = phi_wk.shape[1]
    cdef Py_ssize_t i, k, j
    cdef long long w, d
    cdef double* p = <double*> malloc(2 * K * sizeof(double))
    if p == NULL:
        raise MemoryError()
    cdef double* cum = p + K
    try:
        with nogil:
            for i in range(N):
                w = words[i]
                d = docs[i]
                ndk[d, z[i]] -= 1
                for j in range(K):
                    p[j] = (<double> ndk[d, j] + alpha) * phi_wk[w, j]
                k = _draw(p, cum, K, u[i])
                z[i] = k
                ndk[d, k] += 1
    finally:
        free(p)

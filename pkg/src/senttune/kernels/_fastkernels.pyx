# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; mirrors _pykernels.py function for function.

Loops are fused so the hot elementwise/reduction paths avoid the temporary
arrays the numpy backend allocates.  Matrix products stay on BLAS in both
backends and are deliberately absent here.
"""

from libc.math cimport exp, log, sqrt, tanh, pow

import numpy as np

DEF SQRT_2_OVER_PI = 0.7978845608028654
DEF GELU_CUBIC = 0.044715


def softmax2d(double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], k = x.shape[1]
    out_arr = np.empty((n, k))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double m, s
    for i in range(n):
        m = x[i, 0]
        for j in range(1, k):
            if x[i, j] > m:
                m = x[i, j]
        s = 0.0
        for j in range(k):
            out[i, j] = exp(x[i, j] - m)
            s += out[i, j]
        for j in range(k):
            out[i, j] /= s
    return out_arr


def softmax2d_backward(double[:, ::1] p, double[:, ::1] gout):
    cdef Py_ssize_t n = p.shape[0], k = p.shape[1]
    gin_arr = np.empty((n, k))
    cdef double[:, ::1] gin = gin_arr
    cdef Py_ssize_t i, j
    cdef double dot
    for i in range(n):
        dot = 0.0
        for j in range(k):
            dot += p[i, j] * gout[i, j]
        for j in range(k):
            gin[i, j] = p[i, j] * (gout[i, j] - dot)
    return gin_arr


def layernorm2d(double[:, ::1] x, double[::1] gamma, double[::1] beta,
                double eps):
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    y_arr = np.empty((n, d))
    xhat_arr = np.empty((n, d))
    inv_arr = np.empty(n)
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] xhat = xhat_arr
    cdef double[::1] inv = inv_arr
    cdef Py_ssize_t i, j
    cdef double mu, var, dev, s
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += x[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            dev = x[i, j] - mu
            var += dev * dev
        var /= d
        s = 1.0 / sqrt(var + eps)
        inv[i] = s
        for j in range(d):
            xhat[i, j] = (x[i, j] - mu) * s
            y[i, j] = xhat[i, j] * gamma[j] + beta[j]
    return y_arr, xhat_arr, inv_arr


def layernorm2d_backward(double[:, ::1] gout, double[:, ::1] xhat,
                         double[::1] inv_std, double[::1] gamma):
    cdef Py_ssize_t n = gout.shape[0], d = gout.shape[1]
    gx_arr = np.empty((n, d))
    dgamma_arr = np.zeros(d)
    dbeta_arr = np.zeros(d)
    cdef double[:, ::1] gx = gx_arr
    cdef double[::1] dgamma = dgamma_arr
    cdef double[::1] dbeta = dbeta_arr
    cdef Py_ssize_t i, j
    cdef double m1, m2, dxh
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            dxh = gout[i, j] * gamma[j]
            m1 += dxh
            m2 += dxh * xhat[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            dxh = gout[i, j] * gamma[j]
            gx[i, j] = (dxh - m1 - xhat[i, j] * m2) * inv_std[i]
            dgamma[j] += gout[i, j] * xhat[i, j]
            dbeta[j] += gout[i, j]
    return gx_arr, dgamma_arr, dbeta_arr


def gelu(double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double v, u
    for i in range(n):
        v = x[i]
        u = SQRT_2_OVER_PI * (v + GELU_CUBIC * v * v * v)
        out[i] = 0.5 * v * (1.0 + tanh(u))
    return out_arr


def gelu_backward(double[::1] x, double[::1] gout):
    cdef Py_ssize_t n = x.shape[0]
    gin_arr = np.empty(n)
    cdef double[::1] gin = gin_arr
    cdef Py_ssize_t i
    cdef double v, v2, u, t, du
    for i in range(n):
        v = x[i]
        v2 = v * v
        u = SQRT_2_OVER_PI * (v + GELU_CUBIC * v2 * v)
        t = tanh(u)
        du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * v2)
        gin[i] = gout[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du)
    return gin_arr


def cross_entropy2d(double[:, ::1] logits, long[::1] labels):
    cdef Py_ssize_t n = logits.shape[0], k = logits.shape[1]
    p_arr = np.empty((n, k))
    cdef double[:, ::1] p = p_arr
    cdef Py_ssize_t i, j
    cdef double m, z, loss = 0.0
    for i in range(n):
        m = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > m:
                m = logits[i, j]
        z = 0.0
        for j in range(k):
            p[i, j] = exp(logits[i, j] - m)
            z += p[i, j]
        for j in range(k):
            p[i, j] /= z
        loss += (log(z) + m) - logits[i, labels[i]]
    return loss / n, p_arr


def cross_entropy2d_backward(double[:, ::1] p, long[::1] labels, double scale):
    cdef Py_ssize_t n = p.shape[0], k = p.shape[1]
    g_arr = np.empty((n, k))
    cdef double[:, ::1] g = g_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(k):
            g[i, j] = p[i, j] * scale
        g[i, labels[i]] -= scale
    return g_arr


def adam_update(double[::1] param, double[::1] grad, double[::1] m,
                double[::1] v, double lr, double beta1, double beta2,
                double eps, long t):
    cdef Py_ssize_t n = param.shape[0]
    cdef double c1 = 1.0 - pow(beta1, t)
    cdef double c2 = 1.0 - pow(beta2, t)
    cdef Py_ssize_t i
    cdef double g
    for i in range(n):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        param[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)


def embedding_backward(long[::1] ids, double[:, ::1] gout, long vocab_size):
    cdef Py_ssize_t n = gout.shape[0], d = gout.shape[1]
    table_arr = np.zeros((vocab_size, d))
    cdef double[:, ::1] table = table_arr
    cdef Py_ssize_t i, j
    cdef long row
    for i in range(n):
        row = ids[i]
        for j in range(d):
            table[row, j] += gout[i, j]
    return table_arr

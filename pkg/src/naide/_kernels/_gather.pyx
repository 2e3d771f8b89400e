#cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled context-gather kernel.

Copies the k x k window around each requested pixel of a pre-padded image
into a row of `out`, skipping the center entry and subtracting 0.5, in a
single pass. Arithmetic is identical to the numpy fallback, so both
backends produce bitwise-equal float64 results.
"""


def gather_contexts(double[:, ::1] padded, Py_ssize_t[::1] rows,
                    Py_ssize_t[::1] cols, Py_ssize_t k,
                    double[:, ::1] out):
    """Fill out[b] with the centered hole-context at (rows[b], cols[b]).

    rows/cols index the *padded* image and point at the top-left corner of
    each window (pixel coordinate in the original image). Caller guarantees
    shapes: out is (len(rows), k*k - 1) and every window fits in `padded`.
    """
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t hole = (k * k) // 2
    cdef Py_ssize_t b, i, j, r0, c0, idx
    with nogil:
        for b in range(n):
            r0 = rows[b]
            c0 = cols[b]
            idx = 0
            for i in range(k):
                for j in range(k):
                    if i * k + j == hole:
                        continue
                    out[b, idx] = padded[r0 + i, c0 + j] - 0.5
                    idx += 1
    return out.shape[0]

# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled register machine for expression programs.

Instruction ``i`` writes slot ``i``.  Opcodes and operand conventions match
``dwarp._vm_py``; both backends must produce bit-identical results.
"""
from libc.math cimport exp, log, sin, cos, sinh, cosh, sqrt, pow, floor, isfinite

DEF OP_CONST = 0
DEF OP_VAR = 1
DEF OP_ADD = 2
DEF OP_SUB = 3
DEF OP_MUL = 4
DEF OP_DIV = 5
DEF OP_NEG = 6
DEF OP_POW = 7
DEF OP_EXP = 8
DEF OP_LOG = 9
DEF OP_SIN = 10
DEF OP_COS = 11
DEF OP_SINH = 12
DEF OP_COSH = 13
DEF OP_SQRT = 14


cdef Py_ssize_t _run_one(const int[::1] op, const int[::1] a, const int[::1] b,
                         const double[::1] consts, const double[::1] x,
                         double[::1] slots) noexcept nogil:
    cdef Py_ssize_t i, n = op.shape[0]
    cdef double u, v, r
    for i in range(n):
        if op[i] == OP_CONST:
            r = consts[a[i]]
        elif op[i] == OP_VAR:
            r = x[a[i]]
        elif op[i] == OP_ADD:
            r = slots[a[i]] + slots[b[i]]
        elif op[i] == OP_SUB:
            r = slots[a[i]] - slots[b[i]]
        elif op[i] == OP_MUL:
            r = slots[a[i]] * slots[b[i]]
        elif op[i] == OP_DIV:
            v = slots[b[i]]
            if v == 0.0:
                return i
            r = slots[a[i]] / v
        elif op[i] == OP_NEG:
            r = -slots[a[i]]
        elif op[i] == OP_POW:
            u = slots[a[i]]
            v = consts[b[i]]
            if u < 0.0 and floor(v) != v:
                return i
            if u == 0.0 and v < 0.0:
                return i
            r = pow(u, v)
        elif op[i] == OP_EXP:
            r = exp(slots[a[i]])
        elif op[i] == OP_LOG:
            u = slots[a[i]]
            if u <= 0.0:
                return i
            r = log(u)
        elif op[i] == OP_SIN:
            r = sin(slots[a[i]])
        elif op[i] == OP_COS:
            r = cos(slots[a[i]])
        elif op[i] == OP_SINH:
            r = sinh(slots[a[i]])
        elif op[i] == OP_COSH:
            r = cosh(slots[a[i]])
        elif op[i] == OP_SQRT:
            u = slots[a[i]]
            if u < 0.0:
                return i
            r = sqrt(u)
        else:
            return i
        if not isfinite(r):
            return i
        slots[i] = r
    return -1


def run(const int[::1] op, const int[::1] a, const int[::1] b,
        const double[::1] consts, const double[::1] x,
        const int[::1] outs, double[::1] slots, double[::1] result):
    """Evaluate once; return -1 on success or the failing instruction index."""
    cdef Py_ssize_t k, status
    with nogil:
        status = _run_one(op, a, b, consts, x, slots)
        if status < 0:
            for k in range(outs.shape[0]):
                result[k] = slots[outs[k]]
    return status


def run_batch(const int[::1] op, const int[::1] a, const int[::1] b,
              const double[::1] consts, const double[:, ::1] xs,
              const int[::1] outs, double[::1] slots, double[:, ::1] result):
    """Evaluate at every row of ``xs``; return (row, instruction) of the first failure or (-1, -1)."""
    cdef Py_ssize_t row, k, status = -1
    with nogil:
        for row in range(xs.shape[0]):
            status = _run_one(op, a, b, consts, xs[row], slots)
            if status >= 0:
                break
            for k in range(outs.shape[0]):
                result[row, k] = slots[outs[k]]
    if status >= 0:
        return row, status
    return -1, -1

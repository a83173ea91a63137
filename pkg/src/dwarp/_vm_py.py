"""Pure-Python register machine; reference semantics for the compiled ``_vm``."""
import math

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POW = 7
OP_EXP = 8
OP_LOG = 9
OP_SIN = 10
OP_COS = 11
OP_SINH = 12
OP_COSH = 13
OP_SQRT = 14

_UNARY = {
    OP_EXP: math.exp,
    OP_SIN: math.sin,
    OP_COS: math.cos,
    OP_SINH: math.sinh,
    OP_COSH: math.cosh,
}

_isfinite = math.isfinite


def _run_one(op, a, b, consts, x, slots):
    for i, code in enumerate(op):
        try:
            if code == OP_CONST:
                r = consts[a[i]]
            elif code == OP_VAR:
                r = x[a[i]]
            elif code == OP_ADD:
                r = slots[a[i]] + slots[b[i]]
            elif code == OP_SUB:
                r = slots[a[i]] - slots[b[i]]
            elif code == OP_MUL:
                r = slots[a[i]] * slots[b[i]]
            elif code == OP_DIV:
                v = slots[b[i]]
                if v == 0.0:
                    return i
                r = slots[a[i]] / v
            elif code == OP_NEG:
                r = -slots[a[i]]
            elif code == OP_POW:
                u = slots[a[i]]
                v = consts[b[i]]
                if u < 0.0 and math.floor(v) != v:
                    return i
                if u == 0.0 and v < 0.0:
                    return i
                r = math.pow(u, v)
            elif code == OP_LOG:
                u = slots[a[i]]
                if u <= 0.0:
                    return i
                r = math.log(u)
            elif code == OP_SQRT:
                u = slots[a[i]]
                if u < 0.0:
                    return i
                r = math.sqrt(u)
            else:
                fn = _UNARY.get(code)
                if fn is None:
                    return i
                r = fn(slots[a[i]])
        except (OverflowError, ValueError):
            return i
        if not _isfinite(r):
            return i
        slots[i] = r
    return -1


def run(op, a, b, consts, x, outs, slots, result):
    """Evaluate once; return -1 on success or the failing instruction index."""
    op, a, b = op.tolist(), a.tolist(), b.tolist()
    consts, x = consts.tolist(), x.tolist()
    buf = [0.0] * len(op)
    status = _run_one(op, a, b, consts, x, buf)
    if status < 0:
        for k, s in enumerate(outs.tolist()):
            result[k] = buf[s]
    return status


def run_batch(op, a, b, consts, xs, outs, slots, result):
    """Evaluate at every row of ``xs``; return (row, instruction) of the first failure or (-1, -1)."""
    op, a, b = op.tolist(), a.tolist(), b.tolist()
    consts = consts.tolist()
    outs = outs.tolist()
    buf = [0.0] * len(op)
    for row, x in enumerate(xs.tolist()):
        status = _run_one(op, a, b, consts, x, buf)
        if status >= 0:
            return row, status
        result[row, :] = [buf[s] for s in outs]
    return -1, -1

# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled canonicalisation kernel.

Same contract as ``_canonkern_py.canonical_order``; keys must be
byte-identical between the two backends (the test suite asserts this).
"""


def canonical_order(list parents, list payloads):
    cdef Py_ssize_t n = len(parents)
    cdef Py_ssize_t v, p, i
    cdef list children = [[] for _ in range(n)]
    cdef list roots = []
    for v in range(n):
        p = parents[v]
        if p < 0:
            roots.append(v)
        else:
            (<list>children[p]).append(v)

    cdef list sigs = [b""] * n
    cdef list stack = []
    for i in range(len(roots) - 1, -1, -1):
        stack.append((roots[i], False))
    cdef tuple item
    cdef bint done
    cdef list kid_sigs
    cdef bytes pay
    while stack:
        item = stack.pop()
        v = item[0]
        done = item[1]
        if done:
            kid_sigs = sorted([sigs[c] for c in <list>children[v]])
            pay = payloads[v]
            sigs[v] = (
                str(len(pay)).encode() + b":" + pay + b"{" + b"".join(kid_sigs) + b"}"
            )
        else:
            stack.append((v, True))
            for c in <list>children[v]:
                stack.append((c, False))

    cdef list kids
    for v in range(n):
        kids = <list>children[v]
        kids.sort(key=sigs.__getitem__)
    roots.sort(key=sigs.__getitem__)

    cdef list order = []
    cdef list walk = list(reversed(roots))
    cdef list cs
    while walk:
        v = walk.pop()
        order.append(v)
        cs = <list>children[v]
        for i in range(len(cs) - 1, -1, -1):
            walk.append(cs[i])

    cdef bytes key = str(len(roots)).encode() + b"|" + b"".join(
        [sigs[r] for r in roots]
    )
    return order, key

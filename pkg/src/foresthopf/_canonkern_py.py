"""Pure-Python canonicalisation kernel.

Computes an AHU-style canonical ordering of a decorated rooted forest.  Each
node carries an opaque payload (its local decoration data, already serialised
to bytes); two forests get the same key iff there is a payload-preserving
rooted-forest isomorphism between them.

The compiled twin in ``_canonkern.pyx`` implements the identical algorithm;
both must produce byte-identical keys.
"""

from __future__ import annotations


def canonical_order(parents: list[int], payloads: list[bytes]) -> tuple[list[int], bytes]:
    """Return ``(order, key)`` for the forest given by parent links.

    ``order`` lists old node indices in canonical depth-first preorder (roots
    first, parents before children), ``key`` is the canonical serialisation.
    Signatures are length-prefixed so distinct structures can never collide:

        sig(v) = len(payload):payload{ sig(c_1) ... sig(c_k) }   (sigs sorted)
    """
    n = len(parents)
    children: list[list[int]] = [[] for _ in range(n)]
    roots: list[int] = []
    for v, p in enumerate(parents):
        if p < 0:
            roots.append(v)
        else:
            children[p].append(v)

    sigs: list[bytes] = [b""] * n
    # iterative post-order so deep chains cannot hit the recursion limit
    stack: list[tuple[int, bool]] = [(r, False) for r in reversed(roots)]
    while stack:
        v, done = stack.pop()
        if done:
            kid_sigs = sorted(sigs[c] for c in children[v])
            pay = payloads[v]
            sigs[v] = (
                str(len(pay)).encode() + b":" + pay + b"{" + b"".join(kid_sigs) + b"}"
            )
        else:
            stack.append((v, True))
            for c in children[v]:
                stack.append((c, False))

    for v in range(n):
        children[v].sort(key=lambda c: sigs[c])
    roots.sort(key=lambda r: sigs[r])

    order: list[int] = []
    walk: list[int] = list(reversed(roots))
    while walk:
        v = walk.pop()
        order.append(v)
        for c in reversed(children[v]):
            walk.append(c)

    key = str(len(roots)).encode() + b"|" + b"".join(sigs[r] for r in roots)
    return order, key

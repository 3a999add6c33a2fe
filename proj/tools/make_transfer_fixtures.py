#!/usr/bin/env python3
"""Writes the out-of-system lattice cross-sections used by the transfer run.

Each file holds a 20 mm square frame filled with a pattern the key grammar
cannot express. Output is the `B/S/A` curve text format.
"""
import math
import sys
from pathlib import Path

SIDE = 20.0


def clip(p, q):
    """Liang-Barsky clip of segment pq to the box; None when outside."""
    (x0, y0), (x1, y1) = p, q
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for pk, qk in ((-dx, x0), (dx, SIDE - x0), (-dy, y0), (dy, SIDE - y0)):
        if abs(pk) < 1e-15:
            if qk < 0:
                return None
            continue
        r = qk / pk
        if pk < 0:
            t0 = max(t0, r)
        else:
            t1 = min(t1, r)
    if t1 - t0 < 1e-9:
        return None
    return (x0 + t0 * dx, y0 + t0 * dy), (x0 + t1 * dx, y0 + t1 * dy)


def frame():
    c = [(0, 0), (SIDE, 0), (SIDE, SIDE), (0, SIDE)]
    return [(c[i], c[(i + 1) % 4]) for i in range(4)]


def on_frame(s):
    (x0, y0), (x1, y1) = s
    for v in (0.0, SIDE):
        if abs(x0 - v) < 1e-9 and abs(x1 - v) < 1e-9:
            return True
        if abs(y0 - v) < 1e-9 and abs(y1 - v) < 1e-9:
            return True
    return False


def honeycomb(a=3.2):
    segs = []
    w = math.sqrt(3) * a
    for row in range(-1, int(SIDE / (1.5 * a)) + 2):
        for col in range(-1, int(SIDE / w) + 2):
            cx = col * w + (w / 2 if row % 2 else 0.0)
            cy = row * 1.5 * a
            pts = [(cx + a * math.cos(math.pi / 6 + k * math.pi / 3),
                    cy + a * math.sin(math.pi / 6 + k * math.pi / 3)) for k in range(6)]
            for k in range(6):
                segs.append((pts[k], pts[(k + 1) % 6]))
    return segs


def triangular(pitch=5.0):
    segs = []
    for i in range(1, int(SIDE / pitch)):
        segs.append(((0.0, i * pitch), (SIDE, i * pitch)))
    h = math.tan(math.pi / 3)
    for i in range(-8, 9):
        x = i * pitch
        segs.append(((x, 0.0), (x + SIDE / h, SIDE)))
        segs.append(((x, 0.0), (x - SIDE / h, SIDE)))
    return segs


def unique(segs):
    out, seen = [], set()
    for p, q in segs:
        c = clip(p, q)
        if c is None or on_frame(c):
            continue
        key = tuple(sorted((tuple(round(v, 6) for v in c[0]), tuple(round(v, 6) for v in c[1]))))
        if key in seen:
            continue
        seen.add(key)
        out.append(c)
    return frame() + out


def write(path, segs, arcs=()):
    with open(path, "w") as f:
        f.write(f"B 0 0 {SIDE:g} 0\n")
        for (x0, y0), (x1, y1) in segs:
            f.write(f"S {x0:.17g} {y0:.17g} {x1:.17g} {y1:.17g}\n")
        for cx, cy, r, a0, sw in arcs:
            f.write(f"A {cx:.17g} {cy:.17g} {r:.17g} {a0:.17g} {sw:.17g}\n")


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write(out / "honeycomb.curves", unique(honeycomb()))
    write(out / "triangular.curves", unique(triangular()))
    c = SIDE / 2
    rings = [(c, c, r, 0.0, 2 * math.pi) for r in (3.0, 6.0, 9.0)]
    spokes = [((c + 3.0 * math.cos(a), c + 3.0 * math.sin(a)), (c + 9.0 * math.cos(a), c + 9.0 * math.sin(a)))
              for a in (math.pi / 4 + k * math.pi / 2 for k in range(4))]
    write(out / "rings.curves", frame() + spokes, rings)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/transfer")

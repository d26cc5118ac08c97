#!/usr/bin/env python3
"""Parameter count of the default cnn3d by dimension arithmetic alone.

Kept separate from the C++ model builder so the two can be checked
against each other. Prints the total, or per-layer lines with -v.
"""
import sys

frames, height, width, channels = 25, 224, 224, 3
filters = [32, 64]
dense = [128, 64]
k = 3

layers = []
c_in = channels
t, h, w = frames, height, width
for f in filters:
    layers.append((f"conv {c_in}->{f}", k * k * k * c_in * f + f))
    c_in = f
    t, h, w = t // 2, h // 2, w // 2  # same padding, then 2x2x2 pooling
flat = t * h * w * c_in
n_in = flat
for u in dense:
    layers.append((f"dense {n_in}->{u}", n_in * u + u))
    n_in = u
layers.append((f"dense {n_in}->1", n_in + 1))

if "-v" in sys.argv:
    print(f"flatten {t}x{h}x{w}x{c_in} = {flat}")
    for name, n in layers:
        print(f"{name}: {n}")
print(sum(n for _, n in layers))

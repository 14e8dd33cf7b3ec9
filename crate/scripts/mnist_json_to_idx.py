#!/usr/bin/env python3
"""Convert the per-digit JSON files of the npm `mnist` package to IDX.

Usage: mnist_json_to_idx.py <digits-dir> <out-dir>

Each `<digit>.json` holds {"data": [...]} with 784 intensities in [0, 1]
per image, concatenated. Writes `images.idx3-ubyte` and `labels.idx1-ubyte`.
"""
import json
import os
import struct
import sys

SIDE = 28


def main(src, dst):
    images = bytearray()
    labels = bytearray()
    for digit in range(10):
        with open(os.path.join(src, f"{digit}.json")) as f:
            flat = json.load(f)["data"]
        if len(flat) % (SIDE * SIDE):
            sys.exit(f"{digit}.json: length {len(flat)} is not a multiple of {SIDE * SIDE}")
        images.extend(min(255, max(0, round(v * 255))) for v in flat)
        labels.extend([digit] * (len(flat) // (SIDE * SIDE)))
    count = len(labels)
    os.makedirs(dst, exist_ok=True)
    with open(os.path.join(dst, "images.idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 2051, count, SIDE, SIDE))
        f.write(images)
    with open(os.path.join(dst, "labels.idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 2049, count))
        f.write(labels)
    print(f"wrote {count} images to {dst}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])

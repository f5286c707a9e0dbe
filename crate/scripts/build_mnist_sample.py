#!/usr/bin/env python3
"""Build a 10k-digit MNIST sample in IDX format from two redistributable packages.

The official MNIST mirrors are not always reachable. This script assembles an
IDX-formatted sample from:

  * the `mnist` npm package (10,000 grey-level MNIST digits, stored as floats)
  * the `mlxtend` wheel (5,000 of those digits as uint8 CSV, 500 per class)

The mlxtend digits become the training file; the remaining 5,000 digits of the
npm package become the held-out test file. Output goes to data/mnist/.

Usage:
    npm pack mnist@1.1.0 && pip download mlxtend==0.24.0 --no-deps
    python3 scripts/build_mnist_sample.py mnist-1.1.0.tgz mlxtend-0.24.0-py3-none-any.whl
"""
import gzip
import io
import json
import random
import struct
import sys
import tarfile
import zipfile
from pathlib import Path


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + bytes(payload))


def main():
    npm_tgz, wheel = sys.argv[1], sys.argv[2]
    out = Path(__file__).resolve().parent.parent / "data" / "mnist"
    out.mkdir(parents=True, exist_ok=True)

    pool = []
    with tarfile.open(npm_tgz) as tar:
        for digit in range(10):
            member = tar.extractfile(f"package/src/digits/{digit}.json")
            data = json.load(member)["data"]
            for start in range(0, len(data), 784):
                pixels = bytes(int(round(v * 255)) for v in data[start:start + 784])
                pool.append((pixels, digit))

    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    train = []
    for line in raw.splitlines():
        vals = [int(float(v)) for v in line.split(",")]
        train.append((bytes(vals[:784]), vals[784]))

    train_keys = {p for p, _ in train}
    test = [(p, y) for p, y in pool if p not in train_keys]
    random.Random(0).shuffle(test)

    for name, rows in (("train", train), ("t10k", test)):
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, (len(rows), 28, 28),
                  b"".join(p for p, _ in rows))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, (len(rows),),
                  bytes(y for _, y in rows))
        print(f"{name}: {len(rows)} images")


if __name__ == "__main__":
    main()

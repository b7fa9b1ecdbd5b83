#!/usr/bin/env python3
# Copyright 2026 The islab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts the MNIST IDX files to CSV with pixels scaled to [0, 1].

Writes mnist_train.csv and mnist_test.csv with columns p0..p783,label.
"""

import argparse
import gzip
import os
import struct
import sys


def open_idx(directory, stem):
    for name in (stem, stem + ".gz"):
        path = os.path.join(directory, name)
        if os.path.exists(path):
            return gzip.open(path, "rb") if name.endswith(".gz") else open(path, "rb")
    raise FileNotFoundError(os.path.join(directory, stem))


def read_images(directory, stem):
    with open_idx(directory, stem) as f:
        magic, n, rows, cols = struct.unpack(">IIII", f.read(16))
        if magic != 2051:
            raise ValueError(f"{stem}: bad magic {magic}")
        data = f.read(n * rows * cols)
    size = rows * cols
    return [data[i * size:(i + 1) * size] for i in range(n)], size


def read_labels(directory, stem):
    with open_idx(directory, stem) as f:
        magic, n = struct.unpack(">II", f.read(8))
        if magic != 2049:
            raise ValueError(f"{stem}: bad magic {magic}")
        return list(f.read(n))


def pixel(v):
    return "0" if v == 0 else ("1" if v == 255 else "%.6g" % (v / 255.0))


def convert(directory, prefix, out_path):
    images, size = read_images(directory, prefix + "-images-idx3-ubyte")
    labels = read_labels(directory, prefix + "-labels-idx1-ubyte")
    if len(images) != len(labels):
        raise ValueError(f"{prefix}: {len(images)} images but {len(labels)} labels")
    table = [pixel(v) for v in range(256)]
    tmp = out_path + ".tmp"
    with open(tmp, "w") as out:
        out.write(",".join(f"p{i}" for i in range(size)) + ",label\n")
        for img, label in zip(images, labels):
            out.write(",".join(table[v] for v in img))
            out.write(f",{label}\n")
    os.replace(tmp, out_path)
    return len(images)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("idx_dir", help="directory with the four IDX files (optionally .gz)")
    parser.add_argument("out_dir", help="where to write mnist_train.csv and mnist_test.csv")
    parser.add_argument("--force", action="store_true", help="rewrite existing CSV files")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for prefix, name in (("train", "mnist_train.csv"), ("t10k", "mnist_test.csv")):
        path = os.path.join(args.out_dir, name)
        if os.path.exists(path) and not args.force:
            print(f"{path} exists, skipping")
            continue
        n = convert(args.idx_dir, prefix, path)
        print(f"wrote {n} rows to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

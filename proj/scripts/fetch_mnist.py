#!/usr/bin/env python3
"""Fetch MNIST digits and write them as IDX files.

No direct internet access is assumed: the digits come from the `mnist` npm
package (10000 real MNIST samples stored as [0,1]-normalized JSON arrays,
three decimals). Each value is mapped back to its byte with round(v * 255),
which is exact for the stored precision. Samples are shuffled with a fixed
seed and split into a train and a test file pair.
"""
import argparse
import json
import random
import struct
import subprocess
import tarfile
import tempfile
from pathlib import Path

PIXELS = 28 * 28


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def load_package(tgz):
    samples = []
    with tarfile.open(tgz) as tar:
        for digit in range(10):
            member = tar.extractfile(f"package/src/digits/{digit}.json")
            data = json.load(member)["data"]
            assert len(data) % PIXELS == 0
            for k in range(len(data) // PIXELS):
                chunk = data[k * PIXELS:(k + 1) * PIXELS]
                samples.append(([int(round(v * 255)) for v in chunk], digit))
    return samples


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "mnist"))
    ap.add_argument("--tgz", help="use an already downloaded mnist-*.tgz")
    ap.add_argument("--test-count", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20190501)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tgz = args.tgz
        if tgz is None:
            subprocess.run(["npm", "pack", "mnist@1.1.0", "--silent"], cwd=tmp, check=True,
                           stdout=subprocess.DEVNULL)
            tgz = next(Path(tmp).glob("mnist-*.tgz"))
        samples = load_package(tgz)

    random.Random(args.seed).shuffle(samples)
    test, train = samples[:args.test_count], samples[args.test_count:]
    write_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test samples to {out}")


if __name__ == "__main__":
    main()

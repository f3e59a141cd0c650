"""Build the small IDX fixtures under tests/fixtures from data/mnist.

tests/fixtures/mini: the first 60 training and first 30 test images.
tests/fixtures/zero-images-idx3-ubyte: one all-black image (label file alongside).
"""
import argparse
import pathlib
import struct


def read_images(path):
    raw = path.read_bytes()
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    assert magic == 0x803 and rows == 28 and cols == 28
    return [raw[16 + i * 784:16 + (i + 1) * 784] for i in range(n)]


def read_labels(path):
    raw = path.read_bytes()
    magic, n = struct.unpack(">II", raw[:8])
    assert magic == 0x801
    return list(raw[8:8 + n])


def write_images(path, images):
    path.write_bytes(struct.pack(">IIII", 0x803, len(images), 28, 28) + b"".join(images))


def write_labels(path, labels):
    path.write_bytes(struct.pack(">II", 0x801, len(labels)) + bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", default="data/mnist", type=pathlib.Path)
    ap.add_argument("--out", default="tests/fixtures", type=pathlib.Path)
    args = ap.parse_args()

    mini = args.out / "mini"
    mini.mkdir(parents=True, exist_ok=True)
    for split, count in (("train", 60), ("t10k", 30)):
        images = read_images(args.data / f"{split}-images-idx3-ubyte")[:count]
        labels = read_labels(args.data / f"{split}-labels-idx1-ubyte")[:count]
        write_images(mini / f"{split}-images-idx3-ubyte", images)
        write_labels(mini / f"{split}-labels-idx1-ubyte", labels)

    write_images(args.out / "zero-images-idx3-ubyte", [bytes(784)])
    write_labels(args.out / "zero-labels-idx1-ubyte", [0])


if __name__ == "__main__":
    main()

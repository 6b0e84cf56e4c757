#!/usr/bin/env python3
"""Build the small MNIST IDX fixture used by the test suite.

Source: the `mnist` npm package (MIT, https://github.com/cazala/mnist), which
ships real MNIST digits as JSON arrays of 784 intensities in [0, 1] quantized
to 1/255. Usage:

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_fixture.py package/src/digits tests/data
"""
import json
import random
import struct
import sys
from pathlib import Path

DIGITS = (0, 1, 7)
PER_DIGIT = 200
SEED = 2024


def main(src: Path, dst: Path) -> None:
    samples = []
    for digit in DIGITS:
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        for k in range(PER_DIGIT):
            pixels = raw[k * 784:(k + 1) * 784]
            samples.append((digit, bytes(round(v * 255) for v in pixels)))
    random.Random(SEED).shuffle(samples)

    dst.mkdir(parents=True, exist_ok=True)
    with open(dst / "mnist017-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
        for _, img in samples:
            f.write(img)
    with open(dst / "mnist017-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(samples)))
        f.write(bytes(label for label, _ in samples))


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))

#!/usr/bin/env python3
"""Generate a desk-scale 28x28 handwritten-digit dataset in MNIST IDX format.

Source images are the bundled scikit-learn (UCI) 8x8 handwritten digits,
upsampled to 28x28 and augmented with deterministic integer shifts so the
train split reaches 10k samples.  The base images are split into disjoint
train/test pools before augmentation, so no test digit is a shifted copy
of a training digit.

Output files (MNIST naming):
  train-images-idx3-ubyte  train-labels-idx1-ubyte   (10000 samples)
  t10k-images-idx3-ubyte   t10k-labels-idx1-ubyte    (1500 samples)

Usage: make_digits_idx.py OUTPUT_DIR [--train N] [--test N] [--seed S]
"""

import argparse
import os
import struct
import sys

import numpy as np


def upsample_28(img8):
    """8x8 [0,16] -> 28x28 [0,255] by bilinear interpolation."""
    x = np.asarray(img8, dtype=np.float64).reshape(8, 8) / 16.0
    # pad with a zero border so digits sit inside the 28x28 frame like MNIST
    src = np.zeros((10, 10))
    src[1:9, 1:9] = x
    coords = (np.arange(22) + 0.5) * (10.0 / 22.0) - 0.5
    c0 = np.clip(np.floor(coords).astype(int), 0, 9)
    c1 = np.clip(c0 + 1, 0, 9)
    f = coords - np.floor(coords)
    rows = src[c0][:, c0] * np.outer(1 - f, 1 - f) + \
        src[c1][:, c0] * np.outer(f, 1 - f) + \
        src[c0][:, c1] * np.outer(1 - f, f) + \
        src[c1][:, c1] * np.outer(f, f)
    out = np.zeros((28, 28))
    out[3:25, 3:25] = rows
    return np.clip(out * 255.0, 0, 255).astype(np.uint8)


def shift(img, dy, dx):
    out = np.zeros_like(img)
    ys = slice(max(0, dy), min(28, 28 + dy))
    xs = slice(max(0, dx), min(28, 28 + dx))
    ys_src = slice(max(0, -dy), min(28, 28 - dy))
    xs_src = slice(max(0, -dx), min(28, 28 - dx))
    out[ys, xs] = img[ys_src, xs_src]
    return out


def augment(pool_imgs, pool_labels, n, rng):
    imgs, labels = [], []
    k = 0
    while len(imgs) < n:
        i = k % len(pool_imgs)
        k += 1
        img = pool_imgs[i]
        if k > len(pool_imgs):  # first pass is verbatim
            dy, dx = rng.integers(-2, 3, size=2)
            img = shift(img, int(dy), int(dx))
        imgs.append(img)
        labels.append(pool_labels[i])
    order = rng.permutation(n)
    return [imgs[i] for i in order], [labels[i] for i in order]


def write_idx(images, labels, img_path, lbl_path):
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(img.tobytes())
    with open(lbl_path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(int(l) for l in labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=10000)
    ap.add_argument("--test", type=int, default=1500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    from sklearn.datasets import load_digits
    digits = load_digits()
    rng = np.random.default_rng(args.seed)

    n = len(digits.target)
    order = rng.permutation(n)
    n_test_pool = max(200, n // 6)
    test_pool = order[:n_test_pool]
    train_pool = order[n_test_pool:]

    base = [upsample_28(img) for img in digits.data]
    train_imgs, train_lbls = augment([base[i] for i in train_pool],
                                     [digits.target[i] for i in train_pool],
                                     args.train, rng)
    test_imgs, test_lbls = augment([base[i] for i in test_pool],
                                   [digits.target[i] for i in test_pool],
                                   args.test, rng)

    os.makedirs(args.out_dir, exist_ok=True)
    write_idx(train_imgs, train_lbls,
              os.path.join(args.out_dir, "train-images-idx3-ubyte"),
              os.path.join(args.out_dir, "train-labels-idx1-ubyte"))
    write_idx(test_imgs, test_lbls,
              os.path.join(args.out_dir, "t10k-images-idx3-ubyte"),
              os.path.join(args.out_dir, "t10k-labels-idx1-ubyte"))
    print(f"wrote {len(train_imgs)} train / {len(test_imgs)} test samples "
          f"to {args.out_dir}", file=sys.stderr)


if __name__ == "__main__":
    main()

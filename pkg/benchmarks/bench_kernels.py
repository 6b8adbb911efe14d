"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Shapes follow a GA generation on the default synthetic run: 64 chromosomes,
540 training rows, a 9-12-6 network.
"""
import argparse
import timeit

import numpy as np

from rufmine import kernels
from rufmine._accel import HAVE_NUMBA
from rufmine.network import random_network


def cases(rng, pop=64, rows=540, sizes=(9, 12, 6)):
    nets = [random_network(list(sizes), rng, scale=4.0) for _ in range(pop)]
    flats = [n.flat() for n in nets]
    w = np.stack([f[0] for f in flats])
    p = np.stack([f[1] for f in flats]).astype(np.uint8)
    b = np.stack([f[2] for f in flats])
    s = np.asarray(sizes, dtype=np.int64)
    X9 = rng.uniform(size=(pop, rows, sizes[0]))
    X3 = rng.uniform(size=(rows, 3))
    c = rng.uniform(size=(pop, 3, 3))
    r = rng.uniform(0.2, 1.0, size=(pop, 3, 3))
    bits = rng.integers(0, 2, size=(pop, 17 * 200), dtype=np.uint8)
    starts = np.arange(0, 17 * 200, 17, dtype=np.int64)
    return {
        "batch_forward": ((w, p, b, s, X9), kernels.batch_forward_nb, kernels.batch_forward_np),
        "fuzzify_batch": ((X3, c, r), kernels.fuzzify_batch_nb, kernels.fuzzify_batch_np),
        "decode_words": ((bits, starts), kernels.decode_words_nb, kernels.decode_words_np),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=10)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print("%-14s %12s %12s %8s" % ("kernel", "numba ms", "numpy ms", "speedup"))
    for name, (call_args, nb, npf) in cases(rng).items():
        t_np = min(timeit.repeat(lambda: npf(*call_args), number=args.number, repeat=args.repeat))
        if HAVE_NUMBA:
            nb(*call_args)  # compile outside the timed region
            t_nb = min(timeit.repeat(lambda: nb(*call_args), number=args.number, repeat=args.repeat))
            print("%-14s %12.3f %12.3f %7.1fx" % (name, 1e3 * t_nb / args.number,
                                                  1e3 * t_np / args.number, t_np / t_nb))
        else:
            print("%-14s %12s %12.3f %8s" % (name, "n/a", 1e3 * t_np / args.number, "-"))


if __name__ == "__main__":
    main()

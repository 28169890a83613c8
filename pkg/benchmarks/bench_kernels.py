"""Time the numba and numpy kernel paths on representative sizes.

    python benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from g2lcomp import _kernels
from g2lcomp.selector import compress_image
from g2lcomp.layout import CropLayout
from g2lcomp.tensor_io import CompressionConfig

CASES = {
    # LLaVA-NeXT thumbnail 24x24 upsampled for a 2x2 crop grid
    "upsample 24x24->48x48": ("upsample", lambda r: (r.random((24, 24)), 48, 48)),
    # LLaVA-OneVision 27x27 thumbnail, 6x6 crop grid
    "upsample 27x27->162x162": ("upsample", lambda r: (r.random((27, 27)), 162, 162)),
    "neg_cosine 2880x4096": ("neg_cosine", lambda r: (r.standard_normal((2880, 4096)),
                                                      r.standard_normal(4096))),
    "neg_cosine 32x729x1152": ("neg_cosine", lambda r: (r.standard_normal((32 * 729, 1152)),
                                                        r.standard_normal(1152))),
    "offdiag_mean 576x576": ("offdiag_row_mean", lambda r: (r.random((576, 576)),)),
}


def bench(fn, args, repeat):
    fn(*args)  # compile / warm caches
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=20)
    opts = p.parse_args()
    rng = np.random.default_rng(0)
    if not _kernels.HAVE_NUMBA:
        print("numba path unavailable (G2L_DISABLE_NUMBA set or numba missing); numpy only")
    print(f"{'kernel':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, (kernel, make) in CASES.items():
        args = make(rng)
        t_np = bench(getattr(_kernels, f"{kernel}_numpy"), args, opts.repeat)
        if _kernels.HAVE_NUMBA:
            t_nb = bench(getattr(_kernels, f"{kernel}_numba"), args, opts.repeat)
            print(f"{name:28s} {t_np * 1e3:10.3f} {t_nb * 1e3:10.3f} {t_np / t_nb:8.2f}")
        else:
            print(f"{name:28s} {t_np * 1e3:10.3f} {'-':>10s} {'-':>8s}")

    lay = CropLayout(2, 2, 24, 24)
    thumb, crops = rng.random((24, 24)), list(rng.random((4, 24, 24)))
    cfg = CompressionConfig(0.25)
    t = bench(lambda: compress_image(thumb, crops, lay, cfg), (), opts.repeat)
    print(f"compress_image 2x2 of 24x24 ({_kernels.BACKEND}): {t * 1e3:.3f} ms")


if __name__ == "__main__":
    main()

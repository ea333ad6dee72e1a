"""Compiled vs numpy kernels, plus one forward pass per backend.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import importlib
import os
import timeit

import numpy as np

from clutterseg.kernels import _pykernels

try:
    from clutterseg.kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    pts = rng.uniform(-50, 50, (1280, 2))
    centers = pts[:256]
    vals = rng.normal(size=(256 * 32, 64))
    idx = rng.integers(0, 1280, 256 * 32)
    return {
        "fps 1280->256": lambda k: k.fps(pts, 256, 0),
        "ball_query 256x32 r=3": lambda k: k.ball_query(pts, centers, 3.0, 32),
        "three_nn 1280<-256": lambda k: k.three_nn(pts, centers, 3),
        "scatter_add 8192x64": lambda k: k.scatter_add(1280, idx, vals),
    }


def forward_time(backend, repeat):
    os.environ["CLUTTERSEG_KERNELS"] = backend
    import clutterseg.kernels
    import clutterseg.net.model as model_mod

    importlib.reload(clutterseg.kernels)
    importlib.reload(model_mod)
    from clutterseg.net import variant_b

    cfg = variant_b()
    rng = np.random.default_rng(0)
    m = model_mod.Model.create(cfg, seed=0)
    feats = rng.normal(size=(cfg.n_points, 11))
    pos = rng.uniform(-50, 50, (cfg.n_points, 2))
    run = lambda: model_mod.forward(m, feats, pos, rng=np.random.default_rng(0))  # noqa: E731
    return min(timeit.repeat(run, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    impls = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':<24}" + "".join(f"{n:>12}" for n, _ in impls) + ("     speedup" if len(impls) == 2 else ""))
    for name, fn in cases(rng).items():
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) * 1e3 for _, k in impls]
        row = f"{name:<24}" + "".join(f"{t:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)
    backends = ["python"] + (["cython"] if _ckernels else [])
    times = [forward_time(b, args.repeat) * 1e3 for b in backends]
    print(f"{'forward variant B (330)':<24}" + "".join(f"{t:>10.2f}ms" for t in times)
          + (f"{times[0] / times[1]:>11.1f}x" if len(times) == 2 else ""))


if __name__ == "__main__":
    main()

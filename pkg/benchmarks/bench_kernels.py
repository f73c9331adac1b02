"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Numba timings exclude the first (compiling) call.
"""
import argparse
import time

import numpy as np

from electrogp.kernels import numba_impl, numpy_impl


def cases(rng):
    existing = np.sort(rng.uniform(0, 1, 200))
    query = rng.uniform(0, 1, 100_000)
    xs = np.sort(rng.uniform(0, 1, 400))
    pts = rng.standard_normal((5_000, 2))
    verts = np.cumsum(rng.standard_normal((512, 2)) * 0.05, axis=0)
    lo = np.sort(rng.uniform(0, 1, 4096))
    width = np.full(4096, 1e-4)
    log_env = np.zeros(4096)
    u_pos = rng.random((8, 4096))
    u_acc = rng.random((8, 4096))
    props = rng.uniform(0, 1, 200_000)
    lp = -((props - 0.3) ** 2) * 50
    log_u = np.log(rng.random(props.size))
    # Gradient terms of a d=400, n=100 fit, the size of the image-sequence problem.
    d, n = 400, 100
    x = np.sort(rng.uniform(0, 1, n))
    k = np.exp(-8.0 * (x[:, None] - x[None]) ** 2)[None].repeat(d, 0)
    m = rng.standard_normal((n, n))
    kinv = np.tril(np.linalg.inv(m @ m.T + n * np.eye(n)))[None].repeat(d, 0)
    grad_args = (kinv, rng.standard_normal((d, n)), k, x, np.full(d, 8.0), np.full(d, 0.01), np.full(d, 1e-10), 1.0, 1.0)
    return {
        "corp_conditional_logdens": (query, existing, 2.0),
        "corp_joint_logdens": (xs, 2.0),
        "corp_joint_grad": (xs, 2.0),
        "corp_rejection_round": (lo, width, log_env, existing, 2.0, u_pos, u_acc),
        "polyline_distances": (pts, verts),
        "mh_independence_chain": (props, lp, log_u, 0.5, lp[0]),
        "se_grad_terms": grad_args,
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if numba_impl is None:
        raise SystemExit("numba backend disabled (ELECTROGP_NUMBA=0 or numba missing)")
    print(f"{'kernel':28s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, a in cases(np.random.default_rng(args.seed)).items():
        fnp, fnb = getattr(numpy_impl, name), getattr(numba_impl, name)
        fnb(*a)
        tn = best_of(fnp, a, args.repeat)
        tb = best_of(fnb, a, args.repeat)
        print(f"{name:28s} {tn * 1e3:10.2f} {tb * 1e3:10.2f} {tn / tb:8.1f}")


if __name__ == "__main__":
    main()

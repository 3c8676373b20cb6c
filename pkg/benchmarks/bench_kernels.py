"""Compare the numba and numpy implementations of the hot grid kernels.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
checked for identical output before timing; numba compile time is excluded
by a warm-up call. Also times one full mission per backend when ``--mission``
is given (that part re-imports the package in a subprocess so the env flag
takes effect).
"""
import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from ghacpp import kernels
from ghacpp._jit import HAVE_NUMBA
from ghacpp.footprint import DisinfectionFootprint


def make_inputs(seed=0):
    rng = np.random.default_rng(seed)
    res = 0.05
    solid = np.zeros((120, 290), dtype=bool)
    solid[0, :] = solid[-1, :] = solid[:, 0] = solid[:, -1] = True
    for _ in range(25):
        i, j = rng.integers(5, 110), rng.integers(5, 280)
        solid[i : i + 6, j : j + 6] = True
    angles = np.arange(720) * (2 * math.pi / 720)
    fp = DisinfectionFootprint()
    di, dj = fp.mask(0.0, res)
    ci = rng.integers(20, 100, size=2000).astype(np.int64)
    cj = rng.integers(20, 270, size=2000).astype(np.int64)
    free = ~solid
    grid = rng.random(solid.shape) < 0.5
    return dict(res=res, solid=solid, angles=angles, di=di, dj=dj, ci=ci, cj=cj, free=free, grid=grid)


def cases(inp):
    res, solid, angles = inp["res"], inp["solid"], inp["angles"]
    di, dj, ci, cj = inp["di"], inp["dj"], inp["ci"], inp["cj"]
    odi, odj = kernels.disc_offsets(0.30, res)

    def sweep(fn):
        known = np.zeros(solid.shape, dtype=np.uint8)
        fn(solid, known, res, 1.0, 1.0, angles, 8.0)
        return known

    def stamp(fn):
        dis = np.zeros(solid.shape, dtype=bool)
        n = 0
        for k in range(0, len(ci), 10):
            n += fn(dis, inp["free"], int(ci[k]), int(cj[k]), di, dj)
        return dis, n

    return {
        "sweep_rays (720 rays)": (lambda: sweep(kernels.sweep_rays_nb), lambda: sweep(kernels.sweep_rays_np)),
        "inflate 0.30 m": (lambda: kernels.inflate_nb(solid, odi, odj), lambda: kernels.inflate_np(solid, odi, odj)),
        "mask_sum (2000 poses)": (
            lambda: kernels.mask_sum_nb(inp["grid"], ci, cj, di, dj),
            lambda: kernels.mask_sum_np(inp["grid"], ci, cj, di, dj),
        ),
        "stamp (200 poses)": (lambda: stamp(kernels.stamp_nb), lambda: stamp(kernels.stamp_np)),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def bench_kernels(repeat):
    inp = make_inputs()
    print(f"{'kernel':<24}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for name, (nb, np_) in cases(inp).items():
        out_nb, out_np = nb(), np_()  # warm-up also triggers compilation
        if not _same(out_nb, out_np):
            raise SystemExit(f"{name}: backends disagree")
        t_nb = min(timeit.repeat(nb, number=1, repeat=repeat)) * 1e3
        t_np = min(timeit.repeat(np_, number=1, repeat=repeat)) * 1e3
        print(f"{name:<24}{t_nb:>12.3f}{t_np:>12.3f}{t_np / t_nb:>9.1f}x")


MISSION_SNIPPET = """
import time
from importlib.resources import files
from ghacpp import load_world, read_scenario, MissionConfig, run_mission
doc = read_scenario(files("ghacpp") / "scenarios" / "empty_6x14_5.json")
world = load_world(doc)
run_mission(load_world(read_scenario(files("ghacpp") / "scenarios" / "empty_3x4.json")),
            MissionConfig.from_scenario(read_scenario(files("ghacpp") / "scenarios" / "empty_3x4.json"), "ghacpp", 1))
t0 = time.perf_counter()
run_mission(world, MissionConfig.from_scenario(doc, "ghacpp", 1))
print(f"{time.perf_counter() - t0:.2f}")
"""


def bench_mission():
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, GHACPP_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", MISSION_SNIPPET], env=env, capture_output=True, text=True, check=True)
        print(f"empty_6x14_5 ghacpp mission ({label}): {out.stdout.strip()} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--mission", action="store_true", help="also time a full mission per backend")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    bench_kernels(args.repeat)
    if args.mission:
        bench_mission()


if __name__ == "__main__":
    main()

"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each kernel runs once untimed so JIT compilation is excluded, then the best
of ``--repeat`` runs is reported for both backends.
"""

import argparse
import time

import numpy as np

from uvjitter import ChannelParams, LinkGeometry, expand_ftpd
from uvjitter._accel import HAVE_NUMBA
from uvjitter.channel import power_args
from uvjitter.counting import DetectorParams
from uvjitter.kernels import ber_block, ftpd_batch, poisson_block, received_power_batch


def best_of(func, repeat):
    func()
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return

    geom = LinkGeometry.from_degrees(50, 20, 20, 5, 0, 1, 30)
    params = ChannelParams()
    model = expand_ftpd(geom, params)
    det = DetectorParams.from_data_rate(320e3)
    rng = np.random.default_rng(0)
    offsets = rng.standard_normal((200_000, 4)) * 0.04
    angles = np.array(geom.angles) + offsets
    pargs = power_args(geom, params)
    means = rng.uniform(0, 60, 1_000_000)
    sigma = np.full(4, 0.04)
    ppw = det.photons_per_watt

    cases = {
        "exact power, 2e5 pointings": lambda b: received_power_batch(angles, pargs, backend=b),
        "FTPD power, 2e5 offsets": lambda b: ftpd_batch(offsets, model.shift, model.gmat, model.eps, backend=b),
        "Poisson draws, 1e6 means": lambda b: poisson_block(1, means, backend=b),
        "OOK symbols, 2e6": lambda b: ber_block(1, 2_000_000, sigma, model.shift, model.gmat, model.eps,
                                               ppw, det.lambda_b, 0, backend=b),
    }
    print(f"{'kernel':<30}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name, run in cases.items():
        t_nb = best_of(lambda: run("numba"), args.repeat)
        t_np = best_of(lambda: run("numpy"), args.repeat)
        print(f"{name:<30}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()

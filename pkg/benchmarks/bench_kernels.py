#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Times the hot path of the certificate optimizer (one objective + gradient
evaluation, and a full 500-step descent) on a fixture-sized network, and
checks that the two backends agree numerically.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time
from pathlib import Path

import numpy as np

REPO_ROOT = Path(__file__).resolve().parent.parent


def build_problem():
    import probcert as pc

    fixture = REPO_ROOT / "fixtures" / "np_decoder.json"
    if fixture.exists():
        model = pc.load_model(str(fixture))
        label = "pretrained fixture (3x64 hidden, z_dim 2)"
    else:
        rng = np.random.default_rng(0)
        layers = []
        dims = [3, 64, 64, 64, 1]
        for i in range(len(dims) - 1):
            layers.append(
                pc.LinearLayer(
                    0.3 * rng.standard_normal((dims[i + 1], dims[i])),
                    0.1 * rng.standard_normal(dims[i + 1]),
                )
            )
            if i + 2 < len(dims):
                layers.append(pc.ReluLayer())
        model = pc.DecoderModel(1, 2, tuple(layers))
        label = "random 3x64 network (fixture absent)"
    problem = pc.build_bounded_above(model, 1.0, pc.Box([0.4], [0.42]), 0.01)
    return problem, label


def time_backend(backend_module, packed, lam, alpha, eta, repeats):
    # warm once (jit compilation for numba)
    backend_module.objective_grad(packed.tup, lam, alpha, eta)
    t0 = time.perf_counter()
    for _ in range(repeats):
        out = backend_module.objective_grad(packed.tup, lam, alpha, eta)
    per_call = (time.perf_counter() - t0) / repeats
    return per_call, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    import probcert as pc
    from probcert.intervals import LatentBox
    from probcert.kernels import _numpy as numpy_backend
    from probcert.optimize import OptimizerConfig, init_duals
    from probcert.packing import pack_problem
    from probcert import propagate

    try:
        from probcert.kernels import _numba as numba_backend
    except ImportError:
        numba_backend = None

    problem, label = build_problem()
    packed = pack_problem(problem)
    latent = LatentBox.symmetric(packed.z_dim, 3.0)
    duals = init_duals(problem, propagate(problem, latent))
    lam = packed.pack_duals(duals.lambdas)

    print(f"problem: {label}")
    print(f"parameters: {lam.size} multipliers + {2 * packed.z_dim} latent-box")
    print(f"repeats per measurement: {args.repeats}\n")

    t_np, out_np = time_backend(numpy_backend, packed, lam, latent.alpha, latent.eta, args.repeats)
    print(f"numpy  objective+grad: {t_np * 1e6:9.1f} us/call")

    if numba_backend is None:
        print("numba unavailable; skipping jitted backend")
        return

    t_nb, out_nb = time_backend(numba_backend, packed, lam, latent.alpha, latent.eta, args.repeats)
    print(f"numba  objective+grad: {t_nb * 1e6:9.1f} us/call")
    print(f"speedup: {t_np / t_nb:.1f}x\n")

    worst = max(
        abs(out_np[0] - out_nb[0]),
        float(np.max(np.abs(out_np[5] - out_nb[5]))) if out_np[5].size else 0.0,
        float(np.max(np.abs(out_np[6] - out_nb[6]))),
        float(np.max(np.abs(out_np[7] - out_nb[7]))),
    )
    print(f"max |numpy - numba| over objective and gradients: {worst:.3e}")

    for name, env in (("numba", None), ("numpy", "numpy")):
        import os
        import subprocess
        import sys

        code = (
            "import time, probcert as pc\n"
            f"model = pc.load_model(r'{REPO_ROOT}/fixtures/np_decoder.json')\n"
            "prob = pc.build_bounded_above(model, 1.0, pc.Box([0.4],[0.42]), 0.01)\n"
            "pc.optimize(prob, pc.OptimizerConfig(steps=10))\n"
            "t0 = time.perf_counter()\n"
            "pc.optimize(prob, pc.OptimizerConfig(steps=500))\n"
            "print(f'{time.perf_counter()-t0:.3f}')\n"
        )
        env_vars = dict(os.environ)
        if env:
            env_vars["PROBCERT_BACKEND"] = env
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env_vars
        )
        print(f"{name:6s} full 500-step optimize: {out.stdout.strip()}s")


if __name__ == "__main__":
    main()

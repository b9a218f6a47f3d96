"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 14] [--repeat 5]

Prints the best-of-``repeat`` time per call for each kernel and backend and
the speedup of the compiled one, after checking that both produce the same
result.
"""

import argparse
import timeit

import numpy as np

from qmpemba import _pycore
from qmpemba.models import nn_bonds, nnn_bonds

try:
    from qmpemba import _core
except ImportError:  # extension not built
    _core = None


def cases(n: int, L: int, rows: int):
    rng = np.random.default_rng(0)
    psi0 = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi0 /= np.linalg.norm(psi0)
    bi = np.array([b[0] for b in nn_bonds(n)], dtype=np.int64)
    bj = np.array([b[1] for b in nn_bonds(n)], dtype=np.int64)
    u = np.array([[np.cos(0.3), -1j * np.sin(0.3)], [-1j * np.sin(0.3), np.cos(0.3)]])
    field0 = rng.normal(size=(rows, L))
    noise = 0.1 * rng.normal(size=(rows, L))

    def floquet(k):
        def run(psi):
            k.zz_layer(psi, n, bi, bj, 2.0)
            for i in range(1, n, 2):
                k.hopping(psi, n, i, (i + 1) % n, 0.25)
            for i in range(0, n, 2):
                k.hopping(psi, n, i, i + 1, 0.25)
            ni = np.array([b[0] for b in nnn_bonds(n)], dtype=np.int64)
            nj = np.array([b[1] for b in nnn_bonds(n)], dtype=np.int64)
            k.zz_layer(psi, n, ni, nj, 1.0)
        return run

    return {
        "zz_phase": (psi0, lambda k: lambda psi: k.zz_phase(psi, n, 0, n // 2, 0.7)),
        "zz_layer": (psi0, lambda k: lambda psi: k.zz_layer(psi, n, bi, bj, 0.7)),
        "hopping": (psi0, lambda k: lambda psi: k.hopping(psi, n, 1, 2, 0.25)),
        "single_qubit": (psi0, lambda k: lambda psi: k.single_qubit(psi, n, 3, u)),
        "floquet_period": (psi0, floquet),
        "hydro_step": (field0, lambda k: lambda f: k.hydro_euler_step(f, noise, 0.25)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=14, help="chain length for gate kernels")
    ap.add_argument("--L", type=int, default=4096, help="hydro lattice size")
    ap.add_argument("--rows", type=int, default=50, help="hydro realizations per block")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = {"python": _pycore}
    if _core is not None:
        backends["cython"] = _core
    print(f"N={args.n}, hydro block {args.rows}x{args.L}")
    print(f"{'kernel':<16}" + "".join(f"{b:>14}" for b in backends) + ("   speedup" if _core else ""))
    for name, (data, make) in cases(args.n, args.L, args.rows).items():
        outputs, times = {}, {}
        for label, k in backends.items():
            fn = make(k)
            work = data.copy()
            fn(work)
            outputs[label] = work
            number = 20
            times[label] = min(timeit.repeat(lambda: fn(work), number=number, repeat=args.repeat)) / number
        if _core is not None:
            np.testing.assert_allclose(outputs["cython"], outputs["python"], rtol=0, atol=1e-12)
        line = f"{name:<16}" + "".join(f"{times[b] * 1e3:>11.3f} ms" for b in backends)
        if _core is not None:
            line += f"   {times['python'] / times['cython']:7.1f}x"
        print(line)


if __name__ == "__main__":
    main()

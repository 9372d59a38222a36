"""Rigidity along M(0, 0, 2 pi n + 1/n) next to the decay of windowed coefficients."""

from ergolab import heisenberg

if __name__ == "__main__":
    v = heisenberg.heisenberg_verdict(n_max=100, radii=(5, 10, 20))
    for n in (1, 2, 5, 10, 50, 100):
        print(f"r_{n:<3d} = {v.rigidity.r[n - 1]:.6f}")
    for N, m, c in zip(v.trace.radii, v.trace.means, v.trace.closed_form):
        print(f"window N={N:<3d} mean |coef| = {m:.5f}  (continuum box average {c:.5f})")
    print(v.conclusion)

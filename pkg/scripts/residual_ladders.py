"""Finite-section residual ladders for the defect identity (I - T_B T_B*).

Prints the spectral-norm residual of the factored section against the direct
one over a degree ladder, for a banded outer function (exact at every size),
a geometric-series outer function, and its double-argument variant.  The
banded row saturates at machine dust; the others decay with the section size.

Usage: python3 scripts/residual_ladders.py [--ladder 8,16,32,64,128]
"""

import argparse

import numpy as np

from toepkern import MatrixSymbol, adjoint_flip, series_inverse, symbol_mul
from toepkern.fixtures import g_one_plus_z, g_poisson, g_poisson_double
from toepkern.toeplitz import build_toeplitz, operator_residual


def section_residual(G, B, n):
    ident = MatrixSymbol.identity(B.rows)
    S = (build_toeplitz(ident - B, n).matrix
         @ build_toeplitz(adjoint_flip(G), n).matrix)
    tb = build_toeplitz(B, n).matrix
    eye = np.eye(tb.shape[0])
    return operator_residual(S @ S.conj().T, eye - tb @ tb.conj().T, n)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", type=str, default="8,16,32,64,128")
    args = ap.parse_args()
    ladder = [int(p) for p in args.ladder.split(",")]
    top = max(ladder)

    fixtures = [
        ("one-plus-z", g_one_plus_z(),
         symbol_mul(MatrixSymbol.monomial(1),
                    series_inverse(MatrixSymbol.scalar([2.0, 1.0]), 4 * top))),
        ("poisson", g_poisson(4 * top), MatrixSymbol.scalar([0.0, 0.5])),
        ("poisson-double", g_poisson_double(4 * top),
         MatrixSymbol.scalar([0.0, 0.0, 0.5])),
    ]
    head = "fixture".ljust(16) + "".join(f"N={n}".rjust(12) for n in ladder)
    print(head)
    for name, G, B in fixtures:
        cells = "".join(f"{section_residual(G, B, n):12.3e}" for n in ladder)
        print(name.ljust(16) + cells)


if __name__ == "__main__":
    main()

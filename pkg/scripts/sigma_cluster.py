"""Square-well eigenvalues in the rectangle [0, C] x [-C ln a / a, 0] against a^2 / ln a (d = 1, V0 = i)."""

import argparse
import math

from resonance_bounds.oracles import count_eigenvalues_in_sigma


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--C", type=float, default=16.0)
    ap.add_argument("--a", type=float, nargs="+", default=[20.0, 40.0, 80.0])
    args = ap.parse_args()
    for a in args.a:
        n, c = count_eigenvalues_in_sigma(1j, a, args.C)
        print(f"a={a:<5g} C={c:<6g} count={n:<5} count / (a^2/ln a) = {n / (a * a / math.log(a)):.3f}")


if __name__ == "__main__":
    main()

"""Oracle resonance counts n(r) for the unit ball indicator and their local log-log slopes."""

import math

from resonance_bounds.oracles import oracle_3d_radial, radial_total


def main():
    rs = (2.0, 4.0, 8.0, 16.0)
    counts = [radial_total(oracle_3d_radial(1.0, 1.0, r)) for r in rs]
    for r, n in zip(rs, counts):
        print(f"r={r:<5g} n={n}")
    for (r0, n0), (r1, n1) in zip(zip(rs, counts), zip(rs[1:], counts[1:])):
        if n0 > 0:
            print(f"slope on [{r0:g}, {r1:g}]: {math.log(n1 / n0) / math.log(r1 / r0):.2f}")


if __name__ == "__main__":
    main()

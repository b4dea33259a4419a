#!/usr/bin/env python3
"""Regenerate the supersingular pairing parameters baked into pairing.py.

Searches for a 160-bit prime subgroup order q and a cofactor h with
p = q*h - 1 prime and p = 3 (mod 4), so that y^2 = x^3 + x over F_p is
supersingular with #E(F_p) = p + 1 and embedding degree 2.

Needs sympy (dev-time only; the package itself does not depend on it).
"""

import argparse
import random

from sympy import isprime, nextprime


def find_parameters(seed: int, q_bits: int = 160, p_bits: int = 512):
    rng = random.Random(seed)
    q = int(nextprime(rng.getrandbits(q_bits) | (1 << (q_bits - 1))))
    h_bits = p_bits - q_bits
    while True:
        h = (rng.getrandbits(h_bits) | (1 << (h_bits - 1))) & ~0x3
        p = q * h - 1
        if p % 4 == 3 and isprime(p):
            return q, h, p


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20260809)
    parser.add_argument("--q-bits", type=int, default=160)
    parser.add_argument("--p-bits", type=int, default=512)
    args = parser.parse_args()

    q, h, p = find_parameters(args.seed, args.q_bits, args.p_bits)
    assert (p + 1) % q == 0 and p % 4 == 3
    print(f"SS_Q = {hex(q).upper().replace('0X', '0x')}")
    print(f"SS_H = {hex(h).upper().replace('0X', '0x')}")
    print(f"# p = q*h - 1 = {hex(p)}")
    print(f"# q: {q.bit_length()} bits, p: {p.bit_length()} bits")


if __name__ == "__main__":
    main()

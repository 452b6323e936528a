#!/usr/bin/env python3
"""Regenerate core/src/sobol_directions.inc from SciPy's bundled Joe-Kuo table."""
import os
import sys

import numpy as np
import scipy

DIMS = 64


def main(out_path):
    table = np.load(os.path.join(os.path.dirname(scipy.__file__), "stats",
                                 "_sobol_direction_numbers.npz"))
    poly, vinit = table["poly"], table["vinit"]
    max_deg = max(max(int(poly[k]).bit_length() - 1 for k in range(DIMS)), 1)
    lines = [
        "// Primitive polynomials and initial direction numbers for the first 64",
        "// Sobol' coordinates (Joe and Kuo, new-joe-kuo-6.21201). Coordinate 0 is the",
        "// van der Corput sequence. Polynomials include the leading and trailing 1 bits.",
        "// Generated by tools/gen_sobol_table.py; do not edit.",
        f"inline constexpr int kSobolMaxDegree = {max_deg};",
        f"inline constexpr int kSobolTableDims = {DIMS};",
        "inline constexpr SobolPolynomial kSobolTable[kSobolTableDims] = {",
    ]
    for k in range(DIMS):
        s = max(int(poly[k]).bit_length() - 1, 1)
        v = [int(x) for x in vinit[k][:s]] + [0] * (max_deg - s)
        lines.append(f"    {{{int(poly[k])}u, {{{', '.join(f'{x}u' for x in v)}}}}},")
    lines.append("};")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "core/src/sobol_directions.inc")

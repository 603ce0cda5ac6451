#!/usr/bin/env python3
"""PESQ plug-in for cdse: `pesq_plugin.py reference.wav degraded.wav`.

Prints one wide-band PESQ (P.862.2) score. Needs the `pesq` package.
"""

import sys

import numpy as np
from scipy.io import wavfile


def main(argv):
    if len(argv) != 3:
        print("usage: pesq_plugin.py reference.wav degraded.wav", file=sys.stderr)
        return 2
    from pesq import pesq

    rate_ref, ref = wavfile.read(argv[1])
    rate_deg, deg = wavfile.read(argv[2])
    if rate_ref != rate_deg:
        print("sample rates differ", file=sys.stderr)
        return 1
    scale = lambda x: x.astype(np.float64) / 32768.0 if x.dtype == np.int16 else x.astype(np.float64)
    print(f"{pesq(rate_ref, scale(ref), scale(deg), 'wb'):.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))

#!/usr/bin/env python3
"""Wideband PESQ for two 16 kHz mono WAV files, via the `pesq` package.

usage: pesq_tool.py reference.wav degraded.wav
"""
import sys
import wave

import numpy as np
from pesq import pesq


def read(path):
    with wave.open(path, "rb") as w:
        if w.getnchannels() != 1 or w.getsampwidth() != 2:
            sys.exit(f"{path}: expected mono 16-bit PCM")
        rate = w.getframerate()
        data = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return rate, data.astype(np.float64) / 32768.0


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    rate, ref = read(sys.argv[1])
    rate2, deg = read(sys.argv[2])
    if rate != 16000 or rate2 != 16000:
        sys.exit("both files must be 16 kHz")
    print(f"{pesq(rate, ref, deg, 'wb'):.4f}")


if __name__ == "__main__":
    main()

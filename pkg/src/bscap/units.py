"""Decibel conversions; dB is the user-facing SNR unit, linear is internal."""

import numpy as np


def db_to_linear(db):
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if np.ndim(db) == 0 else out


def linear_to_db(x):
    out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return float(out) if np.ndim(x) == 0 else out

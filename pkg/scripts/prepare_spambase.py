"""Build tests/data/spambase.csv from the KEEL copy of UCI Spambase.

The KEEL ``spambase.dat`` file (shipped in the ``keel-ds`` wheel under
``keel_ds/data/balanced/raw/``) is headerless comma-separated text with
4597 rows and all spam rows first. This script names the 57 attributes
f0..f56 plus a ``spam`` label (1 = spam) and shuffles the rows with a fixed seed so a
prequential run does not see one class at a time.

    python scripts/prepare_spambase.py path/to/spambase.dat tests/data/spambase.csv
"""

import sys

import numpy as np
import pandas as pd

SHUFFLE_SEED = 0


def main(src, dst):
    df = pd.read_csv(src, header=None, skipinitialspace=True)
    df.columns = [f"f{j}" for j in range(df.shape[1] - 1)] + ["spam"]
    order = np.random.default_rng(SHUFFLE_SEED).permutation(len(df))
    df.iloc[order].to_csv(dst, index=False)


if __name__ == "__main__":
    main(*sys.argv[1:3])

"""Gauss-Kronrod 7/15 rule on [-1, 1].

Constants were solved to 40 digits from the moment equations of the
15-point extension (exact through degree 22) and rounded to doubles.
"""

import numpy as np

# positive half of the abscissae, ascending; index 0 is the centre node
XK = np.array(
    [
        0.0,
        0.20778495500789846760,
        0.40584515137739716691,
        0.58608723546769113029,
        0.74153118559939443986,
        0.86486442335976907279,
        0.94910791234275852453,
        0.99145537112081263921,
    ]
)
WK = np.array(
    [
        0.20948214108472782801,
        0.20443294007529889241,
        0.19035057806478540991,
        0.16900472663926790283,
        0.14065325971552591875,
        0.10479001032225018384,
        0.063092092629978553291,
        0.022935322010529224964,
    ]
)
# Gauss weights aligned with XK (zero on Kronrod-only nodes)
WG = np.array(
    [
        0.41795918367346938776,
        0.0,
        0.38183005050511894495,
        0.0,
        0.27970539148927666790,
        0.0,
        0.12948496616886969327,
        0.0,
    ]
)

# full 15-node layout: -x7..-x1, 0, x1..x7
NODES = np.concatenate([-XK[:0:-1], XK])
KRONROD = np.concatenate([WK[:0:-1], WK])
GAUSS = np.concatenate([WG[:0:-1], WG])

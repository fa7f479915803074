import numpy as np
import pytest

from subnyq import BandSpec, MultibandSignalSpec


@pytest.fixture(scope="session")
def three_band_spec():
    """f_max=5 test signal: bands [0.7,1.3), [2.45,2.75), [3.8,4.2)."""
    return MultibandSignalSpec(
        (
            BandSpec(0.5, 0.6, 60.0, 1.0),
            BandSpec(0.5, 0.3, 100.0, 2.6),
            BandSpec(0.5, 0.4, 140.0, 4.0),
        ),
        5.0,
    )


@pytest.fixture(scope="session")
def wide_three_band_spec():
    """f_max=20 blind-recovery signal: 0.9-wide bands at 4.8, 10.45, 15.4."""
    return MultibandSignalSpec(
        (
            BandSpec(1.0, 0.9, 120.0, 4.8),
            BandSpec(1.0, 0.9, 200.0, 10.45),
            BandSpec(1.0, 0.9, 280.0, 15.4),
        ),
        20.0,
    )


def rasterized_alias_free(bands, f_max, theta, n_cells=40000):
    """Independent aliasing check: rasterize the support onto a fine grid and
    test whether any positive integer shift of theta lands occupied cells on
    occupied cells.  The occupancy is eroded by one cell at band edges so the
    half-cell quantization of the shift cannot fabricate boundary collisions;
    overlaps wider than a few raster cells are still detected."""
    step = f_max / n_cells
    mids = (np.arange(n_cells) + 0.5) * step
    occ = np.zeros(n_cells, dtype=bool)
    for a, b in bands:
        occ |= (mids >= a) & (mids < b)
    eroded = occ & np.roll(occ, 1) & np.roll(occ, -1)
    eroded[0] = eroded[-1] = False
    idx = np.nonzero(eroded)[0]
    n = 1
    while n * theta < f_max:
        shift = int(round(n * theta / step))
        moved = idx + shift
        moved = moved[moved < n_cells]
        if np.any(eroded[moved]):
            return False
        n += 1
    return True

import numpy as np
import pytest

from msunique.colorspace import to_ygcr
from msunique.decoder import TrainingConfig
from msunique.filterbank import train_bank
from msunique.patches import PatchMatrix, extract_random_patches

from _synth import natural_image


@pytest.fixture(scope="session")
def tiny_bank():
    """A small but real bank (p=4, widths 6 and 9) shared across tests."""
    rng = np.random.default_rng(0)
    columns = []
    for _ in range(6):
        ygcr = to_ygcr(natural_image(rng, 40, 40))
        columns.append(extract_random_patches(ygcr, 100, 4, rng).data)
    patches = PatchMatrix(4, np.hstack(columns))
    return train_bank(patches, sizes=(6, 9), cfg=TrainingConfig(epochs=40))

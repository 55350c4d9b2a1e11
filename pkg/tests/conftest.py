import json
import math
from importlib import resources

import numpy as np
import pytest

from topocorr.toric import load_mask, rdm_dense, toric_ground_state

LN2 = math.log(2.0)


def builtin_mask(name: str):
    ref = resources.files("topocorr").joinpath("masks", name)
    return load_mask(json.loads(ref.read_text()))


@pytest.fixture(scope="session")
def lw_mask():
    return builtin_mask("lw_annulus_4x4.json")


@pytest.fixture(scope="session")
def ring_mask():
    return builtin_mask("ring_annulus_4x4.json")


@pytest.fixture(scope="session")
def kp_disk_mask():
    return builtin_mask("kp_disk_4x4.json")


@pytest.fixture(scope="session")
def kp_annulus_mask():
    return builtin_mask("kp_annulus_4x4.json")


@pytest.fixture(scope="session")
def tab_4x4(lw_mask):
    return toric_ground_state(lw_mask.lattice)


@pytest.fixture(scope="session")
def lw_dense(tab_4x4, lw_mask):
    """Dense 8-qubit annulus RDM plus its region labels."""
    rho = rdm_dense(tab_4x4, lw_mask.abc)
    lab = lambda qs: [f"q{q}" for q in qs]
    regions = {"A": lab(lw_mask.A), "B": lab(lw_mask.B), "C": lab(lw_mask.C)}
    split = (lab(lw_mask.split["B1"]), lab(lw_mask.split["B2"]))
    return rho, regions, split


@pytest.fixture(scope="session")
def ring_dense(tab_4x4, ring_mask):
    rho = rdm_dense(tab_4x4, ring_mask.abc)
    lab = lambda qs: [f"q{q}" for q in qs]
    regions = {"A": lab(ring_mask.A), "B": lab(ring_mask.B),
               "C": lab(ring_mask.C)}
    ring = [lab(part) for part in ring_mask.ring]
    return rho, regions, ring

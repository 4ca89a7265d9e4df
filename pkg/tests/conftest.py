import numpy as np
import pytest

from polaris.catalog import catalog_entry, su2_cyclic, su3_pair_conjugation, \
    su3_pair_block, su2su2_swap_pair


@pytest.fixture(scope="session")
def su2():
    return su2_cyclic()


@pytest.fixture(scope="session")
def su3_conj_pair():
    return su3_pair_conjugation()


@pytest.fixture(scope="session")
def su3_block_pair():
    return su3_pair_block()


@pytest.fixture(scope="session")
def swap_pair():
    return su2su2_swap_pair()


@pytest.fixture(scope="session")
def bundles():
    names = ("su2_adjoint", "so3_sym_traceless", "su2_diag_double",
             "hopf_s1_s3", "so2_s2", "t2_cp2", "hermann_su3", "so3_s2xs2")
    return {name: catalog_entry(name).build() for name in names}


def rand_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)

"""Shared fixtures: the five-node grid demo instance, built once per session."""

import pytest

from nrfctl import dimpl, factor, nrfsyn, simkit


@pytest.fixture(scope="session")
def grid5_plant():
    return simkit.build_grid5_plant()


@pytest.fixture(scope="session")
def grid5_tfm():
    return simkit.grid5_tfm()


@pytest.fixture(scope="session")
def grid5_dcf():
    dcf = simkit.grid5_dcf()
    dcf.validate()
    return dcf


@pytest.fixture(scope="session")
def grid5_q():
    return simkit.grid5_q()


@pytest.fixture(scope="session")
def grid5_shift(grid5_dcf, grid5_q):
    return factor.youla_shift(grid5_dcf, grid5_q)


@pytest.fixture(scope="session")
def grid5_pair(grid5_dcf, grid5_shift):
    return nrfsyn.nrf_from_dcf(grid5_dcf, grid5_shift)


@pytest.fixture(scope="session")
def grid5_rows(grid5_pair):
    return dimpl.realize_rows(grid5_pair)


@pytest.fixture(scope="session")
def grid5_ctrl(grid5_rows):
    return dimpl.assemble(grid5_rows)

import numpy as np
import pytest
from hypothesis import settings

from backscatter_ee import ChannelRealization, SystemParams, default_geometry, sample_realization
from backscatter_ee.channel import SeedSpec

settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile("ci")


def make_instance(demand, gamma=None, p_max=1.0, pa_efficiency=0.9, p_sc=0.1, p_rc=0.01):
    """Instance with prescribed circuit demands c_k and SNR gains gamma_k.

    |h|^2 = 1, eta = 1 and sigma^2 = 1, so c_k = P_tc,k and gamma_k = |g_k|^2.
    ``gamma`` must be non-increasing to keep the given order.
    """
    demand = np.asarray(demand, dtype=float)
    k = len(demand)
    gamma = np.linspace(2.0, 1.0, k) if gamma is None else np.asarray(gamma, dtype=float)
    params = SystemParams(num_bns=k, p_max=p_max, noise_power=1.0, pa_efficiency=pa_efficiency,
                          source_circuit_power=p_sc, receiver_circuit_power=p_rc,
                          bn_circuit_power=demand, harvest_efficiency=1.0, pathloss_exponent=3.0)
    channels = ChannelRealization.from_gains(params, np.ones(k), gamma)
    return params, channels


def table_instance(k=2, p_max_dbm=30.0, master_seed=11, index=0, **overrides):
    params = SystemParams.table_one(num_bns=k, p_max_dbm=p_max_dbm, **overrides)
    channels = sample_realization(params, default_geometry(k), SeedSpec(master_seed, index))
    return params, channels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome.upper(), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"{outcome:6s} {name}: {detail}")

"""Shared fixtures: the reference configuration in object and JSON form."""

import json
import math

import numpy as np
import pytest

from kawalab.model import FeedbackGains, MemoryKernel, PhysicalParams, r_max
from kawalab.solver import SimConfig


REFERENCE_DOC = {
    "model": {"a": 1.0, "b": 1.0, "L": math.pi, "p": 1.0},
    "gains": {"alpha": 0.5, "beta": 0.25, "mu1": 0.01, "mu2": 0.01, "delta": 1.0},
    "kernel": {"form": "constant", "tau1": 1.0, "tau2": 2.0, "params": {"c": 1.0}},
    "numerics": {"N": 128, "dt": 0.01, "T_end": 30.0, "record_every": 10,
                 "linear_only": False},
    "initial": {"u0": {"type": "sine", "mode": 1, "h_norm_r_max_fraction": 0.5},
                "z0": {"type": "zero"}},
    "seed": 0,
}


@pytest.fixture
def reference_doc():
    return json.loads(json.dumps(REFERENCE_DOC))


@pytest.fixture
def reference_config_path(tmp_path, reference_doc):
    p = tmp_path / "reference.json"
    p.write_text(json.dumps(reference_doc))
    return str(p)


@pytest.fixture(scope="session")
def ref_params():
    return PhysicalParams(a=1.0, b=1.0, L=math.pi, p=1.0)


@pytest.fixture(scope="session")
def ref_gains():
    return FeedbackGains(alpha=0.5, beta=0.25, mu1=0.01, mu2=0.01, delta=1.0)


@pytest.fixture(scope="session")
def ref_kernel():
    return MemoryKernel(tau1=1.0, tau2=2.0, form="constant", c=1.0)


def reference_sim_config(linear_only=False, **over):
    """SimConfig matching the reference document; keyword overrides applied."""
    params = PhysicalParams(a=1.0, b=1.0, L=math.pi, p=1.0)
    gains = FeedbackGains(alpha=0.5, beta=0.25, mu1=0.01, mu2=0.01, delta=1.0)
    kernel = MemoryKernel(tau1=1.0, tau2=2.0, form="constant", c=1.0)
    L = params.L
    amp = 0.5 * r_max(params) / math.sqrt(L / 2.0)
    base = dict(params=params, gains=gains, kernel=kernel, N=128, dt=0.01,
                T_end=30.0,
                u0=lambda x: amp * np.sin(math.pi * np.asarray(x) / L),
                z0=lambda t: 0.0,
                record_every=10, linear_only=linear_only)
    base.update(over)
    return SimConfig(**base)

"""Bundled feeder-shaped communication topology and matching synthetic data."""
from __future__ import annotations

import json
from importlib import resources

from commrec.datagen import SynthSpec, generate
from commrec.measurements import MeasurementBlock
from commrec.network import CommNetwork, load_network


def feeder_document() -> dict:
    """The 37-node feeder communication topology (root at bus 730) as a dict."""
    text = resources.files("commrec").joinpath("data/ieee37_comm.json").read_text()
    return json.loads(text)


def feeder_network() -> CommNetwork:
    return load_network(feeder_document())


def feeder_spec(**overrides) -> SynthSpec:
    """Voltage-like synthetic spec whose latent groups follow the feeder regions."""
    params = dict(
        groups=feeder_document()["groups"],
        horizon=1440,
        rank=2,
        noise=0.0015,
        seed=7,
        value_range=(0.95, 1.05),
        amplitude=0.25,
        trend=0.05,
    )
    params.update(overrides)
    return SynthSpec(**params)


def feeder_dataset(**overrides) -> MeasurementBlock:
    return generate(feeder_spec(**overrides))

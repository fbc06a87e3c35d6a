"""Monte Carlo link failures and the observation mask they induce."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from commrec.measurements import ObservationMask
from commrec.network import CommNetwork, LdstPlan, Link, link_key


@dataclass
class FailureScenario:
    """Failed physical links at each time step, as indices into ``links``."""

    links: list[Link]
    failed: list[np.ndarray]
    f_max: int
    seed: int

    @property
    def horizon(self) -> int:
        return len(self.failed)

    def failed_links(self, t: int) -> list[Link]:
        return [self.links[i] for i in self.failed[t]]

    def incidence(self) -> np.ndarray:
        """T x n_links boolean matrix of failures."""
        out = np.zeros((self.horizon, len(self.links)), dtype=bool)
        for t, idx in enumerate(self.failed):
            out[t, idx] = True
        return out

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for t, idx in enumerate(self.failed):
                rec = {"t": t, "failed": [list(self.links[i]) for i in idx]}
                fh.write(json.dumps(rec) + "\n")


def sample_failures(
    net: CommNetwork,
    horizon: int,
    f_max: int = 5,
    seed: int = 0,
    fixed_count: bool = False,
    burst_len: int = 1,
) -> FailureScenario:
    """Draw random link failures for every time step.

    The per-step count is uniform on 1..f_max (exactly f_max with
    ``fixed_count``); failed links are distinct and uniform. With
    ``burst_len > 1`` each draw is held for that many consecutive steps.
    """
    links = net.link_list
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if f_max < 1:
        raise ValueError("f_max must be at least 1")
    if f_max > len(links):
        raise ValueError(f"f_max={f_max} exceeds the link count ({len(links)})")
    if burst_len < 1:
        raise ValueError("burst_len must be at least 1")
    rng = np.random.default_rng(seed)
    failed: list[np.ndarray] = []
    while len(failed) < horizon:
        count = f_max if fixed_count else int(rng.integers(1, f_max + 1))
        idx = np.sort(rng.choice(len(links), size=count, replace=False))
        failed.extend([idx] * min(burst_len, horizon - len(failed)))
    return FailureScenario(links=list(links), failed=failed, f_max=f_max, seed=seed)


def no_failures(net: CommNetwork, horizon: int, seed: int = 0) -> FailureScenario:
    empty = np.zeros(0, dtype=int)
    return FailureScenario(list(net.link_list), [empty] * horizon, 0, seed)


def path_incidence(plan: LdstPlan, sensors: list[str], links: list[Link]) -> np.ndarray:
    """n_links x N boolean matrix: does sensor i's root path use link l."""
    index = {lk: i for i, lk in enumerate(links)}
    out = np.zeros((len(links), len(sensors)), dtype=bool)
    for j, s in enumerate(sensors):
        if s not in plan.root_path:
            raise KeyError(f"sensor {s!r} has no route in the plan")
        for lk in plan.root_path[s]:
            key = link_key(*lk)
            if key not in index:
                raise KeyError(f"route of sensor {s!r} uses link {key} absent from the scenario")
            out[index[key], j] = True
    return out


def derive_mask(scenario: FailureScenario, plan: LdstPlan, sensors: list[str]) -> ObservationMask:
    """Entry (t, i) is delivered iff no link on sensor i's root path failed at t."""
    uses = path_incidence(plan, sensors, scenario.links).astype(np.int32)
    hits = scenario.incidence().astype(np.int32) @ uses
    return ObservationMask(list(sensors), hits == 0)

"""Experiment configuration: a flat INI-style format with one section per part.

Configs are the unit of experiment provenance: everything a run needs,
including every random seed, lives here, and serialization round-trips to the
identical dataclass so configs can be diffed and replayed byte-for-byte.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields

from ..adversaries import AdversarySpec
from ..protocol import ProtocolConfig

ALGORITHMS = ("kt_bettor", "known_g", "unknown_g_case1", "unknown_g_case2")

COMPARATOR_FROM_ADVERSARY = "adversary"


@dataclass
class ExperimentConfig:
    """One experiment: an algorithm, a gradient stream, and bookkeeping targets.

    comparator is either an explicit coordinate tuple or the string
    "adversary", meaning the stream's own constructed comparator. For the
    kt_bettor baseline the protocol section only contributes epsilon.
    """

    algorithm: str
    adversary: AdversarySpec
    protocol: ProtocolConfig
    comparator: tuple[float, ...] | str = COMPARATOR_FROM_ADVERSARY
    seeds: tuple[int, ...] = (0,)
    output_path: str = "out"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if isinstance(self.comparator, str):
            if self.comparator != COMPARATOR_FROM_ADVERSARY:
                raise ValueError(
                    f"comparator must be coordinates or {COMPARATOR_FROM_ADVERSARY!r}"
                )
        else:
            self.comparator = tuple(float(x) for x in self.comparator)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("at least one seed is required")


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_ini(config: ExperimentConfig) -> str:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep field-name case
    parser["experiment"] = {
        "algorithm": config.algorithm,
        "comparator": (
            config.comparator
            if isinstance(config.comparator, str)
            else " ".join(repr(x) for x in config.comparator)
        ),
        "seeds": " ".join(str(s) for s in config.seeds),
        "output_path": config.output_path,
    }
    parser["adversary"] = {
        f.name: _format_value(getattr(config.adversary, f.name))
        for f in fields(AdversarySpec)
    }
    parser["protocol"] = {
        f.name: _format_value(getattr(config.protocol, f.name))
        for f in fields(ProtocolConfig)
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _parse_typed(section, name: str, caster, default=None, optional=False):
    if name not in section:
        return default
    raw = section[name].strip()
    if optional and raw.lower() in ("none", ""):
        return None
    return caster(raw)


def from_ini(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    if "experiment" not in parser or "adversary" not in parser:
        raise ValueError("config needs [experiment] and [adversary] sections")
    exp = parser["experiment"]
    adv = parser["adversary"]

    adversary = AdversarySpec(
        kind=adv["kind"],
        T=int(adv["T"]),
        k=_parse_typed(adv, "k", int, 0),
        window_start=_parse_typed(adv, "window_start", int, 1),
        D=_parse_typed(adv, "D", float, 1.0),
        seed=_parse_typed(adv, "seed", int, 0),
        dim=_parse_typed(adv, "dim", int, 1),
        G=_parse_typed(adv, "G", float, 1.0),
        epsilon=_parse_typed(adv, "epsilon", float, 1.0),
    )

    prot = parser["protocol"] if "protocol" in parser else {}
    algorithm = exp["algorithm"].strip()
    default_mode = algorithm if algorithm != "kt_bettor" else "known_g"
    protocol = ProtocolConfig(
        mode=_parse_typed(prot, "mode", str, default_mode),
        T=_parse_typed(prot, "T", int, adversary.T),
        epsilon=_parse_typed(prot, "epsilon", float, 1.0),
        k=_parse_typed(prot, "k", int, adversary.k),
        G=_parse_typed(prot, "G", float, None, optional=True),
        tau_G=_parse_typed(prot, "tau_G", float, 1.0),
        tau_D=_parse_typed(prot, "tau_D", float, None, optional=True),
        c=_parse_typed(prot, "c", float, None, optional=True),
        gamma_alpha=_parse_typed(prot, "gamma_alpha", float, None, optional=True),
        gamma_beta=_parse_typed(prot, "gamma_beta", float, None, optional=True),
        p=_parse_typed(prot, "p", float, None, optional=True),
        alpha_offset=_parse_typed(prot, "alpha_offset", float, None, optional=True),
        dim=_parse_typed(prot, "dim", int, adversary.dim),
    )

    comparator_raw = exp.get("comparator", COMPARATOR_FROM_ADVERSARY).strip()
    comparator = (
        comparator_raw
        if comparator_raw == COMPARATOR_FROM_ADVERSARY
        else tuple(float(x) for x in comparator_raw.split())
    )
    seeds = tuple(int(s) for s in exp.get("seeds", "0").split())
    return ExperimentConfig(
        algorithm=algorithm,
        adversary=adversary,
        protocol=protocol,
        comparator=comparator,
        seeds=seeds,
        output_path=exp.get("output_path", "out").strip(),
    )

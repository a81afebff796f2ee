"""
Deployment Config Parser
Loads SBAS deployment YAML files and ROA CSV exports
"""

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd
import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.analyzers.latency import DEFAULT_DELAY_POP_MS, LatencyModel
from src.analyzers.resilience import Deployment
from src.exceptions import ConfigError, SbasLabError
from src.sbas.addressing import check_secure_prefix
from src.sbas.control import CustomerConfig, PopAuthorization, PopConfig, RoaRecord, SbasControlPlane
from src.topology.models import parse_address, parse_asn, parse_prefix

ROA_COLUMNS = ["prefix", "origin", "max_length"]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _secure_prefix(value: str) -> str:
    try:
        return str(check_secure_prefix(value))
    except ConfigError as e:
        raise ValueError(str(e)) from None


class PopModel(_Model):
    id: str
    internal_prefix: str
    locator: Optional[str] = None
    internet_peers: List[int] = Field(default_factory=list)
    customers: List[int] = Field(default_factory=list)

    @field_validator("internal_prefix")
    @classmethod
    def _prefix(cls, value: str) -> str:
        return str(parse_prefix(value))


class CustomerModel(_Model):
    asn: int
    prefixes: List[str]
    primary_ingress: str
    backup_ingress: List[str] = Field(default_factory=list)
    communities: List[str] = Field(default_factory=list)
    vpn_endpoint: Optional[str] = None

    @field_validator("prefixes")
    @classmethod
    def _prefixes(cls, value: List[str]) -> List[str]:
        return [_secure_prefix(p) for p in value]

    @field_validator("vpn_endpoint")
    @classmethod
    def _endpoint(cls, value: Optional[str]) -> Optional[str]:
        return str(parse_address(value)) if value is not None else None


class RoaModel(_Model):
    prefix: str
    origin: int
    max_length: Optional[int] = None


class AuthorizationModel(_Model):
    prefix: str
    pops: List[str]


class PoolModel(_Model):
    prefix: str

    @field_validator("prefix")
    @classmethod
    def _prefix(cls, value: str) -> str:
        return _secure_prefix(value)


class PopPathsModel(_Model):
    a: str
    b: str
    paths_ms: List[float]


class LatencyModelConfig(_Model):
    pop_paths: List[PopPathsModel] = Field(default_factory=list)
    ingress_ms: Dict[int, float] = Field(default_factory=dict)
    delay_pop_ms: Optional[float] = None


class DeploymentNodesModel(_Model):
    id: str
    nodes: List[int]


class SimulationModel(_Model):
    legit_origin: int
    baseline: Optional[DeploymentNodesModel] = None
    deployments: List[DeploymentNodesModel] = Field(default_factory=list)
    candidates: List[int] = Field(default_factory=list)
    k: Optional[int] = None
    serial_hijackers: List[int] = Field(default_factory=list)


class DeploymentConfig(_Model):
    """Top-level deployment document."""

    sbas_asn: int
    pool: Optional[PoolModel] = None
    pops: List[PopModel] = Field(default_factory=list)
    customers: List[CustomerModel] = Field(default_factory=list)
    roas: List[RoaModel] = Field(default_factory=list)
    authorizations: List[AuthorizationModel] = Field(default_factory=list)
    latency: Optional[LatencyModelConfig] = None
    simulation: Optional[SimulationModel] = None

    @model_validator(mode="after")
    def _references(self) -> "DeploymentConfig":
        pop_ids = {pop.id for pop in self.pops}
        for customer in self.customers:
            for pop_id in [customer.primary_ingress] + customer.backup_ingress:
                if pop_id not in pop_ids:
                    raise ValueError(f"customer AS{customer.asn} references unknown PoP {pop_id!r}")
        for auth in self.authorizations:
            unknown = set(auth.pops) - pop_ids
            if unknown:
                raise ValueError(f"authorization for {auth.prefix} names unknown PoPs {sorted(unknown)}")
        return self

    # -------------------------------------------------------------------------
    # Conversions
    # -------------------------------------------------------------------------

    def roa_records(self) -> List[RoaRecord]:
        records = []
        for roa in self.roas:
            prefix = parse_prefix(roa.prefix)
            max_length = roa.max_length if roa.max_length is not None else prefix.prefixlen
            records.append(RoaRecord(prefix, parse_asn(roa.origin), max_length))
        return records

    def pop_configs(self) -> List[PopConfig]:
        return [
            PopConfig(
                id=pop.id,
                sbas_asn=self.sbas_asn,
                internal_prefix=parse_prefix(pop.internal_prefix),
                internet_peers=frozenset(pop.internet_peers),
                customers=frozenset(pop.customers),
                locator=pop.locator,
            )
            for pop in self.pops
        ]

    def customer_configs(self) -> List[CustomerConfig]:
        try:
            return [
                CustomerConfig(
                    asn=parse_asn(c.asn),
                    prefixes=tuple(parse_prefix(p) for p in c.prefixes),
                    primary_ingress=c.primary_ingress,
                    backup_ingress=tuple(c.backup_ingress),
                    communities=frozenset(c.communities),
                    vpn_endpoint=parse_address(c.vpn_endpoint) if c.vpn_endpoint else None,
                )
                for c in self.customers
            ]
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def authorization(self) -> PopAuthorization:
        return PopAuthorization({parse_prefix(a.prefix): frozenset(a.pops) for a in self.authorizations})

    def control_plane(self, extra_roas: List[RoaRecord] = ()) -> SbasControlPlane:
        return SbasControlPlane(
            sbas_asn=self.sbas_asn,
            pops=self.pop_configs(),
            customers=self.customer_configs(),
            roas=self.roa_records() + list(extra_roas),
            authorization=self.authorization(),
            pool=parse_prefix(self.pool.prefix) if self.pool else None,
        )

    def latency_model(self, default_delay_ms: float = DEFAULT_DELAY_POP_MS) -> LatencyModel:
        if self.latency is None:
            raise ConfigError("deployment has no latency section")
        delay = self.latency.delay_pop_ms if self.latency.delay_pop_ms is not None else default_delay_ms
        return LatencyModel(
            {(p.a, p.b): p.paths_ms for p in self.latency.pop_paths},
            self.latency.ingress_ms,
            delay,
        )

    def simulation_deployments(self) -> Tuple[Optional[Deployment], List[Deployment]]:
        if self.simulation is None:
            raise ConfigError("deployment has no simulation section")
        origin = self.simulation.legit_origin
        baseline = None
        if self.simulation.baseline is not None:
            baseline = Deployment(self.simulation.baseline.id, tuple(self.simulation.baseline.nodes), origin)
        deployments = [Deployment(d.id, tuple(d.nodes), origin) for d in self.simulation.deployments]
        return baseline, deployments


def load_deployment(path: Union[str, Path]) -> DeploymentConfig:
    """Parse and validate a deployment YAML file."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}", str(path)) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping", str(path))

    try:
        config = DeploymentConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"{location}: {first['msg']}", str(path)) from None

    logger.info(f"Loaded deployment from {path}: {len(config.pops)} PoPs, "
                f"{len(config.customers)} customers, {len(config.roas)} ROAs")
    return config


def load_control_plane(path: Union[str, Path], roa_csv: Optional[Union[str, Path]] = None) -> SbasControlPlane:
    config = load_deployment(path)
    extra = read_roa_csv(roa_csv) if roa_csv else []
    try:
        return config.control_plane(extra)
    except SbasLabError as e:
        raise ConfigError(str(e), str(path)) from None


def read_roa_csv(path: Union[str, Path]) -> List[RoaRecord]:
    """ROA list as CSV with columns ``prefix,origin,max_length``."""
    try:
        frame = pd.read_csv(path, dtype={"prefix": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"unreadable ROA CSV: {e}", str(path)) from None

    missing = [c for c in ROA_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"ROA CSV is missing columns {missing}", str(path))

    records = []
    for row_no, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            records.append(RoaRecord(parse_prefix(row.prefix), parse_asn(row.origin), int(row.max_length)))
        except (ValueError, SbasLabError) as e:
            raise ConfigError(f"row {row_no}: {e}", str(path)) from None
    logger.info(f"Loaded {len(records)} ROAs from {path}")
    return records

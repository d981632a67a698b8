"""HTTP service exposing the library: one endpoint per CLI subcommand.

The CLI talks to this app in-process by default (no socket), or to a remote
instance via ``--server``.  Request/response shapes are pydantic models; the
JSON schema files under docs/schemas are generated from these models.

Domain errors (bad instance parameters, unsupported kinds, degenerate
estimations, ...) map to HTTP 400 with the exception class name; malformed
requests fail pydantic validation with the usual 422.
"""
from __future__ import annotations

from typing import Literal, Optional, Union

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import __version__
from .distributions import fuzz_discrete
from .dp_optimal import (
    dp_fixed_order,
    dp_value_iid,
    dp_value_k_items,
    dp_value_revealed_order,
)
from .errors import DomainError, InvalidParam
from .exact_analytics import (
    check_two_medians,
    exact_expected_opt_bandit,
    exact_report,
)
from .instances import (
    BanditInstance,
    Instance,
    builtin_instance,
    instance_from_json,
    instance_hash,
    instance_to_json,
    is_iid,
)
from .policies import (
    PolicySpec,
    policy_from_json,
    resolve_threshold,
)
from .sim_harness import (
    SimReport,
    chunk_rng,
    estimate_policy,
    estimate_ratio,
    report_to_json,
)


# ---------------------------------------------------------------------------
# wire models


class DistModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["discrete", "uniform", "perturbed"]
    atoms: Optional[list[tuple[float, float]]] = None  # discrete
    lo: Optional[float] = None  # uniform
    hi: Optional[float] = None
    base: Optional["DistModel"] = None  # perturbed
    epsilon: Optional[float] = None


class InstanceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dists: list[DistModel] = Field(min_length=1)
    order: Literal["random", "fixed"] = "random"
    affiliation: Optional[DistModel] = None
    capacity: int = Field(default=1, ge=1)


class BanditInstanceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    arms: list[InstanceModel] = Field(min_length=1)


AnyInstanceModel = Union[InstanceModel, BanditInstanceModel]

_POLICY_KINDS = Literal[
    "threshold", "iid_median", "mixture_median", "sixteenth", "best",
    "sample", "single_sample", "unknown", "budgeted", "bandit",
]


class PolicyModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    policy: _POLICY_KINDS
    T: Optional[float] = None
    inner: Optional["PolicyModel"] = None
    arm: Optional[int] = None


class Meta(BaseModel):
    seed: Optional[int]
    version: str
    instance_hash: Optional[str]


class SimReportModel(BaseModel):
    mean: float
    stderr: float
    ci95: tuple[float, float]
    trials: int
    seed: int
    wall_time_ms: int


class SimulateRequest(BaseModel):
    instance: AnyInstanceModel
    policy: PolicyModel
    trials: int = Field(ge=1)
    seed: int
    threads: Optional[int] = None


class SimulateResponse(BaseModel):
    meta: Meta
    report: SimReportModel


class ExactRequest(BaseModel):
    instance: InstanceModel
    threshold: Optional[float] = None
    policy: Optional[PolicyModel] = None


class ExactResponse(BaseModel):
    meta: Meta
    e_opt: float
    e_alg: float
    ratio: Optional[float]
    threshold: float
    method: str


class ThresholdRequest(BaseModel):
    instance: InstanceModel
    method: Literal["iid_median", "mixture_median", "sixteenth", "best"]


class ThresholdResponse(BaseModel):
    meta: Meta
    value: float
    provenance: str
    split: Optional[list[int]] = None
    achieved: Optional[float] = None


class DPRequest(BaseModel):
    instance: InstanceModel
    revealed_order: bool = False
    k: Optional[int] = Field(default=None, ge=1)


class DPResponse(BaseModel):
    meta: Meta
    value: float
    mode: str
    extremality: Optional[bool] = None
    table_size: int


class VerifyLemmaRequest(BaseModel):
    lemma: Literal["two_medians"]
    fuzz: int = Field(ge=1)
    seed: int
    max_atoms: int = Field(default=8, ge=1)


class VerifyLemmaResponse(BaseModel):
    meta: Meta
    lemma: str
    cases: int
    passed: int
    failed: int
    worst_ratio: Optional[float]


class BuiltinRequest(BaseModel):
    name: str
    params: dict[str, float] = Field(default_factory=dict)


class BuiltinResponse(BaseModel):
    meta: Meta
    instance: dict


class BanditRequest(BaseModel):
    instance: BanditInstanceModel
    inner: PolicyModel
    trials: int = Field(ge=1)
    seed: int
    arm: Optional[int] = None
    ratio: bool = False
    threads: Optional[int] = None


class BanditResponse(BaseModel):
    meta: Meta
    report: SimReportModel
    exact_opt: Optional[float]


class BudgetedRequest(BaseModel):
    instance: InstanceModel
    T: float
    trials: int = Field(ge=1)
    seed: int
    ratio: bool = False
    threads: Optional[int] = None


DistModel.model_rebuild()
PolicyModel.model_rebuild()


# ---------------------------------------------------------------------------
# helpers


def _to_instance(model: AnyInstanceModel) -> Union[Instance, BanditInstance]:
    return instance_from_json(model.model_dump(exclude_none=True))


def _to_policy(model: PolicyModel) -> PolicySpec:
    return policy_from_json(model.model_dump(exclude_none=True))


def _meta(inst=None, seed: Optional[int] = None) -> Meta:
    return Meta(
        seed=seed,
        version=__version__,
        instance_hash=None if inst is None else instance_hash(inst),
    )


def _report_model(rep: SimReport) -> SimReportModel:
    return SimReportModel(**report_to_json(rep))


# ---------------------------------------------------------------------------
# app


app = FastAPI(title="trading-prophets", version=__version__)


@app.exception_handler(DomainError)
async def _domain_error(_, exc: DomainError):
    return JSONResponse(status_code=400,
                        content={"error": type(exc).__name__, "message": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    inst = _to_instance(req.instance)
    rep = estimate_policy(inst, _to_policy(req.policy), req.trials, req.seed,
                          threads=req.threads)
    return SimulateResponse(meta=_meta(inst, req.seed), report=_report_model(rep))


@app.post("/ratio", response_model=SimulateResponse)
def ratio(req: SimulateRequest) -> SimulateResponse:
    inst = _to_instance(req.instance)
    rep = estimate_ratio(inst, _to_policy(req.policy), req.trials, req.seed,
                         threads=req.threads)
    return SimulateResponse(meta=_meta(inst, req.seed), report=_report_model(rep))


@app.post("/exact", response_model=ExactResponse)
def exact(req: ExactRequest) -> ExactResponse:
    inst = _to_instance(req.instance)
    if not isinstance(inst, Instance):
        raise InvalidParam("exact analytics runs on single-item instances")
    if (req.threshold is None) == (req.policy is None):
        raise InvalidParam("give exactly one of threshold / policy")
    if req.threshold is not None:
        t = req.threshold
    else:
        t = resolve_threshold(inst, _to_policy(req.policy)).value
    rep = exact_report(inst, t)
    return ExactResponse(meta=_meta(inst), e_opt=rep.e_opt, e_alg=rep.e_alg,
                         ratio=rep.ratio, threshold=rep.threshold,
                         method=rep.method.value)


@app.post("/threshold", response_model=ThresholdResponse)
def threshold(req: ThresholdRequest) -> ThresholdResponse:
    inst = _to_instance(req.instance)
    spec = resolve_threshold(inst, PolicySpec(kind=req.method))
    return ThresholdResponse(
        meta=_meta(inst),
        value=spec.value,
        provenance=spec.provenance.value,
        split=None if spec.split is None else list(spec.split),
        achieved=spec.achieved,
    )


@app.post("/dp", response_model=DPResponse)
def dp(req: DPRequest) -> DPResponse:
    inst = _to_instance(req.instance)
    dists = list(inst.dists)
    if req.k is not None:
        if not is_iid(inst):
            raise InvalidParam("k-item DP needs an i.i.d. instance")
        dpv = dp_value_k_items(dists[0], inst.n, req.k)
        mode = "k_items"
    elif req.revealed_order:
        dpv = dp_value_revealed_order(dists)
        mode = "revealed_order"
    elif inst.order.value == "fixed":
        dpv = dp_fixed_order(dists)
        mode = "fixed_order"
    elif is_iid(inst):
        dpv = dp_value_iid(dists[0], inst.n)
        mode = "iid"
    else:
        raise InvalidParam(
            "non-i.i.d. random-order instance: pass revealed_order=true for "
            "the order-revealed upper bound"
        )
    return DPResponse(meta=_meta(inst), value=dpv.value, mode=mode,
                      extremality=dpv.extremality,
                      table_size=len(dpv.policy_table))


@app.post("/verify-lemma", response_model=VerifyLemmaResponse)
def verify_lemma(req: VerifyLemmaRequest) -> VerifyLemmaResponse:
    rng = chunk_rng(req.seed, 0)
    passed = failed = 0
    worst: Optional[float] = None
    for _ in range(req.fuzz):
        d1 = fuzz_discrete(rng, max_atoms=req.max_atoms)
        d2 = fuzz_discrete(rng, max_atoms=req.max_atoms)
        rep = check_two_medians(d1, d2)
        if rep.passed:
            passed += 1
        else:
            failed += 1
        if rep.abs_diff > 0:
            r = rep.best_ratio
            worst = r if worst is None else min(worst, r)
    return VerifyLemmaResponse(meta=_meta(seed=req.seed), lemma=req.lemma,
                               cases=req.fuzz, passed=passed, failed=failed,
                               worst_ratio=worst)


@app.post("/builtin", response_model=BuiltinResponse)
def builtin(req: BuiltinRequest) -> BuiltinResponse:
    inst = builtin_instance(req.name, **req.params)
    return BuiltinResponse(meta=_meta(inst), instance=instance_to_json(inst))


@app.post("/bandit", response_model=BanditResponse)
def bandit(req: BanditRequest) -> BanditResponse:
    inst = _to_instance(req.instance)
    spec = PolicySpec(kind="bandit", inner=_to_policy(req.inner), arm=req.arm)
    runner = estimate_ratio if req.ratio else estimate_policy
    rep = runner(inst, spec, req.trials, req.seed, threads=req.threads)
    try:
        exact_opt = exact_expected_opt_bandit(inst)
    except DomainError:
        exact_opt = None
    return BanditResponse(meta=_meta(inst, req.seed), report=_report_model(rep),
                          exact_opt=exact_opt)


@app.post("/budgeted", response_model=SimulateResponse)
def budgeted(req: BudgetedRequest) -> SimulateResponse:
    inst = _to_instance(req.instance)
    spec = PolicySpec(kind="budgeted", t=req.T)
    runner = estimate_ratio if req.ratio else estimate_policy
    rep = runner(inst, spec, req.trials, req.seed, threads=req.threads)
    return SimulateResponse(meta=_meta(inst, req.seed), report=_report_model(rep))

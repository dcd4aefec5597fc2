"""JSON run reports."""

import math

from pydantic import BaseModel, ConfigDict, Field

from troftools import __version__

REPORT_VERSION = 1


class RofParamsModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    mu: float
    rho: float
    eps_u: float
    max_iter: int
    variant: str
    cg_tol: float
    cg_max_iter: int

    @classmethod
    def from_params(cls, params):
        return cls(mu=params.mu, rho=params.rho, eps_u=params.eps_u,
                   max_iter=params.max_iter, variant=params.variant.flag,
                   cg_tol=params.cg_tol, cg_max_iter=params.cg_max_iter)


class TrofParamsModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    K: int
    eps_tau: float
    max_outer_iter: int
    min_phase_size: int
    init: str
    initial_tau: list[float]
    cluster_on: str = 'rof'
    mode: str = 'trof'


class RofSummary(BaseModel):
    model_config = ConfigDict(extra='forbid')

    iterations: int
    converged: bool
    final_energy: float
    relative_change: float | None


class IterationModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    tau: list[float]
    m: list[float]
    zeta: list[int] | None
    s_k: int | None
    K: int
    # None stands for an undefined (infinite) change.
    tau_delta: float | None

    @classmethod
    def from_iteration(cls, iteration):
        return cls(tau=iteration.taus.tolist(),
                   m=iteration.means.tolist(),
                   zeta=None if iteration.zeta is None else iteration.zeta.tolist(),
                   s_k=iteration.sign_changes,
                   K=iteration.phase_count,
                   tau_delta=(None if math.isinf(iteration.tau_delta)
                              else iteration.tau_delta))


class MetricsModel(BaseModel):
    model_config = ConfigDict(extra='forbid')

    SA: float = Field(ge=0, le=1)
    DICE: list[float]
    matched_permutation: list[int]
    matching: str
    truth: str | None = None

    @classmethod
    def from_metrics(cls, metrics, truth=None):
        return cls(SA=metrics.sa, DICE=metrics.dice.tolist(),
                   matched_permutation=metrics.matched_permutation.tolist(),
                   matching=metrics.matching, truth=truth)


class RunReport(BaseModel):
    model_config = ConfigDict(extra='forbid')

    version: int = REPORT_VERSION
    tool_version: str = __version__
    input: str
    seed: int | None = None
    rof: RofParamsModel
    trof: TrofParamsModel
    rof_result: RofSummary
    trace: list[IterationModel]
    converged: bool
    outer_iterations: int
    final_tau: list[float]
    final_m: list[float]
    metrics: MetricsModel | None = None
    # Milliseconds per stage.
    timings: dict[str, float] = Field(default_factory=dict)

    @classmethod
    def from_result(cls, source, result, rof_params, trof_params, init,
                    initial_taus, seed=None, metrics=None, timings=None,
                    mode='trof', cluster_on='rof'):
        history = result.u.relative_change_history
        return cls(input=str(source),
                   seed=seed,
                   rof=RofParamsModel.from_params(rof_params),
                   trof=TrofParamsModel(K=trof_params.K,
                                        eps_tau=trof_params.eps_tau,
                                        max_outer_iter=trof_params.max_outer_iter,
                                        min_phase_size=trof_params.min_phase_size,
                                        init=init,
                                        initial_tau=list(initial_taus),
                                        cluster_on=cluster_on,
                                        mode=mode),
                   rof_result=RofSummary(iterations=result.u.iterations,
                                         converged=result.u.converged,
                                         final_energy=result.u.final_energy,
                                         relative_change=(float(history[-1])
                                                          if len(history) else None)),
                   trace=[IterationModel.from_iteration(it) for it in result.trace],
                   converged=result.converged,
                   outer_iterations=result.outer_iterations,
                   final_tau=result.final_taus.taus.tolist(),
                   final_m=result.final_means.tolist(),
                   metrics=metrics,
                   timings=timings or {})

    def without_timings(self):
        return self.model_copy(update={'timings': {}})


def write_report(path, report):
    with open(path, 'w') as f:
        f.write(report.model_dump_json(indent=2))
        f.write('\n')


def read_report(path):
    with open(path) as f:
        return RunReport.model_validate_json(f.read())


def report_schema():
    return RunReport.model_json_schema()

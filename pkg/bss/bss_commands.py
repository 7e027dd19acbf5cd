# bss/bss_commands.py
from typing import List, Optional

from pydantic import Field, ValidationError

from bss.harness import METHODS, MethodName, compare_methods, write_comparison_csv, write_signals_csv
from bss.scenario import ScenarioSpec, SourceKind, generate_scenario
from cli.router import CommandRouter, OutputRequest, RunContext
from exceptions import UsageError
from settings import get_default_seed
from tensor_core.tensor_io import format_scalar

router = CommandRouter()


# --- Pydantic Models ---
class BssDemoRequest(OutputRequest):
    sources: int = Field(2, ge=1, description="number of sources K")
    channels: int = Field(3, ge=1, description="number of mixtures C")
    samples: int = Field(400, ge=2, description="signal length T")
    frequencies: List[float] = Field(default_factory=lambda: [0.3, 0.8], description="rad/sample, one per source")
    kinds: List[SourceKind] = Field(default_factory=lambda: ["sinusoid"])
    damping: float = Field(0.005, ge=0)
    noise: float = Field(0.0, ge=0)
    window: Optional[int] = Field(None, ge=1, description="Hankel window L; T // 2 when absent")
    rank: Optional[int] = Field(None, ge=1, description="CP rank; 2K when absent")
    methods: List[MethodName] = Field(default_factory=lambda: list(METHODS))
    seed: int = Field(default_factory=get_default_seed)


# --- Commands ---
@router.command("bss-demo", BssDemoRequest, help="compare PCA, FastICA and Hankel-tensor CP separation")
def bss_demo_command(request: BssDemoRequest, context: RunContext) -> int:
    try:
        spec = ScenarioSpec(
            n_sources=request.sources,
            n_channels=request.channels,
            n_samples=request.samples,
            frequencies=request.frequencies,
            kinds=request.kinds,
            damping=request.damping,
            noise=request.noise,
            seed=request.seed,
        )
    except ValidationError as e:
        raise UsageError(f"Invalid scenario: {e.errors()[0]['msg']}")
    scenario = generate_scenario(spec)
    comparison = compare_methods(scenario, request.methods, window=request.window, rank=request.rank, seed=request.seed)

    write_comparison_csv(context.path("comparison.csv"), comparison.rows, scenario.n_sources)
    write_signals_csv(context.path("signals.csv"), scenario, comparison.results)
    for row in comparison.rows:
        if row.error is not None:
            context.echo(f"{row.method}: failed: {row.error}")
        else:
            context.echo(f"{row.method}: residual {format_scalar(row.residual)}, mean |rho| {format_scalar(row.mean_correlation)}")
    return 0

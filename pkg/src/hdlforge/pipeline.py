"""Dataset generation pipeline: forge, filter, verify, persist."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .config import RunConfig
from .forge import (
    FSM_FAMILY,
    KMAP_FAMILY,
    WAVE_FAMILY,
    FingerprintDb,
    ForgeConfig,
    ProblemInstance,
    Rejection,
    forge_problem,
    load_benchmark_templates,
    to_record,
)
from .simrun import SimulatorConfig, run_jobs
from .testbench import emit_testbench

CATEGORY_KINDS = {
    "kmap": KMAP_FAMILY,
    "fsm": FSM_FAMILY,
    "wave": WAVE_FAMILY,
}
# Rejections are re-drawn with fresh seeds; cap the total attempts so a
# saturated configuration fails loudly instead of spinning.
OVERSAMPLE_FACTOR = 60


class GenerationError(RuntimeError):
    pass


class VerificationError(RuntimeError):
    pass


@dataclass
class GenFunnel:
    generated: int = 0
    rejected_dup: int = 0
    rejected_contaminated: int = 0
    generation_errors: int = 0
    emitted: int = 0
    verified: int = 0

    def summary(self) -> str:
        return (
            f"generated={self.generated} rejected-dup={self.rejected_dup} "
            f"rejected-contaminated={self.rejected_contaminated} "
            f"generation-errors={self.generation_errors} "
            f"emitted={self.emitted} verified={self.verified}"
        )


@dataclass
class GenResult:
    instances: list[ProblemInstance]
    rejections: list[Rejection]
    funnel: GenFunnel
    rewrite_log: list[str] = field(default_factory=list)


def generate_instances(
    counts: dict[str, int],
    master_seed: int,
    forge_config: ForgeConfig,
    db: FingerprintDb | None = None,
) -> GenResult:
    """Forge per-category targets, deduplicating and decontaminating as we go.

    Rejected draws are replaced by fresh seeds from the same stream, so the
    output hits the configured counts exactly and a rerun with the same
    (counts, seed) is byte-identical.
    """
    db = db if db is not None else FingerprintDb()
    seed_stream = random.Random(master_seed)
    funnel = GenFunnel()
    rejections: list[Rejection] = []
    instances: list[ProblemInstance] = []

    for category in ("kmap", "fsm", "wave"):
        target = counts.get(category, 0)
        kinds = CATEGORY_KINDS[category]
        emitted = 0
        attempts = 0
        budget = OVERSAMPLE_FACTOR * target + 1000
        while emitted < target:
            attempts += 1
            if attempts > budget:
                raise GenerationError(
                    f"category {category}: attempt budget exhausted at "
                    f"{emitted}/{target} (space saturated?)"
                )
            draw_seed = seed_stream.getrandbits(48)
            kind = kinds[draw_seed % len(kinds)]
            try:
                instance = forge_problem(kind, draw_seed, forge_config)
            except RuntimeError:
                funnel.generation_errors += 1
                continue
            funnel.generated += 1
            digest = instance.fingerprint
            if digest in db:
                label = db.label(digest)
                if label == "generated":
                    funnel.rejected_dup += 1
                    rejections.append(Rejection(instance.instance_id, "DUP", label))
                else:
                    funnel.rejected_contaminated += 1
                    rejections.append(
                        Rejection(instance.instance_id, "CONTAMINATED", label)
                    )
                continue
            db.add(digest, "generated")
            instances.append(instance)
            emitted += 1
    funnel.emitted = len(instances)
    return GenResult(instances, rejections, funnel)


def verify_instances(
    instances: list[ProblemInstance],
    mode: str,
    sim_config: SimulatorConfig,
    rng_seed: int = 0,
) -> int:
    """Run paired-bench verification through the external simulator contract.

    mode: "off", "full", or "sample:<fraction>". Raises VerificationError on
    the first failing instance; returns the number verified.
    """
    if mode == "off" or not instances:
        return 0
    if mode == "full":
        chosen = list(range(len(instances)))
    else:
        fraction = float(mode.split(":", 1)[1])
        count = max(1, int(fraction * len(instances)))
        rng = random.Random(rng_seed)
        chosen = sorted(rng.sample(range(len(instances)), min(count, len(instances))))

    jobs = []
    for index in chosen:
        instance = instances[index]
        artifact = instance.provenance["artifact"]
        source = instance.provenance["source"]
        _, tb_text = emit_testbench(
            artifact, source, rng_seed=instance.seed, coverage="verify"
        )
        jobs.append({"solution.v": instance.solution, "tb.v": tb_text})
    results = run_jobs(jobs, sim_config)
    for index, result in zip(chosen, results):
        if not result.passed:
            instance = instances[index]
            raise VerificationError(
                f"instance {instance.instance_id} failed verification:\n"
                f"{result.compile_output[-300:]}\n{result.run_output[-300:]}"
            )
    return len(chosen)


def run_generation(config: RunConfig) -> GenResult:
    db = load_benchmark_templates(config.template_db)
    result = generate_instances(config.counts, config.seed, config.forge, db)
    if config.rewrite_fraction > 0.0:
        from .config import build_provider
        from .forge import rewrite_instructions

        provider = build_provider(config.provider)
        result.instances, result.rewrite_log = rewrite_instructions(
            result.instances,
            provider,
            fraction=config.rewrite_fraction,
            rng_seed=config.rewrite_seed,
        )
    result.funnel.verified = verify_instances(
        result.instances, config.verify, config.simulator, rng_seed=config.seed
    )
    return result


def result_records(result: GenResult):
    return [to_record(instance) for instance in result.instances]
